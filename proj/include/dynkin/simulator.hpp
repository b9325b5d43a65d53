#pragma once

// Exact log-space simulation of the likelihood ratio Phi and the asset X,
// and the pathwise Skorokhod reflection of Phi at an upper barrier.
//
// Under the tilted measures Phi is a geometric Brownian motion with drift
// sigma*omega (regime 0) or sigma*omega + omega^2 (regime 1). Under the
// physical measure the regime is drawn first; Phi is then a martingale
// (theta = 0) or has drift omega^2 (theta = 1). X and Phi share one
// Brownian driver in every case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace dynkin {

enum class Measure { tilted0, tilted1, physical };

inline const char* to_string(Measure m) {
    switch (m) {
    case Measure::tilted0:
        return "tilted0";
    case Measure::tilted1:
        return "tilted1";
    case Measure::physical:
        return "physical";
    }
    return "?";
}

struct SimConfig {
    double dt = 1e-4;
    double horizon = 50.0;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    Measure measure = Measure::tilted0;
    double barrier = 1.0;
    std::optional<double> lower;
    unsigned threads = 0;  // 0 = all cores; never affects results

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
};

inline void validate(const SimConfig& c) {
    if (!(c.dt > 0.0) || !(c.horizon > 0.0) || !(c.dt < c.horizon))
        throw std::invalid_argument("simulation requires 0 < dt < horizon");
    if (c.n_paths == 0)
        throw std::invalid_argument("simulation requires at least one path");
    if (!(c.barrier > 0.0))
        throw std::invalid_argument("barrier must be positive");
    if (c.lower && !(*c.lower > 0.0 && *c.lower < c.barrier))
        throw std::invalid_argument("lower level must lie in (0, barrier)");
}

/// Per-step log increments: log Y += drift_dt + vol_sqdt * xi.
struct LogStep {
    double phi_drift_dt;
    double phi_vol_sqdt;
    double x_drift_dt;
    double x_vol_sqdt;
};

inline LogStep log_step(const ModelParams& p, Measure m, int theta, double dt) {
    const double w = (p.mu1 - p.mu0) / p.sigma;
    const double half_w2 = 0.5 * w * w, half_s2 = 0.5 * p.sigma * p.sigma;
    double phi_drift = 0.0, x_drift = 0.0;
    switch (m) {
    case Measure::tilted0:
        phi_drift = p.sigma * w - half_w2;
        x_drift = p.mu0 + half_s2;  // dX = (mu0 + sigma^2) X dt + sigma X dW~
        break;
    case Measure::tilted1:
        phi_drift = p.sigma * w + w * w - half_w2;
        x_drift = p.mu1 + half_s2;
        break;
    case Measure::physical:
        phi_drift = theta == 1 ? half_w2 : -half_w2;
        x_drift = (theta == 1 ? p.mu1 : p.mu0) - half_s2;
        break;
    }
    const double sq = std::sqrt(dt);
    return {phi_drift * dt, w * sq, x_drift * dt, p.sigma * sq};
}

/// 1 - Gamma for the reflection at `barrier` given the running maximum of Phi.
inline double reflection_factor(double running_max, double barrier) {
    return running_max > barrier ? barrier / running_max : 1.0;
}

struct Trajectory {
    double dt = 0.0;
    double barrier = std::numeric_limits<double>::quiet_NaN();
    std::optional<int> theta;  // physical measure only
    std::vector<double> times, X, Phi;
    // Filled by reflect().
    std::vector<double> PhiB, Gamma, L, PiStar;

    std::size_t size() const { return times.size(); }
    bool reflected() const { return PhiB.size() == Phi.size() && !Phi.empty(); }
};

/// Simulates Phi and X for path `path` of the configured measure. The
/// initial ratio defaults to the prior odds.
inline Trajectory simulate_phi(const SimConfig& cfg, const ModelParams& params, std::uint64_t path = 0,
                               std::optional<double> phi0 = std::nullopt) {
    validate(cfg);
    validate(params);
    Trajectory tr;
    tr.dt = cfg.dt;
    int theta = 0;
    if (cfg.measure == Measure::physical) {
        theta = regime_draw(cfg.seed, path, params.prior);
        tr.theta = theta;
    }
    const std::size_t n = cfg.steps();
    const LogStep st = log_step(params, cfg.measure, theta, cfg.dt);
    tr.times.resize(n + 1);
    tr.X.resize(n + 1);
    tr.Phi.resize(n + 1);
    auto eng = make_stream(cfg.seed, path, StreamRole::path_noise);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double start = phi0 ? *phi0 : belief_to_ratio(params.prior);
    if (!(start > 0.0) || !std::isfinite(start))
        throw std::domain_error("initial likelihood ratio must be positive");
    double lphi = std::log(start);
    double lx = std::log(params.x0);
    tr.times[0] = 0.0;
    tr.Phi[0] = start;
    tr.X[0] = params.x0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double xi = normal(eng);
        lphi += st.phi_drift_dt + st.phi_vol_sqdt * xi;
        lx += st.x_drift_dt + st.x_vol_sqdt * xi;
        tr.times[k] = static_cast<double>(k) * cfg.dt;
        tr.Phi[k] = std::exp(lphi);
        tr.X[k] = std::exp(lx);
    }
    return tr;
}

/// Pathwise Skorokhod reflection of Phi at `barrier`. With M the running
/// maximum of Phi (including the initial value),
///   PhiB = Phi * min(1, barrier / M),   Gamma = 1 - min(1, barrier / M),
///   L = barrier * (log max(1, M / barrier) - log max(1, phi0 / barrier)).
/// The map does not look at the measure that generated Phi.
inline void reflect(Trajectory& tr, double barrier) {
    if (tr.Phi.empty())
        throw std::invalid_argument("trajectory has no Phi path");
    if (!(barrier > 0.0))
        throw std::invalid_argument("barrier must be positive");
    const std::size_t n = tr.Phi.size();
    tr.barrier = barrier;
    tr.PhiB.resize(n);
    tr.Gamma.resize(n);
    tr.L.resize(n);
    tr.PiStar.resize(n);
    const double l0 = std::log(std::max(1.0, tr.Phi[0] / barrier));
    double running_max = tr.Phi[0];
    for (std::size_t k = 0; k < n; ++k) {
        running_max = std::max(running_max, tr.Phi[k]);
        const double r = reflection_factor(running_max, barrier);
        // On a new maximum above the barrier Phi * barrier / M is the barrier itself.
        tr.PhiB[k] = tr.Phi[k] >= running_max && r < 1.0 ? barrier : std::min(tr.Phi[k] * r, barrier);
        tr.Gamma[k] = 1.0 - r;
        tr.L[k] = barrier * (std::log(std::max(1.0, running_max / barrier)) - l0);
        tr.PiStar[k] = tr.PhiB[k] / (1.0 + tr.PhiB[k]);
    }
}

struct HitTime {
    double time = 0.0;
    bool censored = false;
    std::size_t index = 0;  // grid index of the event, or size() if censored
};

struct StopSample {
    HitTime tau_a;
    HitTime gamma_time;
    double uniform_draw = 0.0;
};

namespace detail {
inline void require_reflected(const Trajectory& tr) {
    if (!tr.reflected())
        throw std::invalid_argument("trajectory must be reflected first");
}
inline HitTime censored_at(const Trajectory& tr) {
    return {tr.times.empty() ? 0.0 : tr.times.back(), true, tr.size()};
}
}  // namespace detail

/// First grid time with PhiB <= lower.
inline HitTime first_hit_lower(const Trajectory& tr, double lower) {
    detail::require_reflected(tr);
    if (!(lower > 0.0 && lower < tr.barrier))
        throw std::invalid_argument("lower level must lie in (0, barrier)");
    for (std::size_t k = 0; k < tr.size(); ++k)
        if (tr.PhiB[k] <= lower)
            return {tr.times[k], false, k};
    return detail::censored_at(tr);
}

/// gamma = first grid time with Gamma > u.
inline HitTime randomised_stop_time(const Trajectory& tr, double u) {
    detail::require_reflected(tr);
    for (std::size_t k = 0; k < tr.size(); ++k)
        if (tr.Gamma[k] > u)
            return {tr.times[k], false, k};
    return detail::censored_at(tr);
}

inline StopSample draw_randomised_stop(const Trajectory& tr, double uniform) {
    if (!(uniform >= 0.0 && uniform <= 1.0))
        throw std::domain_error("uniform draw must lie in [0,1]");
    StopSample s;
    s.uniform_draw = uniform;
    s.gamma_time = randomised_stop_time(tr, uniform);
    s.tau_a = detail::censored_at(tr);
    return s;
}

inline StopSample draw_randomised_stop(const Trajectory& tr, double uniform, double lower) {
    StopSample s = draw_randomised_stop(tr, uniform);
    s.tau_a = first_hit_lower(tr, lower);
    return s;
}

/// Keeps grid points [0, last] only.
inline void truncate(Trajectory& tr, std::size_t last) {
    const std::size_t n = std::min(last + 1, tr.size());
    for (auto* v : {&tr.times, &tr.X, &tr.Phi, &tr.PhiB, &tr.Gamma, &tr.L, &tr.PiStar})
        if (v->size() > n)
            v->resize(n);
}

/// Formats a double with 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with columns t,X,Phi,PhiB,PiStar,Gamma,L.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    detail::require_reflected(tr);
    os << "t,X,Phi,PhiB,PiStar,Gamma,L\n";
    for (std::size_t k = 0; k < tr.size(); ++k) {
        os << fmt17(tr.times[k]) << ',' << fmt17(tr.X[k]) << ',' << fmt17(tr.Phi[k]) << ','
           << fmt17(tr.PhiB[k]) << ',' << fmt17(tr.PiStar[k]) << ',' << fmt17(tr.Gamma[k]) << ','
           << fmt17(tr.L[k]) << '\n';
    }
}

}  // namespace dynkin
