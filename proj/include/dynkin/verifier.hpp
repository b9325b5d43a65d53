#pragma once

// Monte Carlo checks of the closed-form equilibrium.
//
// Payoffs per unit x, with tau_A the first grid time the equilibrium
// reflected ratio falls to A:
//   J0   = E~0[ e^{mu0 tau} ]                                    (Gamma0 = 0)
//   J1   = E~1[ e^{mu1 tau}(1 - G_tau) + (1+eps) sum e^{mu1 t} dG ]
//   Jhat = E~0[ e^{mu0 tau}(1 + PhiB_tau) + (1+eps) sum e^{mu0 t} Phi dG ]
// Every path is simulated at dt and at coarser levels 2dt, 4dt, ... built
// from the same normals, so dt-halving comparisons use common random
// numbers. Censored paths contribute only their accrued payoff to the mean;
// an upper bound on the missing remainder is reported separately.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "equilibrium.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulator.hpp"

namespace dynkin {

class config_mismatch : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Statistical pass threshold, in standard errors.
inline constexpr double kSigmaBand = 3.0;

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    double dt = 0.0;
    double horizon = 0.0;
    double censored_fraction = 0.0;
    double coarse_mean = 0.0;          // same paths at 2 dt
    double discretization_bias = 0.0;  // dt-halving estimate of the O(sqrt dt) bias
    double truncation_bound = 0.0;     // bound on payoff missing from censored paths

    double bias_bound() const { return discretization_bias + truncation_bound; }
    // The rounding floor only matters for degenerate (immediate-stop) runs.
    double tolerance() const {
        return kSigmaBand * std_error + bias_bound() + 1e-12 * std::max(1.0, std::abs(mean));
    }
    bool matches(double oracle) const { return std::abs(mean - oracle) <= tolerance(); }
};

// ---------------------------------------------------------------------------
// Path engine

struct EngineSpec {
    Measure measure = Measure::tilted0;
    double phi = 1.0;
    int levels = 2;  // level k uses step dt * 2^k
    // tilted0 columns: one J0 per jump probability (0 = equilibrium), then Jhat.
    std::vector<double> jump_probs{0.0};
    // tilted1 columns: one J1 per reflection level of the informed player.
    std::vector<double> p2_barriers;
};

struct EngineOutput {
    std::size_t n_paths = 0;
    int levels = 0;
    int columns = 0;
    // Indexed [level][column][path].
    std::vector<std::vector<std::vector<double>>> payoff;
    std::vector<std::vector<std::vector<double>>> remainder;
    // Indexed [level][path].
    std::vector<std::vector<char>> censored;

    const std::vector<double>& samples(int level, int column) const { return payoff[level][column]; }
};

namespace detail {

struct LevelState {
    double lphi = 0.0;
    double lmax = 0.0;
    double acc = 0.0;  // accumulated normals since the last coarse step
    int acc_count = 0;
    bool done = false;
    std::vector<double> keep;      // 1 - Gamma' per informed-player barrier
    std::vector<double> integral;  // (1+eps)-weighted stopping-intensity integral per column
};

}  // namespace detail

inline EngineOutput run_engine(const EquilibriumSolution& sol, const EngineSpec& spec, const SimConfig& cfg) {
    validate(cfg);
    if (spec.measure == Measure::physical)
        throw config_mismatch("payoff engine runs under a tilted measure");
    if (!(spec.phi > 0.0))
        throw std::domain_error("phi must be positive");
    if (spec.levels < 1 || spec.levels > 8)
        throw std::invalid_argument("levels must lie in [1,8]");
    const bool tilt1 = spec.measure == Measure::tilted1;
    if (tilt1 && spec.p2_barriers.empty())
        throw std::invalid_argument("tilted1 engine needs at least one informed-player barrier");

    const ModelParams& p = sol.params;
    const double ge = 1.0 + p.eps;
    const double mu = tilt1 ? p.mu1 : p.mu0;
    const double lA = std::log(sol.A), lB = std::log(sol.B), lphi0 = std::log(spec.phi);
    const int ncols = tilt1 ? static_cast<int>(spec.p2_barriers.size())
                            : static_cast<int>(spec.jump_probs.size()) + 1;
    const int jhat_col = tilt1 ? -1 : ncols - 1;
    const std::size_t steps = cfg.steps();
    const double horizon = static_cast<double>(steps) * cfg.dt;
    const LogStep unit = log_step(p, spec.measure, 0, 1.0);  // per unit time; vol = omega
    std::vector<double> lbars;
    for (double b : spec.p2_barriers) {
        if (!(b > 0.0))
            throw std::invalid_argument("barrier must be positive");
        lbars.push_back(std::log(b));
    }

    EngineOutput out;
    out.n_paths = cfg.n_paths;
    out.levels = spec.levels;
    out.columns = ncols;
    out.payoff.assign(spec.levels, std::vector<std::vector<double>>(ncols, std::vector<double>(cfg.n_paths)));
    out.remainder = out.payoff;
    out.censored.assign(spec.levels, std::vector<char>(cfg.n_paths, 0));

    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t path) {
        auto eng = make_stream(cfg.seed, path, StreamRole::path_noise);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<detail::LevelState> lv(spec.levels);

        // Settles a level at time t (stopped or censored).
        auto finish = [&](int k, double t, bool censored) {
            auto& s = lv[k];
            s.done = true;
            const double disc = std::exp(mu * t);
            const double phib = std::exp(s.lphi + std::min(0.0, lB - s.lmax));
            out.censored[k][path] = censored ? 1 : 0;
            for (int c = 0; c < ncols; ++c) {
                double pay = 0.0, rem = 0.0;
                if (tilt1) {
                    pay = s.integral[c] + (censored ? 0.0 : disc * s.keep[c]);
                    rem = censored ? ge * disc * s.keep[c] : 0.0;
                } else if (c == jhat_col) {
                    pay = s.integral[c] + (censored ? 0.0 : disc * (1.0 + phib));
                    rem = censored ? disc * (1.0 + ge * phib) : 0.0;
                } else {
                    const double q = spec.jump_probs[c];
                    pay = q * ge + (censored ? 0.0 : (1.0 - q) * disc);
                    rem = censored ? (1.0 - q) * disc : 0.0;
                }
                out.payoff[k][c][path] = pay;
                out.remainder[k][c][path] = rem;
            }
        };

        for (int k = 0; k < spec.levels; ++k) {
            auto& s = lv[k];
            s.lphi = lphi0;
            s.lmax = lphi0;
            s.integral.assign(ncols, 0.0);
            if (tilt1) {
                s.keep.resize(ncols);
                for (int c = 0; c < ncols; ++c) {
                    s.keep[c] = reflection_factor(spec.phi, spec.p2_barriers[c]);
                    s.integral[c] = ge * (1.0 - s.keep[c]);  // initial jump
                }
            } else {
                s.keep.assign(1, reflection_factor(spec.phi, sol.B));
                s.integral[jhat_col] = ge * spec.phi * (1.0 - s.keep[0]);
            }
            if (s.lphi + std::min(0.0, lB - s.lmax) <= lA)
                finish(k, 0.0, false);
        }

        int live = 0;
        for (const auto& s : lv)
            live += s.done ? 0 : 1;

        for (std::size_t step = 1; step <= steps && live > 0; ++step) {
            const double xi = normal(eng);
            for (int k = 0; k < spec.levels; ++k) {
                auto& s = lv[k];
                if (s.done)
                    continue;
                s.acc += xi;
                if (++s.acc_count < (1 << k))
                    continue;
                const double h = cfg.dt * (1 << k);
                s.lphi += unit.phi_drift_dt * h + unit.phi_vol_sqdt * std::sqrt(cfg.dt) * s.acc;
                s.acc = 0.0;
                s.acc_count = 0;
                const double t = static_cast<double>(step) * cfg.dt;
                if (s.lphi > s.lmax) {
                    s.lmax = s.lphi;
                    const double disc = std::exp(mu * t);
                    if (tilt1) {
                        for (int c = 0; c < ncols; ++c) {
                            const double keep = std::exp(std::min(0.0, lbars[c] - s.lmax));
                            s.integral[c] += ge * disc * (s.keep[c] - keep);
                            s.keep[c] = keep;
                        }
                    } else {
                        const double keep = std::exp(std::min(0.0, lB - s.lmax));
                        s.integral[jhat_col] += ge * disc * std::exp(s.lphi) * (s.keep[0] - keep);
                        s.keep[0] = keep;
                    }
                }
                if (s.lphi + std::min(0.0, lB - s.lmax) <= lA) {
                    finish(k, t, false);
                    --live;
                }
            }
        }
        for (int k = 0; k < spec.levels; ++k)
            if (!lv[k].done)
                finish(k, horizon, true);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Estimators

namespace detail {

struct Moments {
    double mean = 0.0;
    double std_error = 0.0;
};

// Neumaier-compensated sum in index order.
inline double compensated_sum(const std::vector<double>& x) {
    double s = 0.0, c = 0.0;
    for (double v : x) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

// Two-pass mean and standard error, reduced in path order.
inline Moments moments(const std::vector<double>& x) {
    Moments m;
    const auto n = static_cast<double>(x.size());
    if (x.empty())
        return m;
    m.mean = compensated_sum(x) / n;
    if (x.size() < 2)
        return m;
    double ss = 0.0;
    for (double v : x)
        ss += (v - m.mean) * (v - m.mean);
    m.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return m;
}

inline double mean_of(const std::vector<double>& x) { return moments(x).mean; }

}  // namespace detail

/// Builds an estimate from per-path samples at dt and 2 dt. With bias
/// c sqrt(dt), halving dt changes the mean by c sqrt(dt)(sqrt 2 - 1); the
/// bias bound inflates the observed change by three paired standard errors.
inline MCEstimate make_estimate(const std::vector<double>& fine, const std::vector<double>& coarse,
                                const std::vector<double>& remainder, const std::vector<char>& censored,
                                const SimConfig& cfg) {
    MCEstimate e;
    const auto m = detail::moments(fine);
    e.mean = m.mean;
    e.std_error = m.std_error;
    e.n_paths = fine.size();
    e.dt = cfg.dt;
    e.horizon = static_cast<double>(cfg.steps()) * cfg.dt;
    std::size_t nc = 0;
    for (char c : censored)
        nc += c ? 1 : 0;
    e.censored_fraction = fine.empty() ? 0.0 : static_cast<double>(nc) / static_cast<double>(fine.size());
    e.truncation_bound = detail::mean_of(remainder);
    if (!coarse.empty()) {
        std::vector<double> d(fine.size());
        for (std::size_t i = 0; i < fine.size(); ++i)
            d[i] = fine[i] - coarse[i];
        const auto md = detail::moments(d);
        e.coarse_mean = detail::mean_of(coarse);
        e.discretization_bias = (std::abs(md.mean) + kSigmaBand * md.std_error) / (std::sqrt(2.0) - 1.0);
    } else {
        e.coarse_mean = e.mean;
    }
    return e;
}

inline MCEstimate estimate_column(const EngineOutput& o, int column, const SimConfig& cfg) {
    static const std::vector<double> none;
    return make_estimate(o.samples(0, column), o.levels > 1 ? o.samples(1, column) : none,
                         o.remainder[0][column], o.censored[0], cfg);
}

namespace detail {
inline void require_measure(const SimConfig& cfg, Measure m, const char* what) {
    if (cfg.measure != m)
        throw config_mismatch(std::string(what) + " requires measure " + to_string(m) + ", got " +
                              to_string(cfg.measure));
}
}  // namespace detail

inline MCEstimate mc_J0(const EquilibriumSolution& sol, double phi, const SimConfig& cfg) {
    detail::require_measure(cfg, Measure::tilted0, "J0");
    EngineSpec spec{Measure::tilted0, phi, 2, {0.0}, {}};
    return estimate_column(run_engine(sol, spec, cfg), 0, cfg);
}

inline MCEstimate mc_J1(const EquilibriumSolution& sol, double phi, const SimConfig& cfg) {
    detail::require_measure(cfg, Measure::tilted1, "J1");
    EngineSpec spec{Measure::tilted1, phi, 2, {}, {sol.B}};
    return estimate_column(run_engine(sol, spec, cfg), 0, cfg);
}

inline MCEstimate mc_Jhat(const EquilibriumSolution& sol, double phi, const SimConfig& cfg) {
    detail::require_measure(cfg, Measure::tilted0, "Jhat");
    EngineSpec spec{Measure::tilted0, phi, 2, {0.0}, {}};
    return estimate_column(run_engine(sol, spec, cfg), 1, cfg);
}

// ---------------------------------------------------------------------------
// Reports

struct CheckRow {
    std::string check;
    double phi = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double oracle = 0.0;
    double tolerance = 0.0;
    double bias_bound = 0.0;
    double censored_fraction = 0.0;
    bool pass = false;
};

inline CheckRow check_against(std::string name, double phi, const MCEstimate& e, double oracle) {
    return {std::move(name), phi, e.mean, e.std_error, oracle, e.tolerance(), e.bias_bound(),
            e.censored_fraction, e.matches(oracle)};
}

/// J0, J1 and Jhat at one phi against their closed forms, plus the
/// decomposition Jhat = J0 + phi J1 on paired paths. Both measures are run
/// with the same seed, so path i sees the same normals under each.
inline std::vector<CheckRow> mc_oracle_checks(const EquilibriumSolution& sol, double phi, SimConfig cfg) {
    cfg.measure = Measure::tilted0;
    const auto o0 = run_engine(sol, EngineSpec{Measure::tilted0, phi, 2, {0.0}, {}}, cfg);
    const auto j0 = estimate_column(o0, 0, cfg);
    const auto jh = estimate_column(o0, 1, cfg);
    SimConfig c1 = cfg;
    c1.measure = Measure::tilted1;
    const auto o1 = run_engine(sol, EngineSpec{Measure::tilted1, phi, 2, {}, {sol.B}}, c1);
    const auto j1 = estimate_column(o1, 0, c1);

    std::vector<CheckRow> rows;
    rows.push_back(check_against("J0", phi, j0, sol.V0(phi)));
    rows.push_back(check_against("J1", phi, j1, sol.V1(phi)));
    rows.push_back(check_against("Jhat", phi, jh, sol.V(phi)));

    const std::size_t n = cfg.n_paths;
    std::vector<double> d(n), rem(n);
    std::vector<char> cens(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = o0.payoff[0][1][i] - o0.payoff[0][0][i] - phi * o1.payoff[0][0][i];
        rem[i] = o0.remainder[0][1][i] + o0.remainder[0][0][i] + phi * o1.remainder[0][0][i];
        cens[i] = o0.censored[0][i] || o1.censored[0][i];
    }
    // The identity holds exactly for the grid estimators, so no
    // discretization allowance is added.
    auto id = make_estimate(d, {}, rem, cens, cfg);
    rows.push_back(check_against("Jhat_decomposition", phi, id, 0.0));
    return rows;
}

struct DeviationRow {
    int player = 1;
    std::string strategy;  // "threshold", "reflection", "jump"
    double parameter = 0.0;
    double phi = 0.0;
    double equilibrium = 0.0;
    double deviation = 0.0;        // grid estimate at dt for Monte Carlo rows
    double improvement = 0.0;      // gain of the deviating player; bias-corrected for Monte Carlo rows
    double raw_improvement = 0.0;  // same gain from the dt grid alone
    double std_error = 0.0;        // of `improvement`, paired; zero for closed-form rows
    double raw_std_error = 0.0;    // of `raw_improvement`
    double tolerance = 0.0;
    std::string method;  // "closed-form" or "monte-carlo"
    bool pass = false;
};

struct DeviationReport {
    std::vector<DeviationRow> rows;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const DeviationRow& r) { return r.pass; });
    }
};

/// Closed-form deviations of the uninformed player to other stopping
/// thresholds; the player maximises, so no W_{A'} may exceed V.
inline DeviationReport deviations_player1(const EquilibriumSolution& sol, const std::vector<double>& aprime_grid,
                                          const std::vector<double>& phi_grid) {
    constexpr double tol = 1e-9;
    DeviationReport r;
    for (double ap : aprime_grid) {
        const DeviationValue w(sol, ap);
        for (double phi : phi_grid) {
            const double v = sol.V(phi), dv = w(phi);
            r.rows.push_back(
                {1, "threshold", ap, phi, v, dv, dv - v, dv - v, 0.0, 0.0, tol, "closed-form", dv - v <= tol});
        }
    }
    return r;
}

namespace detail {

/// Paired gain of a minimising deviator, per path: eq - dev on the dt grid,
/// and the same with the O(sqrt dt) term removed using the 2 dt grid,
///   g = g_dt + (g_dt - g_2dt) / (sqrt 2 - 1).
struct PairedGain {
    Moments raw, corrected;
};

inline PairedGain paired_gain(const EngineOutput& o, int eq_col, int dev_col) {
    const std::size_t n = o.n_paths;
    std::vector<double> raw(n), corr(n);
    const double k = 1.0 / (std::sqrt(2.0) - 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double g0 = o.payoff[0][eq_col][i] - o.payoff[0][dev_col][i];
        const double g1 = o.payoff[1][eq_col][i] - o.payoff[1][dev_col][i];
        raw[i] = g0;
        corr[i] = g0 + (g0 - g1) * k;
    }
    return {moments(raw), moments(corr)};
}

}  // namespace detail

/// Monte Carlo deviations of the informed player with tau_A held fixed:
/// other reflection levels B' in the high-drift regime, and immediate
/// stopping with probability p in the low-drift regime. The player
/// minimises. Grid payoffs carry an O(sqrt dt) bias that differs between
/// strategies, so the paired gain is extrapolated from dt and 2 dt on the
/// same normals; a row fails when that gain exceeds three of its paired
/// standard errors.
inline DeviationReport deviations_player2(const EquilibriumSolution& sol, const std::vector<double>& bprime_grid,
                                          double phi, SimConfig cfg,
                                          const std::vector<double>& jump_probs = {0.5, 1.0}) {
    std::vector<double> barriers{sol.B};
    for (double b : bprime_grid) {
        if (!(b > sol.A) || !std::isfinite(b))
            throw std::domain_error("invalid deviation: reflection level must exceed A");
        barriers.push_back(b);
    }
    DeviationReport r;
    auto add = [&](const char* strategy, double param, const EngineOutput& o, int col) {
        const auto g = detail::paired_gain(o, 0, col);
        const double eq = detail::mean_of(o.samples(0, 0));
        const double tol = kSigmaBand * g.corrected.std_error;
        r.rows.push_back({2, strategy, param, phi, eq, eq - g.raw.mean, g.corrected.mean, g.raw.mean,
                          g.corrected.std_error, g.raw.std_error, tol, "monte-carlo", g.corrected.mean <= tol});
    };

    cfg.measure = Measure::tilted1;
    if (barriers.size() > 1) {
        const auto o1 = run_engine(sol, EngineSpec{Measure::tilted1, phi, 2, {}, barriers}, cfg);
        for (std::size_t c = 1; c < barriers.size(); ++c)
            add("reflection", barriers[c], o1, static_cast<int>(c));
    }

    if (!jump_probs.empty()) {
        std::vector<double> probs{0.0};
        probs.insert(probs.end(), jump_probs.begin(), jump_probs.end());
        cfg.measure = Measure::tilted0;
        const auto o0 = run_engine(sol, EngineSpec{Measure::tilted0, phi, 2, probs, {}}, cfg);
        for (std::size_t c = 1; c < probs.size(); ++c)
            add("jump", probs[c], o0, static_cast<int>(c));
    }
    return r;
}

/// 25 thresholds spread over (0, B), with A itself included.
inline std::vector<double> default_aprime_grid(const EquilibriumSolution& sol) {
    std::vector<double> g;
    for (int k = 1; k <= 24; ++k)
        g.push_back(sol.B * k / 25.0);
    g.push_back(sol.A);
    std::sort(g.begin(), g.end());
    return g;
}

/// Nine points spanning (0, 2B].
inline std::vector<double> default_phi_grid(const EquilibriumSolution& sol) {
    std::vector<double> g;
    for (int k = 1; k <= 9; ++k)
        g.push_back(2.0 * sol.B * k / 9.0);
    return g;
}

inline std::vector<double> default_bprime_grid(const EquilibriumSolution& sol) {
    return {0.5 * sol.B, 0.75 * sol.B, 1.25 * sol.B, 1.5 * sol.B, 2.0 * sol.B};
}

}  // namespace dynkin
