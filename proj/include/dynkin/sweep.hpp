#pragma once

// Comparative statics, value curves and a sample path of the adjusted
// belief, emitted as data for external plotting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "equilibrium.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "simulator.hpp"

namespace dynkin {

enum class SweepParam { mu0, mu1, sigma, eps };

inline const char* to_string(SweepParam p) {
    switch (p) {
    case SweepParam::mu0:
        return "mu0";
    case SweepParam::mu1:
        return "mu1";
    case SweepParam::sigma:
        return "sigma";
    case SweepParam::eps:
        return "eps";
    }
    return "?";
}

inline SweepParam parse_sweep_param(const std::string& s) {
    if (s == "mu0")
        return SweepParam::mu0;
    if (s == "mu1")
        return SweepParam::mu1;
    if (s == "sigma")
        return SweepParam::sigma;
    if (s == "eps")
        return SweepParam::eps;
    throw std::invalid_argument("unknown sweep parameter '" + s + "' (mu0, mu1, sigma, eps)");
}

inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1)
        throw std::invalid_argument("grid needs at least one point");
    if (n == 1)
        return {lo};
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
    g.back() = hi;
    return g;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi > 0.0))
        throw std::invalid_argument("log grid needs positive end points");
    auto g = linspace(std::log(lo), std::log(hi), n);
    for (auto& v : g)
        v = std::exp(v);
    g.front() = lo;
    g.back() = hi;
    return g;
}

/// sigma and eps are scale quantities and get log spacing.
inline bool log_spaced(SweepParam p) { return p == SweepParam::sigma || p == SweepParam::eps; }

inline std::vector<double> sweep_grid(SweepParam p, double lo, double hi, int n) {
    return log_spaced(p) ? logspace(lo, hi, n) : linspace(lo, hi, n);
}

struct SweepRange {
    double lo, hi;
};

inline SweepRange default_range(SweepParam p) {
    switch (p) {
    case SweepParam::mu0:
        return {-5.0, -0.1};
    case SweepParam::mu1:
        return {0.25, 3.0};
    case SweepParam::sigma:
        return {0.2, 2.0};
    case SweepParam::eps:
        return {0.02, 0.5};
    }
    return {0.0, 0.0};
}

inline constexpr int kDefaultSweepPoints = 25;

struct SweepSpec {
    SweepParam parameter = SweepParam::mu1;
    std::vector<double> values;
    ModelParams base;
    unsigned threads = 0;
};

inline SweepSpec default_sweep(SweepParam p, const ModelParams& base = base_case()) {
    const auto r = default_range(p);
    return {p, sweep_grid(p, r.lo, r.hi, kDefaultSweepPoints), base};
}

struct SweepRow {
    double value = 0.0;
    double A = NAN, B = NAN, a = NAN, b = NAN;
    std::string status;  // "ok", "skipped: ...", "failed: ..."
    bool ok() const { return status == "ok"; }
};

struct SweepResult {
    SweepParam parameter;
    std::vector<SweepRow> rows;
};

inline ModelParams with_value(ModelParams p, SweepParam which, double v) {
    switch (which) {
    case SweepParam::mu0:
        p.mu0 = v;
        break;
    case SweepParam::mu1:
        p.mu1 = v;
        break;
    case SweepParam::sigma:
        p.sigma = v;
        break;
    case SweepParam::eps:
        p.eps = v;
        break;
    }
    return p;
}

/// One equilibrium solve per value; failures are recorded per row.
inline SweepResult run_sweep(const SweepSpec& spec) {
    SweepResult res{spec.parameter, std::vector<SweepRow>(spec.values.size())};
    parallel_for(spec.values.size(), spec.threads, [&](std::size_t i) {
        SweepRow& row = res.rows[i];
        row.value = spec.values[i];
        const ModelParams p = with_value(spec.base, spec.parameter, row.value);
        if (auto bad = violations(p); !bad.empty()) {
            row.status = "skipped: " + bad.front();
            return;
        }
        try {
            const auto sol = build_solution(p);
            row.A = sol.A;
            row.B = sol.B;
            row.a = sol.a();
            row.b = sol.b();
            row.status = "ok";
        } catch (const std::exception& e) {
            row.status = std::string("failed: ") + e.what();
            std::replace(row.status.begin(), row.status.end(), ',', ';');
        }
    });
    return res;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    os << "param,value,A,B,a,b,status\n";
    for (const auto& row : r.rows)
        os << to_string(r.parameter) << ',' << fmt17(row.value) << ',' << fmt17(row.A) << ','
           << fmt17(row.B) << ',' << fmt17(row.a) << ',' << fmt17(row.b) << ',' << row.status << '\n';
}

struct ValueRow {
    double pi;
    double value_uninformed;  // (1 - pi) V0 + pi V1
    double V0;
    double V1;
};

inline std::vector<ValueRow> value_curves(const EquilibriumSolution& sol, const std::vector<double>& pi_grid) {
    std::vector<ValueRow> rows;
    rows.reserve(pi_grid.size());
    for (double pi : pi_grid) {
        const double phi = belief_to_ratio(pi);
        const double v0 = sol.V0(phi), v1 = sol.V1(phi);
        rows.push_back({pi, (1.0 - pi) * v0 + pi * v1, v0, v1});
    }
    return rows;
}

inline void write_values_csv(std::ostream& os, const std::vector<ValueRow>& rows) {
    os << "pi,value_uninformed,V0,V1\n";
    for (const auto& r : rows)
        os << fmt17(r.pi) << ',' << fmt17(r.value_uninformed) << ',' << fmt17(r.V0) << ',' << fmt17(r.V1)
           << '\n';
}

struct FigurePath {
    Trajectory path;  // reflected at B, truncated at tau_A
    HitTime tau_a;
    double a = 0.0, b = 0.0;
};

/// A physical-measure path of the adjusted belief, run until it first
/// reaches a (or the horizon). `cfg.seed` selects the path; the initial
/// belief is params.prior.
inline FigurePath sample_path_figure(const EquilibriumSolution& sol, SimConfig cfg, std::uint64_t path = 0) {
    cfg.measure = Measure::physical;
    cfg.barrier = sol.B;
    cfg.lower = sol.A;
    FigurePath f;
    f.path = simulate_phi(cfg, sol.params, path);
    reflect(f.path, sol.B);
    f.tau_a = first_hit_lower(f.path, sol.A);
    if (!f.tau_a.censored)
        truncate(f.path, f.tau_a.index);
    f.a = sol.a();
    f.b = sol.b();
    return f;
}

inline void write_figure_path_csv(std::ostream& os, const FigurePath& f) {
    os << "# a=" << fmt17(f.a) << "\n# b=" << fmt17(f.b) << '\n';
    if (f.path.theta)
        os << "# theta=" << *f.path.theta << '\n';
    os << "# tau_a=" << fmt17(f.tau_a.time) << (f.tau_a.censored ? " (censored)" : "") << '\n';
    os << "t,PiStar,Gamma\n";
    for (std::size_t k = 0; k < f.path.size(); ++k)
        os << fmt17(f.path.times[k]) << ',' << fmt17(f.path.PiStar[k]) << ',' << fmt17(f.path.Gamma[k]) << '\n';
}

}  // namespace dynkin
