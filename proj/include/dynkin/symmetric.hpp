#pragma once

// Symmetric-information benchmark: both players share the prior, neither
// needs to randomise, and the game is a plain Dynkin game in phi. The
// value Vh solves the same Euler ODE as V between two stopping thresholds
// As < Bs, with value matching and smooth fit against the obstacles
// 1 + phi (uninformed player stops) and (1 + eps)(1 + phi) (informed
// player stops).

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "equilibrium.hpp"
#include "model.hpp"

namespace dynkin {

struct SymmetricSolution {
    ModelParams params;
    Exponents exps;
    double As;
    double Bs;
    double Dh1, Dh2;  // Vh = Dh1 phi^beta1 + Dh2 phi^beta2 on [As, Bs]
    int newton_iterations = 0;

    double a() const { return ratio_to_belief(As); }
    double b() const { return ratio_to_belief(Bs); }

    double Vh(double phi, Deriv d = Deriv::value) const {
        if (!(phi > 0.0))
            throw std::domain_error("phi must be positive");
        const double ge = 1.0 + params.eps;
        if (phi < As)
            return d == Deriv::value ? 1.0 + phi : d == Deriv::first ? 1.0 : 0.0;
        if (phi > Bs)
            return d == Deriv::value ? ge * (1.0 + phi) : d == Deriv::first ? ge : 0.0;
        const double b1 = exps.beta1, b2 = exps.beta2;
        switch (d) {
        case Deriv::value:
            return Dh1 * std::pow(phi, b1) + Dh2 * std::pow(phi, b2);
        case Deriv::first:
            return Dh1 * b1 * std::pow(phi, b1 - 1.0) + Dh2 * b2 * std::pow(phi, b2 - 1.0);
        case Deriv::second:
            return Dh1 * b1 * (b1 - 1.0) * std::pow(phi, b1 - 2.0) +
                   Dh2 * b2 * (b2 - 1.0) * std::pow(phi, b2 - 2.0);
        }
        return 0.0;
    }

    /// Common value per unit x, Vh / (1 + phi).
    double value(double phi) const { return Vh(phi) / (1.0 + phi); }

    /// Residuals of the four boundary conditions, in the order
    /// Vh(As) = 1 + As, Vh'(As+) = 1, Vh(Bs) = (1+eps)(1+Bs), Vh'(Bs-) = 1 + eps.
    std::array<double, 4> boundary_residuals() const {
        const double ge = 1.0 + params.eps, b1 = exps.beta1, b2 = exps.beta2;
        auto v = [&](double x) { return Dh1 * std::pow(x, b1) + Dh2 * std::pow(x, b2); };
        auto dv = [&](double x) {
            return Dh1 * b1 * std::pow(x, b1 - 1.0) + Dh2 * b2 * std::pow(x, b2 - 1.0);
        };
        return {v(As) - (1.0 + As), dv(As) - 1.0, v(Bs) - ge * (1.0 + Bs), dv(Bs) - ge};
    }
};

namespace detail {

struct SmoothFit {
    double d1, d2;
    std::array<double, 2> residual;
    bool ok;
};

// Eliminates Dh1, Dh2 through the two value-matching conditions and returns
// the two smooth-fit residuals.
inline SmoothFit symmetric_smooth_fit(const Exponents& e, double eps, double as, double bs) {
    SmoothFit out{0.0, 0.0, {0.0, 0.0}, false};
    if (!(as > 0.0 && bs > as) || !std::isfinite(bs))
        return out;
    const double b1 = e.beta1, b2 = e.beta2, ge = 1.0 + eps;
    const double a11 = std::pow(as, b1), a12 = std::pow(as, b2);
    const double a21 = std::pow(bs, b1), a22 = std::pow(bs, b2);
    const double det = a11 * a22 - a12 * a21;
    if (!std::isfinite(det) || det == 0.0)
        return out;
    const double r1 = 1.0 + as, r2 = ge * (1.0 + bs);
    out.d1 = (r1 * a22 - a12 * r2) / det;
    out.d2 = (a11 * r2 - a21 * r1) / det;
    out.residual = {out.d1 * b1 * a11 / as + out.d2 * b2 * a12 / as - 1.0,
                    out.d1 * b1 * a21 / bs + out.d2 * b2 * a22 / bs - ge};
    out.ok = std::isfinite(out.residual[0]) && std::isfinite(out.residual[1]);
    return out;
}

inline double norm2(const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); }

struct NewtonResult {
    double as, bs;
    int iterations;
    bool converged;
};

// Damped Newton on (As, Bs) with a forward-difference Jacobian.
inline NewtonResult symmetric_newton(const Exponents& e, double eps, double as, double bs) {
    constexpr double tol = 1e-12;
    constexpr double rel_step = 1e-7;
    constexpr int max_iter = 100;
    auto f = [&](double x, double y) { return symmetric_smooth_fit(e, eps, x, y); };
    SmoothFit cur = f(as, bs);
    if (!cur.ok)
        return {as, bs, 0, false};
    for (int it = 0; it < max_iter; ++it) {
        if (norm2(cur.residual) <= tol)
            return {as, bs, it, true};
        const double ha = rel_step * as, hb = rel_step * bs;
        const SmoothFit fa = f(as + ha, bs), fb = f(as, bs + hb);
        if (!fa.ok || !fb.ok)
            return {as, bs, it, false};
        const double j11 = (fa.residual[0] - cur.residual[0]) / ha;
        const double j21 = (fa.residual[1] - cur.residual[1]) / ha;
        const double j12 = (fb.residual[0] - cur.residual[0]) / hb;
        const double j22 = (fb.residual[1] - cur.residual[1]) / hb;
        const double det = j11 * j22 - j12 * j21;
        if (!std::isfinite(det) || det == 0.0)
            return {as, bs, it, false};
        const double da = -(cur.residual[0] * j22 - j12 * cur.residual[1]) / det;
        const double db = -(j11 * cur.residual[1] - j21 * cur.residual[0]) / det;
        double lambda = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            const double na = as + lambda * da, nb = bs + lambda * db;
            if (!(na > 0.0 && nb > na))
                continue;
            const SmoothFit trial = f(na, nb);
            if (trial.ok && norm2(trial.residual) < norm2(cur.residual)) {
                as = na;
                bs = nb;
                cur = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            return {as, bs, it, norm2(cur.residual) <= 1e3 * tol};
    }
    return {as, bs, max_iter, norm2(cur.residual) <= tol};
}

}  // namespace detail

/// Solves the symmetric benchmark, starting Newton from the asymmetric
/// thresholds and falling back to a log-spaced multi-start grid.
inline SymmetricSolution solve_symmetric(const ModelParams& p) {
    validate(p);
    const EquilibriumSolution asym = build_solution(p);
    const Exponents e = asym.exps;

    std::vector<std::array<double, 2>> starts{{asym.A, asym.B}};
    for (int i = -6; i <= 2; ++i)
        for (int j = i + 1; j <= 4; ++j)
            starts.push_back({std::pow(2.0, i) * asym.A, std::pow(2.0, j) * asym.A});

    for (const auto& s0 : starts) {
        const auto nr = detail::symmetric_newton(e, p.eps, s0[0], s0[1]);
        if (!nr.converged)
            continue;
        const auto fit = detail::symmetric_smooth_fit(e, p.eps, nr.as, nr.bs);
        SymmetricSolution sol{p, e, nr.as, nr.bs, fit.d1, fit.d2, nr.iterations};
        bool ok = true;
        for (double r : sol.boundary_residuals())
            ok = ok && std::abs(r) <= 1e-10;
        if (ok)
            return sol;
    }
    throw numerical_failure("symmetric benchmark: Newton failed from every start");
}

struct VoiRow {
    double pi;
    double phi;
    double u_sym;   // symmetric-information value per unit x
    double u_asym;  // uninformed player's value under asymmetric information
    double diff;    // u_sym - u_asym
};

struct VoiCurve {
    std::vector<VoiRow> rows;
};

inline VoiCurve value_of_information(const EquilibriumSolution& asym, const SymmetricSolution& sym,
                                     const std::vector<double>& pi_grid) {
    VoiCurve c;
    c.rows.reserve(pi_grid.size());
    for (double pi : pi_grid) {
        const double phi = belief_to_ratio(pi);
        const double us = sym.value(phi), ua = asym.uninformed_value(phi);
        c.rows.push_back({pi, phi, us, ua, us - ua});
    }
    return c;
}

inline VoiCurve value_of_information(const ModelParams& p, const std::vector<double>& pi_grid) {
    for (double pi : pi_grid)
        if (!(pi > 0.0 && pi < 1.0))
            throw std::domain_error("belief grid must lie in (0,1)");
    return value_of_information(build_solution(p), solve_symmetric(p), pi_grid);
}

/// N interior points of (0,1): i / (N + 1), i = 1..N.
inline std::vector<double> open_unit_grid(int n) {
    std::vector<double> g;
    for (int i = 1; i <= n; ++i)
        g.push_back(static_cast<double>(i) / (n + 1));
    return g;
}

}  // namespace dynkin
