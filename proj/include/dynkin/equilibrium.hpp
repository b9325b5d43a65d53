#pragma once

// Closed-form Nash equilibrium of the linear-payoff game.
//
// The uninformed player stops the first time the adjusted likelihood ratio
// falls to A; the informed player (high-drift regime only) reflects it at B
// with the minimal randomised stopping intensity. Between the thresholds
// every value function solves an Euler ODE, so all of them are sums of
// power functions with exponents beta1 in (0,1) and beta2 < 0.
//
// All values are per unit of the initial asset level x.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"

namespace dynkin {

enum class Deriv { value = 0, first = 1, second = 2 };

struct Exponents {
    double beta1;  // in (0,1)
    double beta2;  // < 0
};

/// q(beta) = (omega^2/2) beta (beta - 1) + sigma omega beta + mu0.
inline double exponent_polynomial(const ModelParams& p, double beta) {
    const double omega = (p.mu1 - p.mu0) / p.sigma;
    return 0.5 * omega * omega * beta * (beta - 1.0) + p.sigma * omega * beta + p.mu0;
}

inline Exponents compute_exponents(const ModelParams& p) {
    const double omega = (p.mu1 - p.mu0) / p.sigma;
    const double a = 0.5 * omega * omega;
    const double b = p.sigma * omega - a;
    const double c = p.mu0;
    // c < 0 < a, so the discriminant is positive and the roots have
    // opposite signs. Cancellation-free form of the quadratic formula.
    const double disc = std::sqrt(b * b - 4.0 * a * c);
    const double qq = -0.5 * (b + std::copysign(disc, b));
    double r1 = qq / a;
    double r2 = c / qq;
    Exponents e{std::max(r1, r2), std::min(r1, r2)};
    // One Newton polish per root.
    for (double* r : {&e.beta1, &e.beta2}) {
        const double dq = 2.0 * a * *r + b;
        if (dq != 0.0)
            *r -= exponent_polynomial(p, *r) / dq;
    }
    if (!(e.beta1 > 0.0 && e.beta1 < 1.0 && e.beta2 < 0.0))
        throw numerical_failure("exponent sign pattern violated");
    return e;
}

/// h(z) whose unique zero on (0,1) is the threshold ratio A/B.
inline double threshold_ratio_residual(const Exponents& e, double eps, double z) {
    const double b1 = e.beta1, b2 = e.beta2;
    return (1.0 - b2) * std::pow(z, b1 - 1.0) + (b1 - 1.0) * std::pow(z, b2 - 1.0) -
           (b1 - b2) / (1.0 + eps);
}

inline double threshold_ratio_residual_derivative(const Exponents& e, double z) {
    const double b1 = e.beta1, b2 = e.beta2;
    return (1.0 - b2) * (b1 - 1.0) * (std::pow(z, b1 - 2.0) - std::pow(z, b2 - 2.0));
}

/// Bisection on the strictly increasing h; the lower end of the bracket is
/// shrunk geometrically until h changes sign.
inline double solve_threshold_ratio(const Exponents& e, double eps) {
    if (!(eps > 0.0))
        throw invalid_parameters({"eps"}, "eps must be positive");
    auto h = [&](double z) { return threshold_ratio_residual(e, eps, z); };
    double hi = 1.0;
    if (!(h(hi) > 0.0))
        throw numerical_failure("bracket failure: h(1) <= 0");
    double lo = 0.5;
    while (!(h(lo) < 0.0)) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300)
            throw numerical_failure("bracket failure: no z0 with h(z0) < 0");
    }
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (h(mid) < 0.0 ? lo : hi) = mid;
    }
    // Bisection stops at adjacent doubles; take whichever end is closer to zero.
    return std::abs(h(lo)) <= std::abs(h(hi)) ? lo : hi;
}

inline double compute_upper_threshold(const Exponents& e, double eps, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("threshold ratio must lie in (0,1)");
    const double b1 = e.beta1, b2 = e.beta2;
    const double num = b1 * b2 * (std::pow(delta, -b2) - std::pow(delta, -b1));
    const double den = (1.0 + eps) * (b1 - b2) - b2 * (b1 - 1.0) * std::pow(delta, 1.0 - b2) +
                       b1 * (b2 - 1.0) * std::pow(delta, 1.0 - b1);
    const double B = num / den;
    if (!(B > 0.0) || !std::isfinite(B))
        throw numerical_failure("upper threshold is not positive");
    return B;
}

struct EquilibriumSolution {
    ModelParams params;
    Exponents exps;
    double delta;
    double A;  // stopping threshold of the uninformed player
    double B;  // reflecting threshold of the informed player
    double C1, C2;  // V1 = C1 phi^(beta1-1) + C2 phi^(beta2-1) on [A,B]
    double D1, D2;  // V  = D1 phi^beta1     + D2 phi^beta2     on [A,B]

    double omega() const { return (params.mu1 - params.mu0) / params.sigma; }
    double a() const { return ratio_to_belief(A); }
    double b() const { return ratio_to_belief(B); }

    /// Ex-ante value V = V0 + phi V1.
    double V(double phi, Deriv d = Deriv::value) const {
        check_phi(phi);
        const double ge = 1.0 + params.eps;
        if (phi < A)
            return d == Deriv::value ? 1.0 + phi : d == Deriv::first ? 1.0 : 0.0;
        if (phi > B)
            return d == Deriv::value ? inner_V(B, Deriv::value) + ge * (phi - B)
                   : d == Deriv::first ? ge
                                       : 0.0;
        if (d == Deriv::value && phi == A)
            return 1.0 + A;
        if (d == Deriv::second && (phi == A || phi == B))
            throw std::domain_error("second derivative of V undefined at a threshold");
        return inner_V(phi, d);
    }

    /// Expected cost of the informed player in the high-drift regime.
    double V1(double phi, Deriv d = Deriv::value) const {
        check_phi(phi);
        if (phi < A)
            return d == Deriv::value ? 1.0 : 0.0;
        if (phi > B)
            return d == Deriv::value ? 1.0 + params.eps : 0.0;
        if (d == Deriv::value && phi == A)
            return 1.0;
        if (d == Deriv::value && phi == B)
            return 1.0 + params.eps;
        if (d == Deriv::second && (phi == A || phi == B))
            throw std::domain_error("second derivative of V1 undefined at a threshold");
        return inner_V1(phi, d);
    }

    /// Expected cost of the informed player in the low-drift regime, V - phi V1.
    double V0(double phi, Deriv d = Deriv::value) const {
        check_phi(phi);
        if (phi < A || (phi == A && d == Deriv::value))
            return d == Deriv::value ? 1.0 : 0.0;
        switch (d) {
        case Deriv::value:
            return V(phi) - phi * V1(phi);
        case Deriv::first:
            return V(phi, Deriv::first) - V1(phi) - phi * V1(phi, Deriv::first);
        case Deriv::second:
            return V(phi, Deriv::second) - 2.0 * V1(phi, Deriv::first) -
                   phi * V1(phi, Deriv::second);
        }
        return 0.0;
    }

    /// Uninformed player's value per unit x, V / (1 + phi).
    double uninformed_value(double phi) const { return V(phi) / (1.0 + phi); }

private:
    static void check_phi(double phi) {
        if (!(phi > 0.0) || !std::isfinite(phi))
            throw std::domain_error("phi must be positive and finite");
    }

    double inner_V(double phi, Deriv d) const {
        const double b1 = exps.beta1, b2 = exps.beta2;
        switch (d) {
        case Deriv::value:
            return D1 * std::pow(phi, b1) + D2 * std::pow(phi, b2);
        case Deriv::first:
            return D1 * b1 * std::pow(phi, b1 - 1.0) + D2 * b2 * std::pow(phi, b2 - 1.0);
        case Deriv::second:
            return D1 * b1 * (b1 - 1.0) * std::pow(phi, b1 - 2.0) +
                   D2 * b2 * (b2 - 1.0) * std::pow(phi, b2 - 2.0);
        }
        return 0.0;
    }

    double inner_V1(double phi, Deriv d) const {
        const double k1 = exps.beta1 - 1.0, k2 = exps.beta2 - 1.0;
        switch (d) {
        case Deriv::value:
            return C1 * std::pow(phi, k1) + C2 * std::pow(phi, k2);
        case Deriv::first:
            return C1 * k1 * std::pow(phi, k1 - 1.0) + C2 * k2 * std::pow(phi, k2 - 1.0);
        case Deriv::second:
            return C1 * k1 * (k1 - 1.0) * std::pow(phi, k1 - 2.0) +
                   C2 * k2 * (k2 - 1.0) * std::pow(phi, k2 - 2.0);
        }
        return 0.0;
    }
};

inline EquilibriumSolution build_solution(const ModelParams& p) {
    validate(p);
    EquilibriumSolution s{};
    s.params = p;
    s.exps = compute_exponents(p);
    s.delta = solve_threshold_ratio(s.exps, p.eps);
    s.B = compute_upper_threshold(s.exps, p.eps, s.delta);
    s.A = s.delta * s.B;
    const double b1 = s.exps.beta1, b2 = s.exps.beta2, ge = 1.0 + p.eps, db = b1 - b2;
    s.C1 = (1.0 - b2) * ge * std::pow(s.B, 1.0 - b1) / db;
    s.C2 = (b1 - 1.0) * ge * std::pow(s.B, 1.0 - b2) / db;
    s.D1 = std::pow(s.A, -b1) * (-b2 + (1.0 - b2) * s.A) / db;
    s.D2 = std::pow(s.A, -b2) * (b1 + (b1 - 1.0) * s.A) / db;
    if (!(s.A > 0.0 && s.A < s.B))
        throw numerical_failure("thresholds out of order");
    return s;
}

// ---------------------------------------------------------------------------
// Player-1 deviations

/// Value to the uninformed player of stopping at A' instead of A while the
/// informed player keeps reflecting at the equilibrium B. Solves the Euler
/// ODE on (A', B) with W(A') = 1 + A' and W'(B-) = 1 + eps.
class DeviationValue {
public:
    DeviationValue(const EquilibriumSolution& sol, double a_prime)
        : b1_(sol.exps.beta1), b2_(sol.exps.beta2), ge_(1.0 + sol.params.eps), ap_(a_prime),
          B_(sol.B) {
        if (!(a_prime > 0.0 && a_prime < sol.B))
            throw std::domain_error("deviation threshold must lie in (0,B)");
        // Basis normalised at B: W = E1 (phi/B)^b1 + E2 (phi/B)^b2.
        const double z = ap_ / B_;
        const double m11 = std::pow(z, b1_), m12 = std::pow(z, b2_);
        const double m21 = b1_ / B_, m22 = b2_ / B_;
        const double det = m11 * m22 - m12 * m21;
        e1_ = ((1.0 + ap_) * m22 - m12 * ge_) / det;
        e2_ = (m11 * ge_ - m21 * (1.0 + ap_)) / det;
        wB_ = e1_ + e2_;
    }

    double operator()(double phi) const {
        if (!(phi > 0.0))
            throw std::domain_error("phi must be positive");
        if (phi <= ap_)
            return 1.0 + phi;
        if (phi >= B_)
            return wB_ + ge_ * (phi - B_);
        const double z = phi / B_;
        return e1_ * std::pow(z, b1_) + e2_ * std::pow(z, b2_);
    }

    double threshold() const { return ap_; }

private:
    double b1_, b2_, ge_, ap_, B_;
    double e1_ = 0.0, e2_ = 0.0, wB_ = 0.0;
};

inline double deviation_value_player1(const EquilibriumSolution& sol, double a_prime, double phi) {
    return DeviationValue(sol, a_prime)(phi);
}

// ---------------------------------------------------------------------------
// Quasi-variational inequality check

struct QviGridSpec {
    int interior_points = 10000;  // on (A,B)
    int outer_points = 2000;      // on (0,A) and on (B, upper_factor * B]
    double upper_factor = 3.0;
};

struct QviCondition {
    std::string name;
    double max_residual;
    double tolerance;
    bool pass;
};

struct QviReport {
    std::vector<QviCondition> conditions;

    bool all_pass() const {
        return std::all_of(conditions.begin(), conditions.end(),
                           [](const QviCondition& c) { return c.pass; });
    }
    const QviCondition* find(const std::string& name) const {
        for (const auto& c : conditions)
            if (c.name == name)
                return &c;
        return nullptr;
    }
};

namespace detail {

// Open grid on (lo, hi): n points, each at least one cell from both ends.
inline std::vector<double> open_grid(double lo, double hi, int n) {
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k)
        g.push_back(lo + (hi - lo) * k / (n + 1.0));
    return g;
}

// |a + b + c| / (|a| + |b| + |c|), guarding an all-zero scale.
inline double relative_sum(double a, double b, double c) {
    const double scale = std::abs(a) + std::abs(b) + std::abs(c);
    return scale > 0.0 ? std::abs(a + b + c) / scale : 0.0;
}

}  // namespace detail

/// Evaluates the variational conditions on the closed-form solution. The
/// generators act on u(x, phi) = x V(phi); x scales out.
inline QviReport check_qvi(const EquilibriumSolution& s, const QviGridSpec& grid = {}) {
    constexpr double ode_tol = 1e-8;
    constexpr double bc_tol = 1e-10;
    const auto& p = s.params;
    const double w = s.omega(), sw = p.sigma * w, half_w2 = 0.5 * w * w, ge = 1.0 + p.eps;

    const auto inner = detail::open_grid(s.A, s.B, grid.interior_points);
    const auto below = detail::open_grid(0.0, s.A, grid.outer_points);
    const auto above = detail::open_grid(s.B, grid.upper_factor * s.B, grid.outer_points);

    double ode_v = 0.0, ode_v0 = 0.0, ode_v1 = 0.0, obstacle = 0.0;
    for (double phi : inner) {
        const double p2 = phi * phi;
        ode_v = std::max(ode_v, detail::relative_sum(half_w2 * p2 * s.V(phi, Deriv::second),
                                                     sw * phi * s.V(phi, Deriv::first),
                                                     p.mu0 * s.V(phi)));
        ode_v0 = std::max(ode_v0, detail::relative_sum(half_w2 * p2 * s.V0(phi, Deriv::second),
                                                       sw * phi * s.V0(phi, Deriv::first),
                                                       p.mu0 * s.V0(phi)));
        ode_v1 = std::max(ode_v1,
                          detail::relative_sum(half_w2 * p2 * s.V1(phi, Deriv::second),
                                               (w * w + sw) * phi * s.V1(phi, Deriv::first),
                                               p.mu1 * s.V1(phi)));
        // Continuation region: u > (1 + phi) f; a violation is positive here.
        obstacle = std::max(obstacle, (1.0 + phi) - s.V(phi));
    }

    // Stopping region (0, A]: generator of the obstacle is x (mu0 + mu1 phi).
    double gen_sign = p.mu0 + p.mu1 * s.A;
    double cont0 = std::max(std::abs(s.V0(s.A) - 1.0), std::abs(s.V1(s.A) - 1.0));
    double stop_match = std::abs(s.V(s.A) - (1.0 + s.A));
    for (double phi : below) {
        gen_sign = std::max(gen_sign, p.mu0 + p.mu1 * phi);
        cont0 = std::max({cont0, std::abs(s.V0(phi) - 1.0), std::abs(s.V1(phi) - 1.0)});
        stop_match = std::max(stop_match, std::abs(s.V(phi) - (1.0 + phi)));
    }

    // Reflection region [B, inf): d/dphi u^i = 0.
    double smooth0 = std::max(std::abs(s.V0(s.B, Deriv::first)), std::abs(s.V1(s.B, Deriv::first)));
    for (double phi : above)
        smooth0 = std::max({smooth0, std::abs(s.V0(phi, Deriv::first)),
                            std::abs(s.V1(phi, Deriv::first))});

    double upper = 0.0;
    for (const auto* g : {&inner, &below, &above})
        for (double phi : *g)
            upper = std::max({upper, s.V0(phi) - ge, s.V1(phi) - ge});

    const std::array<double, 7> bcs{
        std::abs(s.V1(s.A) - 1.0),
        std::abs(s.V1(s.B) - ge),
        std::abs(s.V1(s.B, Deriv::first)),
        std::abs(s.V(s.A) - (1.0 + s.A)),
        std::abs(s.V(s.A, Deriv::first) - 1.0),
        std::abs(s.V(s.B, Deriv::first) - ge),
        std::abs(s.V0(s.B, Deriv::first)),
    };
    const double bc = *std::max_element(bcs.begin(), bcs.end());

    QviReport r;
    auto add = [&r](std::string name, double res, double tol) {
        r.conditions.push_back({std::move(name), res, tol, res <= tol});
    };
    add("boundary_conditions", bc, bc_tol);
    add("ode_V_continuation", ode_v, ode_tol);
    add("ode_V0_continuation", ode_v0, ode_tol);
    add("ode_V1_continuation", ode_v1, ode_tol);
    add("obstacle_continuation", obstacle, bc_tol);
    // Reported as max(mu0 + mu1 phi, 0): zero means the generator is non-positive.
    add("generator_sign_stopping", std::max(gen_sign, 0.0), 0.0);
    add("stopping_value_match", stop_match, bc_tol);
    add("cont0_stopping", cont0, bc_tol);
    add("smooth0_reflection", smooth0, bc_tol);
    add("upper_obstacle", std::max(upper, 0.0), 1e-12);
    return r;
}

}  // namespace dynkin
