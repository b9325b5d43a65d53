#include <gtest/gtest.h>

#include <cmath>

#include <dynkin/equilibrium.hpp>

#include "support.hpp"

using namespace dynkin;
using testsupport::bisect;
using testsupport::grid;

namespace {

struct Oracle {
    double beta1, beta2, delta, B, A;
};

// Everything recomputed from the defining equations with bisection only.
Oracle oracle(const ModelParams& p) {
    const double w = (p.mu1 - p.mu0) / p.sigma;
    auto q = [&](double b) { return 0.5 * w * w * b * (b - 1.0) + p.sigma * w * b + p.mu0; };
    Oracle o{};
    o.beta1 = bisect(q, 0.0, 1.0);
    double lo = -1.0;
    while (q(lo) < 0.0)
        lo *= 2.0;
    o.beta2 = bisect(q, lo, 0.0);
    const double b1 = o.beta1, b2 = o.beta2, ge = 1.0 + p.eps;
    auto h = [&](double z) {
        return (1 - b2) * std::pow(z, b1 - 1) + (b1 - 1) * std::pow(z, b2 - 1) - (b1 - b2) / ge;
    };
    o.delta = bisect(h, 1e-12, 1.0);
    // V = D1 phi^b1 + D2 phi^b2 with value matching and smooth fit at A = delta B;
    // B is fixed by V'(B-) = 1 + eps.
    auto g = [&](double B) {
        const double A = o.delta * B;
        const double d1 = std::pow(A, -b1) * (-b2 + (1 - b2) * A) / (b1 - b2);
        const double d2 = std::pow(A, -b2) * (b1 + (b1 - 1) * A) / (b1 - b2);
        return d1 * b1 * std::pow(B, b1 - 1) + d2 * b2 * std::pow(B, b2 - 1) - ge;
    };
    double bl = 1e-6, bh = 1.0;
    while (g(bh) * g(bl) > 0.0 && bh < 1e9)
        bh *= 2.0;
    o.B = bisect(g, bl, bh);
    o.A = o.delta * o.B;
    return o;
}

const EquilibriumSolution& base() {
    static const EquilibriumSolution s = build_solution(base_case());
    return s;
}

}  // namespace

TEST(Exponents, BaseCaseClosedForm) {
    const auto e = compute_exponents(base_case());
    EXPECT_NEAR(e.beta1, (3.0 + std::sqrt(17.0)) / 8.0, 1e-15);
    EXPECT_NEAR(e.beta2, (3.0 - std::sqrt(17.0)) / 8.0, 1e-15);
    EXPECT_NEAR(e.beta1, 0.890388, 1e-6);
    EXPECT_NEAR(e.beta2, -0.140388, 1e-6);
}

TEST(Exponents, MatchBisectionOracle) {
    const auto o = oracle(base_case());
    const auto e = compute_exponents(base_case());
    EXPECT_NEAR(e.beta1, o.beta1, 1e-14);
    EXPECT_NEAR(e.beta2, o.beta2, 1e-14);
}

TEST(Exponents, PolynomialEndpointsAndVieta) {
    const auto p = base_case();
    EXPECT_DOUBLE_EQ(exponent_polynomial(p, 0.0), -1.0);
    EXPECT_DOUBLE_EQ(exponent_polynomial(p, 1.0), 1.0);
    const auto e = compute_exponents(p);
    EXPECT_NEAR(e.beta1 * e.beta2, -1.0 / 8.0, 1e-15);
    // q(beta) = 8 beta^2 - 6 beta - 1
    for (double b : {-1.0, 0.3, 2.0})
        EXPECT_NEAR(exponent_polynomial(p, b), 8 * b * b - 6 * b - 1, 1e-13);
}

TEST(Exponents, RootsOnRandomSets) {
    for (const auto& p : testsupport::random_parameter_sets()) {
        const auto e = compute_exponents(p);
        EXPECT_GT(e.beta1, 0.0);
        EXPECT_LT(e.beta1, 1.0);
        EXPECT_LT(e.beta2, 0.0);
        const double tol = 1e-12 * std::max(1.0, std::abs(p.mu0));
        EXPECT_LT(std::abs(exponent_polynomial(p, e.beta1)), tol);
        EXPECT_LT(std::abs(exponent_polynomial(p, e.beta2)), tol);
        const auto o = oracle(p);
        EXPECT_NEAR(e.beta1, o.beta1, 1e-12);
        EXPECT_NEAR(e.beta2, o.beta2, 1e-12);
    }
}

TEST(ThresholdRatio, BaseCase) {
    const auto e = compute_exponents(base_case());
    const double d = solve_threshold_ratio(e, 0.1);
    // 0.3790 is the ratio of the rounded thresholds 0.329 / 0.868; rounding
    // to three decimals leaves the ratio uncertain by about 8e-4.
    EXPECT_NEAR(d, 0.3790, 8e-4);
    EXPECT_NEAR(d, 0.379215, 1e-6);
    EXPECT_LE(std::abs(threshold_ratio_residual(e, 0.1, d)), 1e-12);
    EXPECT_NEAR(d, oracle(base_case()).delta, 1e-12);
}

TEST(ThresholdRatio, EndpointBehaviour) {
    const auto e = compute_exponents(base_case());
    EXPECT_NEAR(threshold_ratio_residual(e, 0.1, 1.0), 0.1 * (e.beta1 - e.beta2) / 1.1, 1e-15);
    EXPECT_GT(threshold_ratio_residual(e, 0.1, 1.0), 0.0);
    EXPECT_LT(threshold_ratio_residual(e, 0.1, 1e-10), 0.0);
}

TEST(ThresholdRatio, SingleSignChange) {
    for (const auto& p : [] {
             auto v = testsupport::random_parameter_sets();
             v.push_back(base_case());
             return v;
         }()) {
        const auto e = compute_exponents(p);
        int changes = 0;
        double prev = threshold_ratio_residual(e, p.eps, 1e-3 / 1001.0);
        for (int i = 1; i <= 1000; ++i) {
            const double z = static_cast<double>(i) / 1000.0;
            const double h = threshold_ratio_residual(e, p.eps, z);
            if ((h > 0.0) != (prev > 0.0))
                ++changes;
            prev = h;
            if (i < 1000) {  // h'(1) = 0
                EXPECT_GT(threshold_ratio_residual_derivative(e, z), 0.0);
            }
        }
        EXPECT_EQ(changes, 1);
    }
}

TEST(UpperThreshold, BaseCaseValues) {
    const auto& s = base();
    EXPECT_NEAR(s.A, 0.329, 1e-3);
    EXPECT_NEAR(s.B, 0.868, 1e-3);
    EXPECT_NEAR(s.a(), 0.248, 1e-3);
    EXPECT_NEAR(s.b(), 0.465, 1e-3);
    EXPECT_LE(s.A, 1.0);
    EXPECT_DOUBLE_EQ(s.A, s.delta * s.B);
}

TEST(UpperThreshold, MatchesOracle) {
    auto sets = testsupport::random_parameter_sets();
    sets.push_back(base_case());
    for (const auto& p : sets) {
        const auto s = build_solution(p);
        const auto o = oracle(p);
        EXPECT_NEAR(s.delta, o.delta, 1e-11);
        EXPECT_NEAR(s.B, o.B, 1e-9 * o.B);
        EXPECT_NEAR(s.A, o.A, 1e-9 * o.A);
    }
}

TEST(UpperThreshold, BackSubstitution) {
    // V1 built from B alone must hit 1 at A.
    const auto& s = base();
    const double b1 = s.exps.beta1, b2 = s.exps.beta2;
    EXPECT_NEAR(s.C1 * std::pow(s.A, b1 - 1) + s.C2 * std::pow(s.A, b2 - 1), 1.0, 1e-10);
}

TEST(Solution, CoefficientFormulas) {
    const auto& s = base();
    const double b1 = s.exps.beta1, b2 = s.exps.beta2, ge = 1.1, A = s.A, B = s.B;
    EXPECT_NEAR(s.C1, (1 - b2) * ge * std::pow(B, 1 - b1) / (b1 - b2), 1e-14);
    EXPECT_NEAR(s.C2, (b1 - 1) * ge * std::pow(B, 1 - b2) / (b1 - b2), 1e-14);
    EXPECT_NEAR(s.D1, std::pow(A, -b1) * (-b2 + (1 - b2) * A) / (b1 - b2), 1e-14);
    EXPECT_NEAR(s.D2, std::pow(A, -b2) * (b1 + (b1 - 1) * A) / (b1 - b2), 1e-14);
}

TEST(Solution, BoundaryConditions) {
    const auto& s = base();
    EXPECT_NEAR(s.V1(s.A), 1.0, 1e-10);
    EXPECT_NEAR(s.V1(s.B), 1.1, 1e-10);
    EXPECT_NEAR(s.V(s.A), 1.0 + s.A, 1e-10);
    EXPECT_NEAR(s.V(s.A, Deriv::first), 1.0, 1e-10);
    EXPECT_NEAR(s.V(s.B, Deriv::first), 1.1, 1e-10);
    EXPECT_NEAR(s.V0(s.B, Deriv::first), 0.0, 1e-10);
    EXPECT_NEAR(s.V1(s.B, Deriv::first), 0.0, 1e-10);
    EXPECT_NEAR(s.V0(s.A), 1.0, 1e-10);
}

TEST(Solution, PiecewiseExtensions) {
    const auto& s = base();
    const double h = s.A / 2;
    EXPECT_DOUBLE_EQ(s.V(h), 1.0 + h);
    EXPECT_DOUBLE_EQ(s.V0(h), 1.0);
    EXPECT_DOUBLE_EQ(s.V1(h), 1.0);
    for (double phi : {s.B, 1.5 * s.B, 10.0}) {
        EXPECT_NEAR(s.V(phi), s.V(s.B) + 1.1 * (phi - s.B), 1e-12);
        EXPECT_DOUBLE_EQ(s.V1(phi), 1.1);
        EXPECT_NEAR(s.V0(phi), s.V(phi) - 1.1 * phi, 1e-12);
    }
    // continuity across the kinks
    for (double k : {s.A, s.B}) {
        EXPECT_NEAR(s.V(k * (1 - 1e-12)), s.V(k * (1 + 1e-12)), 1e-10);
        EXPECT_NEAR(s.V(k * (1 - 1e-9), Deriv::first), s.V(k * (1 + 1e-9), Deriv::first), 1e-7);
    }
}

TEST(Solution, DomainErrors) {
    const auto& s = base();
    EXPECT_THROW(s.V(0.0), std::domain_error);
    EXPECT_THROW(s.V0(-1.0), std::domain_error);
    EXPECT_THROW(s.V1(0.0, Deriv::first), std::domain_error);
    EXPECT_THROW(s.V(s.A, Deriv::second), std::domain_error);
    EXPECT_THROW(s.V(s.B, Deriv::second), std::domain_error);
    EXPECT_NO_THROW(s.V(0.5 * (s.A + s.B), Deriv::second));
}

TEST(Solution, IndependentOfInitialState) {
    ModelParams p = base_case();
    p.x0 = 7.5;
    p.prior = 0.9;
    const auto s = build_solution(p);
    EXPECT_EQ(s.A, base().A);
    EXPECT_EQ(s.B, base().B);
    EXPECT_EQ(s.D1, base().D1);
}

// Properties asserted for the base case and each random parameter set.
class Structural : public ::testing::TestWithParam<int> {
protected:
    ModelParams params() const {
        if (GetParam() < 0)
            return base_case();
        return testsupport::random_parameter_sets()[GetParam()];
    }
};

TEST_P(Structural, V1MonotoneAndBounded) {
    const auto s = build_solution(params());
    const double ge = 1.0 + s.params.eps;
    for (int i = 0; i <= 10000; ++i) {
        const double phi = s.A + (s.B - s.A) * i / 10000.0;
        EXPECT_GE(s.V1(phi, Deriv::first), -1e-12);
        EXPECT_GE(s.V1(phi), 1.0 - 1e-12);
        EXPECT_LE(s.V1(phi), ge + 1e-12);
    }
}

TEST_P(Structural, VDominatesObstacle) {
    const auto s = build_solution(params());
    for (double phi : grid(s.A, s.B, 10000)) {
        EXPECT_GT(s.V(phi), 1.0 + phi);
        EXPECT_GT(s.V(phi, Deriv::first), 1.0);
    }
}

TEST_P(Structural, LowerThresholdBound) {
    const auto s = build_solution(params());
    EXPECT_LE(s.A, -s.params.mu0 / s.params.mu1);
    EXPECT_GT(s.A, 0.0);
    EXPECT_LT(s.A, s.B);
}

TEST_P(Structural, Convexity) {
    const auto s = build_solution(params());
    const int n = 10000;
    const double hi = 3.0 * s.B, step = hi / n;
    for (int i = 2; i < n; ++i) {
        const double x = step * i;
        const double d2 = s.V(x + step) - 2 * s.V(x) + s.V(x - step);
        EXPECT_GE(d2, -1e-10) << "phi=" << x;
    }
}

TEST_P(Structural, V0Bounded) {
    const auto s = build_solution(params());
    for (double phi : grid(s.A, 10.0 * s.B, 10000))
        EXPECT_LE(s.V0(phi), 1.0 + 1e-12);
    for (double phi : grid(0.0, s.A, 100))
        EXPECT_EQ(s.V0(phi), 1.0);
}

TEST_P(Structural, QviAllPass) {
    const auto s = build_solution(params());
    const auto r = check_qvi(s);
    for (const auto& c : r.conditions)
        EXPECT_TRUE(c.pass) << c.name << " residual " << c.max_residual << " tol " << c.tolerance;
}

TEST_P(Structural, PlayerOneDeviationsNeverGain) {
    const auto s = build_solution(params());
    for (int k = 1; k < 25; ++k) {
        const DeviationValue w(s, k * s.B / 25.0);
        for (double phi : grid(0.0, 2.0 * s.B, 200))
            EXPECT_LE(w(phi), s.V(phi) + 1e-9);
    }
}

INSTANTIATE_TEST_SUITE_P(BaseAndRandom, Structural, ::testing::Range(-1, 20));

TEST(Qvi, BaseCaseResiduals) {
    const auto r = check_qvi(base());
    EXPECT_TRUE(r.all_pass());
    ASSERT_NE(r.find("ode_V_continuation"), nullptr);
    EXPECT_LT(r.find("ode_V_continuation")->max_residual, 1e-9);
    ASSERT_NE(r.find("ode_V0_continuation"), nullptr);
    EXPECT_LT(r.find("ode_V0_continuation")->max_residual, 1e-8);
    EXPECT_LT(r.find("boundary_conditions")->max_residual, 1e-10);
}

TEST(Qvi, StoppingRegionGenerator) {
    const auto& s = base();
    // L0 applied to 1 + phi is mu0 + mu1 phi
    const double phi = s.A / 2;
    EXPECT_NEAR(s.params.mu1 * phi, 0.1645, 1e-3);
    EXPECT_LT(s.params.mu0 + s.params.mu1 * phi, 0.0);
}

TEST(Qvi, DetectsCorruptedSolution) {
    auto s = base();
    s.B *= 1.01;
    EXPECT_FALSE(check_qvi(s).all_pass());
    auto t = base();
    t.D1 *= 1.0 + 1e-6;
    EXPECT_FALSE(check_qvi(t).all_pass());
}

TEST(Deviation, EquilibriumThresholdReproducesV) {
    const auto& s = base();
    const DeviationValue w(s, s.A);
    for (double phi : grid(0.0, 3.0 * s.B, 500))
        EXPECT_NEAR(w(phi), s.V(phi), 1e-10);
    EXPECT_NEAR(w(s.A), 1.0 + s.A, 1e-12);
}

TEST(Deviation, ExamplesBelowEquilibrium) {
    const auto& s = base();
    EXPECT_LT(deviation_value_player1(s, 0.5, 0.6), s.V(0.6));
    EXPECT_LT(deviation_value_player1(s, 0.1, 0.2), s.V(0.2));
    for (double ap : {0.1, 0.2, 0.5, 0.7})
        for (double phi : grid(0.0, 2.0, 400))
            EXPECT_LE(deviation_value_player1(s, ap, phi), s.V(phi) + 1e-9);
}

TEST(Deviation, SlopeConditionAtB) {
    const auto& s = base();
    const DeviationValue w(s, 0.2);
    const double h = 1e-6;
    EXPECT_NEAR((w(s.B) - w(s.B - h)) / h, 1.1, 1e-5);
}

TEST(Deviation, DomainErrors) {
    const auto& s = base();
    EXPECT_THROW(DeviationValue(s, s.B), std::domain_error);
    EXPECT_THROW(DeviationValue(s, 0.0), std::domain_error);
    EXPECT_THROW(DeviationValue(s, 2.0), std::domain_error);
}
