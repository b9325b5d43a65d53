#pragma once

// Shared helpers for the test binaries.

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <dynkin/model.hpp>

namespace testsupport {

/// Twenty parameter sets with mu0 < 0 < mu1, drawn from a fixed seed.
inline std::vector<dynkin::ModelParams> random_parameter_sets(int n = 20, std::uint64_t seed = 20240901) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto logu = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(eng)); };
    std::vector<dynkin::ModelParams> out;
    for (int i = 0; i < n; ++i) {
        dynkin::ModelParams p;
        p.mu0 = -logu(0.2, 2.0);
        p.mu1 = logu(0.2, 2.0);
        p.sigma = logu(0.25, 1.5);
        p.eps = logu(0.02, 0.5);
        out.push_back(p);
    }
    return out;
}

/// Plain bisection on a sign change; the oracle for every root in the tests.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    if (flo * f(hi) > 0.0)
        throw std::runtime_error("bisect: no sign change");
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i)
        g.push_back(lo + (hi - lo) * (i + 0.5) / n);
    return g;
}

}  // namespace testsupport
