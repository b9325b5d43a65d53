#pragma once

// Game primitives for the linear-payoff Dynkin game with drift uncertainty.
//
// The asset follows dX = mu X dt + sigma X dW with mu in {mu0, mu1}; the
// uninformed player's prior on the high drift is `prior`. Payoffs are
// f(x) = x (uninformed player stops) and g(x) = (1 + eps) x (informed
// player stops). Everything downstream works in the likelihood-ratio
// coordinate phi = pi / (1 - pi).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynkin {

/// Raised when a parameter set violates the model's standing assumptions.
/// `fields()` names every offending field.
class invalid_parameters : public std::invalid_argument {
public:
    invalid_parameters(std::vector<std::string> fields, const std::string& what)
        : std::invalid_argument(what), fields_(std::move(fields)) {}

    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    std::vector<std::string> fields_;
};

/// A root bracket or a nonlinear solve did not converge.
class numerical_failure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelParams {
    double mu0 = -1.0;
    double mu1 = 1.0;
    double sigma = 0.5;
    double eps = 0.1;
    double x0 = 1.0;
    double prior = 0.5;
};

struct DerivedQuantities {
    double omega;  // signal-to-noise ratio (mu1 - mu0) / sigma
    double phi0;   // prior odds prior / (1 - prior)
};

/// Collects every violated invariant instead of stopping at the first.
inline std::vector<std::string> violations(const ModelParams& p) {
    std::vector<std::string> bad;
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p.mu0) || !(p.mu0 < 0.0))
        bad.push_back("mu0 (requires mu0 < 0 < mu1)");
    if (!finite(p.mu1) || !(p.mu1 > 0.0))
        bad.push_back("mu1 (requires mu0 < 0 < mu1)");
    if (!finite(p.sigma) || !(p.sigma > 0.0))
        bad.push_back("sigma (requires sigma > 0)");
    if (!finite(p.eps) || !(p.eps > 0.0))
        bad.push_back("eps (requires eps > 0)");
    if (!finite(p.x0) || !(p.x0 > 0.0))
        bad.push_back("x0 (requires x0 > 0)");
    if (!finite(p.prior) || !(p.prior > 0.0 && p.prior < 1.0))
        bad.push_back("prior (requires 0 < prior < 1)");
    return bad;
}

inline void validate(const ModelParams& p) {
    auto bad = violations(p);
    if (bad.empty())
        return;
    std::string msg = "invalid parameters:";
    for (const auto& f : bad)
        msg += " " + f + ";";
    throw invalid_parameters(std::move(bad), msg);
}

inline double belief_to_ratio(double pi) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::domain_error("belief must lie in (0,1)");
    return pi / (1.0 - pi);
}

inline double ratio_to_belief(double phi) {
    if (!(phi > 0.0) || !std::isfinite(phi))
        throw std::domain_error("likelihood ratio must lie in (0,inf)");
    return phi / (1.0 + phi);
}

inline DerivedQuantities derive(const ModelParams& p) {
    validate(p);
    return {(p.mu1 - p.mu0) / p.sigma, belief_to_ratio(p.prior)};
}

/// Base-case parameters of the numerical study.
inline ModelParams base_case() { return ModelParams{}; }

}  // namespace dynkin
