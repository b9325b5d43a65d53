#pragma once

// JSON views of solutions and reports, and the plot manifest format.

#include <string>
#include <vector>

#include "json.hpp"

#include "equilibrium.hpp"
#include "model.hpp"
#include "symmetric.hpp"
#include "verifier.hpp"
#include "version.hpp"

namespace dynkin {

using json = nlohmann::ordered_json;

inline json to_json(const ModelParams& p) {
    return {{"mu0", p.mu0}, {"mu1", p.mu1}, {"sigma", p.sigma}, {"eps", p.eps},
            {"x", p.x0},    {"pi", p.prior}, {"phi", belief_to_ratio(p.prior)}};
}

inline json to_json(const EquilibriumSolution& s) {
    return {{"A", s.A},   {"B", s.B},   {"a", s.a()}, {"b", s.b()},  {"beta1", s.exps.beta1},
            {"beta2", s.exps.beta2}, {"delta", s.delta}, {"C1", s.C1}, {"C2", s.C2}, {"D1", s.D1},
            {"D2", s.D2}};
}

inline json to_json(const QviReport& r) {
    json conds = json::array();
    for (const auto& c : r.conditions)
        conds.push_back({{"condition", c.name}, {"max_residual", c.max_residual},
                         {"tolerance", c.tolerance}, {"pass", c.pass}});
    return {{"all_pass", r.all_pass()}, {"conditions", conds}};
}

inline json to_json(const SymmetricSolution& s) {
    const auto r = s.boundary_residuals();
    return {{"As", s.As}, {"Bs", s.Bs}, {"a", s.a()}, {"b", s.b()}, {"Dh1", s.Dh1}, {"Dh2", s.Dh2},
            {"beta1", s.exps.beta1}, {"beta2", s.exps.beta2},
            {"boundary_residuals", {r[0], r[1], r[2], r[3]}}};
}

/// One verification record: {check, params, phi, estimate, stderr, oracle,
/// tolerance, bias_bound, censored_fraction, pass}.
inline json to_json(const CheckRow& c, const ModelParams& p) {
    return {{"check", c.check},
            {"params", to_json(p)},
            {"phi", c.phi},
            {"estimate", c.estimate},
            {"stderr", c.std_error},
            {"oracle", c.oracle},
            {"tolerance", c.tolerance},
            {"bias_bound", c.bias_bound},
            {"censored_fraction", c.censored_fraction},
            {"pass", c.pass}};
}

inline json to_json(const DeviationRow& r) {
    return {{"player", r.player},
            {"strategy", r.strategy},
            {"parameter", r.parameter},
            {"phi", r.phi},
            {"equilibrium", r.equilibrium},
            {"deviation", r.deviation},
            {"improvement", r.improvement},
            {"raw_improvement", r.raw_improvement},
            {"stderr", r.std_error},
            {"raw_stderr", r.raw_std_error},
            {"tolerance", r.tolerance},
            {"method", r.method},
            {"pass", r.pass}};
}

struct PlotSeries {
    std::string name;
    std::string file;
    std::string x;
    std::string y;
};

struct ReferenceLine {
    std::string axis;  // "x" or "y"
    double value;
    std::string label;
};

/// Manifest with the fixed key set {title, xlabel, ylabel, series, reference_lines}.
inline json plot_manifest(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series, const std::vector<ReferenceLine>& refs) {
    json s = json::array(), r = json::array();
    for (const auto& e : series)
        s.push_back({{"name", e.name}, {"file", e.file}, {"x", e.x}, {"y", e.y}});
    for (const auto& e : refs)
        r.push_back({{"axis", e.axis}, {"value", e.value}, {"label", e.label}});
    return {{"title", title}, {"xlabel", xlabel}, {"ylabel", ylabel}, {"series", s}, {"reference_lines", r}};
}

}  // namespace dynkin
