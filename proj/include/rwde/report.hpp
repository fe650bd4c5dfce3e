#pragma once

#include "rwde/error.hpp"
#include "rwde/kappa.hpp"
#include "rwde/model.hpp"
#include "rwde/walk.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>

namespace rwde {

using json = nlohmann::ordered_json;

/// Rounds to 12 significant digits; non-finite values become null.
inline json num(double x) {
    if (!std::isfinite(x)) return nullptr;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::stod(buf);
}

inline json error_json(const Error& e) {
    return json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
}

inline json to_json(const TrapSet& t) {
    json counts = json::object();
    for (const auto& [i, c] : t.exit_counts) counts[std::to_string(i)] = c;
    return json{{"offsets", t.offsets}, {"exit_counts", counts}, {"beta", num(t.beta)}};
}

inline json to_json(const Kappa0Result& r) {
    return json{{"value", num(r.value)},
                {"witness", r.witness.offsets},
                {"certified", r.certified},
                {"diameter_searched", r.diameter_searched},
                {"certified_bound", r.certified_bound},
                {"nodes_explored", r.nodes_explored},
                {"timed_out", r.timed_out}};
}

inline json analyze_json(const DirichletParams& p, const Kappa0Result& k0) {
    const DerivedParams d = derive_params(p);
    const Regime reg = classify_regime(p, k0);
    return json{{"alphas", format_alphas(p)},
                {"L", p.L()},
                {"R", p.R()},
                {"d_plus", num(d.d_plus)},
                {"d_minus", num(d.d_minus)},
                {"c_plus", num(d.c_plus)},
                {"c_minus", num(d.c_minus)},
                {"kappa1", num(d.kappa1)},
                {"m0", d.m0},
                {"kappa0",
                 {{"value", num(k0.value)},
                  {"witness", k0.witness.offsets},
                  {"certified", k0.certified},
                  {"diameter_searched", k0.diameter_searched}}},
                {"regime", std::string(to_string(reg.tag))},
                {"ballistic", reg.ballistic},
                {"warnings", reg.warnings}};
}

inline json to_json(const VelocityEstimate& v) {
    return json{{"v_hat", num(v.v_hat)},
                {"std_error", num(v.std_error)},
                {"method", std::string(to_string(v.method))},
                {"steps", v.steps},
                {"replicas", v.replicas},
                {"cycles", v.cycles},
                {"warnings", v.warnings}};
}

} // namespace rwde
