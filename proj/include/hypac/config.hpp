#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypac/allen_cahn.hpp"
#include "hypac/boundary.hpp"
#include "hypac/group.hpp"
#include "hypac/io.hpp"
#include "hypac/plateau.hpp"
#include "hypac/potential.hpp"

namespace hypac {

struct RhoRule {
    bool ladder = true;
    double fixed_value = 0.0;   // !ladder: the single coupling
    std::vector<double> rungs;  // ladder: explicit couplings; empty = derive from depth
    int depth = 4;              // ladder: rho1 * 4^{-n}, n = 1..depth
};

struct WindowRule {
    int max_ball = 3;      // certify every sub-ball window up to this radius
    int random_count = 100;
    int target_size = 12;
};

struct ExperimentConfig {
    GroupSpec group = GroupSpec::free_group(2);
    std::vector<std::string> boundary; // cylinder prefix words
    std::string potential = "quartic";
    std::optional<double> epsilon;     // visual parameter; unset = growth rate
    RhoRule rho;
    std::vector<int> radii = {3, 4, 5}; // Dirichlet solve regions
    int ball_radius = 0;                // 0 = deepest region + 1
    double contraction_k = 0.5;
    double solve_tol = 1e-10;
    double probe_tol = 1e-6;
    double bridge_tol = 1e-12;
    std::uint64_t seed = 20240601;
    std::string output_dir = "out";
    std::map<std::string, bool> audits; // missing key = enabled
    int stabilization_radius = 4;
    WindowRule windows;
    std::uint32_t separation_pairs = 50;
    std::uint32_t quasi_windows = 200;
    int cascade_levels = 6;
    double boundary_ball_r = 0.25; // metric-ball radius for the constants cascade

    bool audit_enabled(const std::string& name) const {
        auto it = audits.find(name);
        return it == audits.end() || it->second;
    }
};

inline const std::vector<std::string>& known_audits() {
    static const std::vector<std::string> names = {
        "growth",     "isoperimetric", "cone_growth",         "constants", "hull",
        "minmax",     "probe",         "range",               "components", "quasi_minimality",
        "transition", "decay",         "cascade",             "plateau",    "separation",
        "infinite_components",         "certify",             "bridge"};
    return names;
}

inline json config_to_json(const ExperimentConfig& c) {
    json j;
    j["group"] = group_to_json(c.group);
    j["boundary"] = c.boundary;
    j["potential"] = json{{"kind", c.potential}};
    j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
    json rho;
    if (c.rho.ladder) {
        rho["kind"] = "ladder";
        if (!c.rho.rungs.empty()) rho["rungs"] = c.rho.rungs;
        else rho["depth"] = c.rho.depth;
    } else {
        rho["kind"] = "fixed";
        rho["value"] = c.rho.fixed_value;
    }
    j["rho_rule"] = rho;
    j["radii"] = c.radii;
    j["ball_radius"] = c.ball_radius;
    j["contraction_k"] = c.contraction_k;
    j["tolerances"] = json{{"solve", c.solve_tol}, {"probe", c.probe_tol}, {"bridge", c.bridge_tol}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["audits"] = c.audits;
    j["stabilization_radius"] = c.stabilization_radius;
    j["windows"] = json{{"max_ball", c.windows.max_ball},
                        {"random_count", c.windows.random_count},
                        {"target_size", c.windows.target_size}};
    j["separation_pairs"] = c.separation_pairs;
    j["quasi_windows"] = c.quasi_windows;
    j["cascade_levels"] = c.cascade_levels;
    j["boundary_ball_r"] = c.boundary_ball_r;
    return j;
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.group = group_from_json(j.at("group"));
    c.boundary = j.at("boundary").get<std::vector<std::string>>();
    if (!j.contains("potential")) throw std::invalid_argument("config: missing potential");
    c.potential = j.at("potential").at("kind").get<std::string>();
    if (j.contains("epsilon") && !j.at("epsilon").is_null())
        c.epsilon = j.at("epsilon").get<double>();
    if (j.contains("rho_rule")) {
        const json& r = j.at("rho_rule");
        const std::string kind = r.at("kind").get<std::string>();
        if (kind == "fixed") {
            c.rho.ladder = false;
            c.rho.fixed_value = r.at("value").get<double>();
        } else if (kind == "ladder") {
            c.rho.ladder = true;
            if (r.contains("rungs")) c.rho.rungs = r.at("rungs").get<std::vector<double>>();
            else if (r.contains("depth")) c.rho.depth = r.at("depth").get<int>();
        } else {
            throw std::invalid_argument("config: rho_rule kind must be fixed or ladder");
        }
    }
    if (j.contains("radii")) c.radii = j.at("radii").get<std::vector<int>>();
    if (j.contains("ball_radius")) c.ball_radius = j.at("ball_radius").get<int>();
    if (j.contains("contraction_k")) c.contraction_k = j.at("contraction_k").get<double>();
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        if (t.contains("solve")) c.solve_tol = t.at("solve").get<double>();
        if (t.contains("probe")) c.probe_tol = t.at("probe").get<double>();
        if (t.contains("bridge")) c.bridge_tol = t.at("bridge").get<double>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("audits")) c.audits = j.at("audits").get<std::map<std::string, bool>>();
    if (j.contains("stabilization_radius"))
        c.stabilization_radius = j.at("stabilization_radius").get<int>();
    if (j.contains("windows")) {
        const json& w = j.at("windows");
        if (w.contains("max_ball")) c.windows.max_ball = w.at("max_ball").get<int>();
        if (w.contains("random_count")) c.windows.random_count = w.at("random_count").get<int>();
        if (w.contains("target_size")) c.windows.target_size = w.at("target_size").get<int>();
    }
    if (j.contains("separation_pairs"))
        c.separation_pairs = j.at("separation_pairs").get<std::uint32_t>();
    if (j.contains("quasi_windows")) c.quasi_windows = j.at("quasi_windows").get<std::uint32_t>();
    if (j.contains("cascade_levels")) c.cascade_levels = j.at("cascade_levels").get<int>();
    if (j.contains("boundary_ball_r")) c.boundary_ball_r = j.at("boundary_ball_r").get<double>();
    return c;
}

inline Potential make_potential(const std::string& kind) {
    if (kind == "quartic") return Potential::quartic_double_well();
    throw std::invalid_argument("unknown potential kind '" + kind + "'");
}

namespace detail {

// Worst-case distance of a continued solution from its two-level anchor,
// from the contraction estimate: first step over one minus the rate.
inline double a_priori_band_radius(const ContinuationConfig& cfg, const Potential& pot, int ns,
                                   double rho) {
    const double rate = cfg.k / 2.0 + rho * cfg.c_tilde / cfg.hat_c;
    if (rate >= 1.0) return std::numeric_limits<double>::infinity();
    const double step1 = rho * ns * (pot.c1 - pot.c0) / cfg.hat_c;
    return step1 / (1.0 - rate);
}

} // namespace detail

// Semantic validation beyond what parsing enforces. Returns all problems
// found; empty means the config is runnable. Ladder separation is checked
// here with conservative a-priori constants and re-checked at runtime with
// measured ones.
inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> bad;
    Potential pot;
    bool have_pot = false;
    try {
        pot = make_potential(c.potential);
        pot.validate();
        have_pot = true;
    } catch (const std::exception& e) {
        bad.emplace_back(e.what());
    }

    if (c.boundary.empty()) bad.emplace_back("boundary: needs at least one cylinder prefix");
    bool boundary_ok = true;
    try {
        std::vector<Cylinder> cyls;
        for (const auto& w : c.boundary) cyls.push_back(Cylinder{c.group.parse_word(w)});
        auto u = BoundarySpecSet::normalize(c.group, cyls);
        if (!c.boundary.empty() && u.empty()) {
            bad.emplace_back("boundary: normalized to the empty set");
            boundary_ok = false;
        }
        if (u.full()) {
            bad.emplace_back("boundary: covers everything, leaving no room for the second phase");
            boundary_ok = false;
        }
    } catch (const std::exception& e) {
        bad.emplace_back(std::string("boundary: ") + e.what());
        boundary_ok = false;
    }
    (void)boundary_ok;

    const double h = c.group.entropy_exact();
    if (c.epsilon) {
        if (*c.epsilon <= 0.0) bad.emplace_back("epsilon: must be positive");
        else if (h / *c.epsilon <= 0.25)
            bad.emplace_back("epsilon: visual dimension h/epsilon = " +
                             std::to_string(h / *c.epsilon) + " is not above 1/4");
    }

    if (c.radii.empty()) bad.emplace_back("radii: needs at least one solve region");
    for (std::size_t i = 0; i < c.radii.size(); ++i) {
        if (c.radii[i] < 2) bad.emplace_back("radii: regions must be at least 2");
        if (i > 0 && c.radii[i] <= c.radii[i - 1])
            bad.emplace_back("radii: must be strictly increasing");
    }
    if (!c.radii.empty()) {
        const int deepest = c.radii.back();
        if (c.ball_radius != 0 && c.ball_radius < deepest + 1)
            bad.emplace_back("ball_radius: needs one sphere beyond the deepest region");
        if (c.stabilization_radius > deepest)
            bad.emplace_back("stabilization_radius: exceeds the deepest region");
        if (c.windows.max_ball > deepest)
            bad.emplace_back("windows.max_ball: exceeds the deepest region");
    }
    if (c.stabilization_radius < 0) bad.emplace_back("stabilization_radius: negative");
    if (!(c.contraction_k > 0.0 && c.contraction_k < 1.0))
        bad.emplace_back("contraction_k: must lie in (0,1)");
    if (c.solve_tol <= 0.0 || c.probe_tol <= 0.0 || c.bridge_tol <= 0.0)
        bad.emplace_back("tolerances: must be positive");
    if (c.output_dir.empty()) bad.emplace_back("output_dir: empty");
    if (c.windows.target_size < 2) bad.emplace_back("windows.target_size: too small");
    if (c.cascade_levels < 1) bad.emplace_back("cascade_levels: must be at least 1");
    if (!(c.boundary_ball_r > 0.0 && c.boundary_ball_r <= 1.0))
        bad.emplace_back("boundary_ball_r: must lie in (0,1]");

    for (const auto& [name, on] : c.audits) {
        (void)on;
        const auto& known = known_audits();
        if (std::find(known.begin(), known.end(), name) == known.end())
            bad.emplace_back("audits: unknown audit '" + name + "'");
    }

    if (have_pot) {
        const int ns = c.group.num_generators();
        const double well_curv = std::min(std::abs(pot.d2V(pot.c0)), std::abs(pot.d2V(pot.c1)));
        ContinuationConfig ccfg;
        bool have_ccfg = false;
        try {
            ccfg = ContinuationConfig::make(pot, ns, c.contraction_k, well_curv);
            have_ccfg = true;
        } catch (const std::exception& e) {
            bad.emplace_back(std::string("continuation constants: ") + e.what());
        }
        if (have_ccfg) {
            if (!c.rho.ladder && c.rho.fixed_value <= 0.0)
                bad.emplace_back("rho_rule: fixed coupling must be positive");
            std::vector<double> rungs = c.rho.rungs;
            if (c.rho.ladder && rungs.empty()) {
                if (c.rho.depth < 2) bad.emplace_back("rho_rule: ladder depth must be at least 2");
                else rungs = default_ladder(ccfg.rho1, c.rho.depth);
            }
            if (c.rho.ladder && !rungs.empty()) {
                bool shape_ok = rungs.size() >= 2;
                if (!shape_ok) bad.emplace_back("rho_rule: ladder needs at least two rungs");
                for (std::size_t i = 0; i < rungs.size(); ++i) {
                    if (rungs[i] <= 0.0) {
                        bad.emplace_back("rho_rule: rungs must be positive");
                        shape_ok = false;
                        break;
                    }
                    if (i > 0 && rungs[i] >= rungs[i - 1]) {
                        bad.emplace_back("rho_rule: rungs must decrease strictly");
                        shape_ok = false;
                        break;
                    }
                }
                if (shape_ok && rungs.front() > ccfg.rho1 * (1.0 + 1e-12)) {
                    bad.emplace_back("rho_rule: ladder starts above the classification threshold");
                    shape_ok = false;
                }
                if (shape_ok) {
                    const double growth_c = ns * ball_comparison_constant(c.group);
                    for (std::size_t n = 1; n <= rungs.size(); ++n) {
                        const double sigma =
                            detail::a_priori_band_radius(ccfg, pot, ns, rungs[n - 1]);
                        const double e_hn = growth_c * std::exp(h * static_cast<double>(n));
                        const double lhs = e_hn / (e_hn + 1.0);
                        const double rhs = (1.0 - 2.0 * sigma) * (1.0 - 2.0 * sigma);
                        if (!(lhs < rhs)) {
                            bad.emplace_back("rho_rule: rung " + std::to_string(n) +
                                             " violates the separation inequality (bound " +
                                             std::to_string(lhs) + " vs " + std::to_string(rhs) +
                                             ")");
                            break;
                        }
                    }
                }
            }
        }
    }
    return bad;
}

inline void validate_config_or_throw(const ExperimentConfig& c) {
    auto bad = validate_config(c);
    if (bad.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw std::invalid_argument(msg);
}

// Content identity of the experiment itself: where the outputs land is
// execution plumbing and stays out of the hash, so runs into different
// directories still produce byte-identical field artifacts.
inline std::string config_hash(const ExperimentConfig& c) {
    json j = config_to_json(c);
    j.erase("output_dir");
    const std::string dump = j.dump();
    return hex64(fnv1a64(dump.data(), dump.size()));
}

inline ExperimentConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

} // namespace hypac
