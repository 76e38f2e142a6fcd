#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>

#include "hypac/config.hpp"

using namespace hypac;
namespace fs = std::filesystem;

namespace {

ExperimentConfig runnable() {
    ExperimentConfig c;
    c.boundary = {"a"};
    return c;
}

bool flags(const std::vector<std::string>& bad, const std::string& needle) {
    return std::any_of(bad.begin(), bad.end(), [&](const std::string& m) {
        return m.find(needle) != std::string::npos;
    });
}

} // namespace

TEST_CASE("experiment defaults") {
    ExperimentConfig c;
    CHECK(c.group.describe() == GroupSpec::free_group(2).describe());
    CHECK(c.boundary.empty());
    CHECK(c.potential == "quartic");
    CHECK_FALSE(c.epsilon.has_value());
    CHECK(c.rho.ladder);
    CHECK(c.rho.rungs.empty());
    CHECK(c.rho.depth == 4);
    CHECK(c.radii == std::vector<int>{3, 4, 5});
    CHECK(c.ball_radius == 0);
    CHECK(c.contraction_k == 0.5);
    CHECK(c.solve_tol == 1e-10);
    CHECK(c.probe_tol == 1e-6);
    CHECK(c.bridge_tol == 1e-12);
    CHECK(c.seed == 20240601);
    CHECK(c.output_dir == "out");
    CHECK(c.audits.empty());
    CHECK(c.stabilization_radius == 4);
    CHECK(c.windows.max_ball == 3);
    CHECK(c.windows.random_count == 100);
    CHECK(c.windows.target_size == 12);
    CHECK(c.separation_pairs == 50);
    CHECK(c.quasi_windows == 200);
    CHECK(c.cascade_levels == 6);
    CHECK(c.boundary_ball_r == 0.25);
    CHECK(c.audit_enabled("growth"));
    CHECK(c.audit_enabled("bridge"));
}

TEST_CASE("audit toggles default to enabled") {
    ExperimentConfig c;
    c.audits = {{"bridge", false}, {"decay", true}};
    CHECK_FALSE(c.audit_enabled("bridge"));
    CHECK(c.audit_enabled("decay"));
    CHECK(c.audit_enabled("plateau"));
    CHECK(known_audits().size() == 18);
}

TEST_CASE("config json round trip") {
    ExperimentConfig c;
    c.group = GroupSpec::free_product({2, 3});
    c.boundary = {"t1"};
    c.potential = "quartic";
    c.epsilon = 0.9;
    c.rho.ladder = false;
    c.rho.fixed_value = 0.00125;
    c.radii = {2, 3};
    c.ball_radius = 5;
    c.contraction_k = 0.4;
    c.solve_tol = 1e-9;
    c.probe_tol = 1e-5;
    c.bridge_tol = 1e-11;
    c.seed = 99;
    c.output_dir = "elsewhere";
    c.audits = {{"cascade", false}};
    c.stabilization_radius = 2;
    c.windows = {2, 7, 9};
    c.separation_pairs = 11;
    c.quasi_windows = 13;
    c.cascade_levels = 2;
    c.boundary_ball_r = 0.5;

    ExperimentConfig back = config_from_json(config_to_json(c));
    CHECK(config_to_json(back) == config_to_json(c));
    CHECK(back.group.describe() == c.group.describe());
    CHECK_FALSE(back.rho.ladder);
    CHECK(back.rho.fixed_value == 0.00125);
    CHECK(back.epsilon == c.epsilon);
    CHECK(back.audits == c.audits);

    ExperimentConfig rungy;
    rungy.boundary = {"a"};
    rungy.rho.rungs = {0.002, 0.0005};
    ExperimentConfig rungy_back = config_from_json(config_to_json(rungy));
    CHECK(rungy_back.rho.rungs == rungy.rho.rungs);
    CHECK(config_to_json(rungy_back) == config_to_json(rungy));

    CHECK_THROWS_AS(config_from_json(json{{"group", group_to_json(c.group)},
                                          {"boundary", json::array()},
                                          {"potential", json{{"kind", "quartic"}}},
                                          {"rho_rule", json{{"kind", "annealed"}}}}),
                    std::invalid_argument);
}

TEST_CASE("config hash tracks content, not destination") {
    ExperimentConfig a = runnable();
    ExperimentConfig b = a;
    b.output_dir = "somewhere/else";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);

    ExperimentConfig c = a;
    c.seed = 7;
    CHECK(config_hash(c) != config_hash(a));
    ExperimentConfig d = a;
    d.rho.depth = 3;
    CHECK(config_hash(d) != config_hash(a));
    ExperimentConfig e = a;
    e.radii = {3, 4};
    CHECK(config_hash(e) != config_hash(a));
}

TEST_CASE("validation accepts the stock experiment") {
    CHECK(validate_config(runnable()).empty());
    CHECK_NOTHROW(validate_config_or_throw(runnable()));
}

TEST_CASE("validation rejects structural mistakes") {
    {
        ExperimentConfig c = runnable();
        c.boundary = {};
        CHECK(flags(validate_config(c), "needs at least one cylinder"));
    }
    {
        ExperimentConfig c = runnable();
        c.boundary = {"a", "A", "b", "B"};
        CHECK(flags(validate_config(c), "covers everything"));
    }
    {
        ExperimentConfig c = runnable();
        c.boundary = {"a!"};
        CHECK(flags(validate_config(c), "boundary:"));
    }
    {
        ExperimentConfig c = runnable();
        c.epsilon = 5.0 * std::log(3.0);
        CHECK(flags(validate_config(c), "not above 1/4"));
    }
    {
        ExperimentConfig c = runnable();
        c.epsilon = -1.0;
        CHECK(flags(validate_config(c), "epsilon: must be positive"));
    }
    {
        ExperimentConfig c = runnable();
        c.radii = {};
        CHECK(flags(validate_config(c), "needs at least one solve region"));
    }
    {
        ExperimentConfig c = runnable();
        c.radii = {1, 4};
        CHECK(flags(validate_config(c), "at least 2"));
    }
    {
        ExperimentConfig c = runnable();
        c.radii = {3, 3};
        CHECK(flags(validate_config(c), "strictly increasing"));
    }
    {
        ExperimentConfig c = runnable();
        c.ball_radius = 5;
        CHECK(flags(validate_config(c), "one sphere beyond"));
    }
    {
        ExperimentConfig c = runnable();
        c.stabilization_radius = 9;
        CHECK(flags(validate_config(c), "stabilization_radius"));
    }
    {
        ExperimentConfig c = runnable();
        c.windows.max_ball = 9;
        CHECK(flags(validate_config(c), "windows.max_ball"));
    }
    {
        ExperimentConfig c = runnable();
        c.contraction_k = 1.0;
        CHECK(flags(validate_config(c), "contraction_k"));
    }
    {
        ExperimentConfig c = runnable();
        c.solve_tol = 0.0;
        CHECK(flags(validate_config(c), "tolerances"));
    }
    {
        ExperimentConfig c = runnable();
        c.output_dir = "";
        CHECK(flags(validate_config(c), "output_dir"));
    }
    {
        ExperimentConfig c = runnable();
        c.windows.target_size = 1;
        CHECK(flags(validate_config(c), "target_size"));
    }
    {
        ExperimentConfig c = runnable();
        c.cascade_levels = 0;
        CHECK(flags(validate_config(c), "cascade_levels"));
    }
    {
        ExperimentConfig c = runnable();
        c.boundary_ball_r = 1.5;
        CHECK(flags(validate_config(c), "boundary_ball_r"));
    }
    {
        ExperimentConfig c = runnable();
        c.audits = {{"warpdrive", true}};
        CHECK(flags(validate_config(c), "unknown audit"));
    }
    {
        ExperimentConfig c = runnable();
        c.potential = "sombrero";
        CHECK_FALSE(validate_config(c).empty());
    }
}

TEST_CASE("validation rejects broken coupling rules") {
    {
        ExperimentConfig c = runnable();
        c.rho.ladder = false;
        c.rho.fixed_value = 0.0;
        CHECK(flags(validate_config(c), "fixed coupling"));
    }
    {
        ExperimentConfig c = runnable();
        c.rho.rungs = {0.0005};
        CHECK(flags(validate_config(c), "at least two rungs"));
    }
    {
        ExperimentConfig c = runnable();
        c.rho.rungs = {0.0005, 0.001};
        CHECK(flags(validate_config(c), "decrease strictly"));
    }
    {
        ExperimentConfig c = runnable();
        c.rho.rungs = {0.0005, -0.001};
        CHECK(flags(validate_config(c), "must be positive"));
    }
    {
        ExperimentConfig c = runnable();
        c.rho.rungs = {0.5, 0.1};
        CHECK(flags(validate_config(c), "starts above"));
    }
    {
        ExperimentConfig c = runnable();
        c.rho.depth = 1;
        CHECK(flags(validate_config(c), "depth must be at least 2"));
    }
    {
        // honest a-priori band radius at the classification threshold itself
        ExperimentConfig c = runnable();
        auto cfg = ContinuationConfig::make(Potential::quartic_double_well(), 4, 0.5, 2.0);
        c.rho.rungs = {cfg.rho1, cfg.rho1 / 4.0};
        CHECK(flags(validate_config(c), "separation inequality"));
    }
}

TEST_CASE("configs load from disk with clear failure modes") {
    fs::path dir = fs::temp_directory_path();
    fs::path good = dir / "hypac_test_cfg_good.json";
    fs::path mangled = dir / "hypac_test_cfg_bad.json";
    fs::path empty = dir / "hypac_test_cfg_empty.json";

    ExperimentConfig c = runnable();
    write_text_file(good.string(), config_to_json(c).dump(2));
    ExperimentConfig loaded = load_config(good.string());
    CHECK(config_hash(loaded) == config_hash(c));

    write_text_file(mangled.string(), "{\"group\": ");
    CHECK_THROWS_AS(load_config(mangled.string()), std::runtime_error);

    write_text_file(empty.string(), "{}");
    CHECK_THROWS_AS(load_config(empty.string()), std::invalid_argument);

    std::error_code ec;
    fs::remove(good, ec);
    fs::remove(mangled, ec);
    fs::remove(empty, ec);

    CHECK_NOTHROW(make_potential("quartic"));
    CHECK_THROWS_AS(make_potential("sombrero"), std::invalid_argument);
}
