#include <catch2/catch_amalgamated.hpp>

#include "hypac/plateau.hpp"
#include "oracles.hpp"

using namespace hypac;

namespace {

const Potential& quartic() {
    static Potential p = Potential::quartic_double_well();
    return p;
}

ContinuationConfig tree_config() {
    return ContinuationConfig::make(quartic(), 4, 0.5, 2.0);
}

BoundarySpecSet cylinder_a(const GroupSpec& spec) {
    return BoundarySpecSet::normalize(spec, {Cylinder{spec.parse_word("a")}});
}

Bitset a_cone(const CayleyBall& ball) {
    Bitset c(ball.size());
    for (std::uint32_t g = 0; g < ball.size(); ++g) {
        auto w = ball.word_of(g);
        if (!w.empty() && w[0] == 0) c.set(g);
    }
    return c;
}

struct Sweep {
    GroupSpec spec = GroupSpec::free_group(2);
    CayleyBall ball{spec, 5};
    ContinuationConfig cfg = tree_config();
    RhoSweepResult result;

    Sweep() {
        DirichletProblem prob(spec, cylinder_a(spec), cfg.rho0, {3, 4}, cfg);
        auto ladder = default_ladder(cfg.rho1, 2);
        result = rho_sweep_report(prob, ball, quartic(), ladder, 3, spec.entropy_exact(),
                                  ball_comparison_constant(spec));
    }
};

const Sweep& sweep() {
    static Sweep s;
    return s;
}

} // namespace

TEST_CASE("unit-capacity max flow on hand graphs") {
    FlowNetwork single(2);
    single.add_undirected_edge(0, 1);
    CHECK(single.max_flow(0, 1) == 1);

    FlowNetwork path(3);
    path.add_undirected_edge(0, 1);
    path.add_undirected_edge(1, 2);
    CHECK(path.max_flow(0, 2) == 1);

    FlowNetwork twin(4);
    twin.add_undirected_edge(0, 1);
    twin.add_undirected_edge(1, 3);
    twin.add_undirected_edge(0, 2);
    twin.add_undirected_edge(2, 3);
    CHECK(twin.max_flow(0, 3) == 2);

    FlowNetwork k4(4);
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = a + 1; b < 4; ++b) k4.add_undirected_edge(a, b);
    CHECK(k4.max_flow(0, 3) == 3);

    FlowNetwork bad(2);
    CHECK_THROWS_AS(bad.max_flow(0, 0), std::invalid_argument);
    CHECK_THROWS_AS(bad.max_flow(0, 5), std::invalid_argument);
}

TEST_CASE("edge cut counts crossings once and respects complements") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    CutWindow full = make_window(ball, ball_subset(ball, 3));

    Bitset b1 = ball_subset(ball, 1);
    CHECK(edge_cut(ball, b1, full) == 12);
    CHECK(edge_cut(ball, b1.complement(), full) == 12);

    Bitset origin(ball.size());
    origin.set(0);
    CHECK(edge_cut(ball, origin, full) == 4);
    CHECK(edge_cut(ball, Bitset(ball.size()), full) == 0);
    CHECK(edge_cut(ball, Bitset(ball.size()).complement(), full) == 0);

    CutWindow b2 = make_window(ball, ball_subset(ball, 2));
    CHECK(b2.omega_in == ball_subset(ball, 1));
    CHECK(edge_cut(ball, origin, b2) == 4);
    CHECK(edge_cut(ball, b1, b2) == 12);

    CutWindow b1w = make_window(ball, ball_subset(ball, 1));
    CHECK(b1w.omega_in.count() == 1);
    CHECK(edge_cut(ball, origin, b1w) == 4);
}

TEST_CASE("cone partition certifies on hand windows") {
    CayleyBall ball(GroupSpec::free_group(2), 4);
    Bitset d0 = a_cone(ball);

    auto b1 = plateau_certify(ball, d0, make_window(ball, ball_subset(ball, 1)));
    CHECK(b1.ran_exhaustive);
    CHECK(b1.ran_oracle);
    CHECK(b1.modes_agree);
    CHECK(b1.b_value == 1);
    CHECK(b1.min_value == 1);
    CHECK(b1.minimal);
    CHECK(b1.witness_flips.empty());

    auto b2 = plateau_certify(ball, d0, make_window(ball, ball_subset(ball, 2)));
    CHECK(b2.modes_agree);
    CHECK(b2.b_value == 1);
    CHECK(b2.min_value == 1);
    CHECK(b2.minimal);

    auto b3 = plateau_certify(ball, d0, make_window(ball, ball_subset(ball, 3)));
    CHECK(b3.ran_exhaustive); // 17 free sites, within the default cap
    CHECK(b3.modes_agree);
    CHECK(b3.minimal);
    CHECK(b3.min_value == 1);

    // window buried inside one phase: nothing crosses
    CutWindow bulk = make_window(ball, d0 & ball_subset(ball, 3));
    auto flat = plateau_certify(ball, d0, bulk);
    CHECK(flat.b_value == 0);
    CHECK(flat.minimal);
}

TEST_CASE("certification modes agree with the reference cut search") {
    CayleyBall ball(GroupSpec::free_group(2), 4);
    Bitset cone = a_cone(ball);
    Rng rng(911);

    for (int trial = 0; trial < 30; ++trial) {
        std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(ball.sphere_end(3)));
        std::size_t target = 1 + rng.uniform_index(12);
        CutWindow win = make_window(ball, random_connected_subset(ball, rng, seed, target,
                                                                 ball.size()));
        auto cert = plateau_certify(ball, cone, win);
        if (cert.ran_exhaustive && cert.ran_oracle) CHECK(cert.modes_agree);
        CHECK(cert.b_value == edge_cut(ball, cone, win));
        CHECK(cert.min_value == oracle::brute_min_cut(ball, cone, win));
        CHECK(cert.minimal == (cert.b_value <= cert.min_value));
    }

    for (int trial = 0; trial < 12; ++trial) {
        Bitset noise(ball.size());
        for (std::uint32_t g = 0; g < ball.size(); ++g)
            if (rng.coin()) noise.set(g);
        std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(ball.sphere_end(3)));
        std::size_t target = 1 + rng.uniform_index(10);
        CutWindow win = make_window(ball, random_connected_subset(ball, rng, seed, target,
                                                                 ball.size()));
        auto cert = plateau_certify(ball, noise, win);
        if (cert.ran_exhaustive && cert.ran_oracle) CHECK(cert.modes_agree);
        CHECK(cert.min_value == oracle::brute_min_cut(ball, noise, win));
    }
}

TEST_CASE("non-minimal partitions produce witness flips") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    Bitset lone(ball.size());
    lone.set(0);
    CutWindow win = make_window(ball, ball_subset(ball, 2));

    auto res = plateau_certify(ball, lone, win);
    CHECK(res.b_value == 4);
    CHECK(res.min_value == 0);
    CHECK_FALSE(res.minimal);
    CHECK(res.witness_flips == std::vector<std::uint32_t>{0});

    auto oracle_only = plateau_certify(ball, lone, win, CertifyMode::oracle);
    CHECK_FALSE(oracle_only.ran_exhaustive);
    CHECK(oracle_only.min_value == 0);
    CHECK_FALSE(oracle_only.minimal);
    CHECK(oracle_only.witness_flips.empty());
}

TEST_CASE("exhaustive cap falls back or refuses") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    Bitset d0 = a_cone(ball);
    CutWindow win = make_window(ball, ball_subset(ball, 2)); // 5 free sites

    auto fallback = plateau_certify(ball, d0, win, CertifyMode::both, 4);
    CHECK_FALSE(fallback.ran_exhaustive);
    CHECK(fallback.ran_oracle);
    CHECK(fallback.min_value == 1);

    CHECK_THROWS_AS(plateau_certify(ball, d0, win, CertifyMode::exhaustive, 4),
                    std::invalid_argument);
}

TEST_CASE("ball comparison constants") {
    CHECK(ball_comparison_constant(GroupSpec::free_group(2)) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(ball_comparison_constant(GroupSpec::free_group(3)) == Catch::Approx(1.5).epsilon(1e-15));

    const double c33 = ball_comparison_constant(GroupSpec::free_product({3, 3}));
    CHECK(c33 == Catch::Approx(4.0).epsilon(1e-9));

    const double c23 = ball_comparison_constant(GroupSpec::free_product({2, 3}));
    CHECK(c23 == Catch::Approx(10.0 / std::sqrt(2.0)).epsilon(1e-6));
    CHECK(c23 <= 10.0 / std::sqrt(2.0) + 1e-12);

    for (auto spec : {GroupSpec::free_product({2, 3}), GroupSpec::free_product({3, 3})}) {
        const double c = ball_comparison_constant(spec);
        const double h = spec.entropy_exact();
        auto spheres = spec.sphere_counts(48);
        double cum = 0.0;
        for (std::size_t n = 0; n < spheres.size(); ++n) {
            cum += static_cast<double>(spheres[n]);
            const double envelope = std::exp(h * static_cast<double>(n));
            CHECK(cum <= c * envelope * (1.0 + 1e-12));
            CHECK(cum * c >= envelope * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("default ladder is a quarter-step descent") {
    auto ladder = default_ladder(1.0 / 400.0, 3);
    REQUIRE(ladder.size() == 3);
    CHECK(ladder[0] == 1.0 / 1600.0);
    CHECK(ladder[1] == 1.0 / 6400.0);
    CHECK(ladder[2] == 1.0 / 25600.0);
    CHECK_THROWS_AS(default_ladder(0.01, 1), std::invalid_argument);
    CHECK_THROWS_AS(default_ladder(0.01, 0), std::invalid_argument);
}

TEST_CASE("coupling sweep stabilizes the cone partition") {
    const Sweep& s = sweep();
    const RhoSweepResult& r = s.result;

    REQUIRE(r.partition.ladder.size() == 2);
    for (const auto& rung : r.partition.ladder) {
        CHECK(rung.condition_ok);
        CHECK(rung.condition_lhs < rung.condition_rhs);
        CHECK(rung.sigma < 0.02);
        CHECK(rung.final_residual <= 1e-8);
    }
    CHECK(r.partition.ladder[0].rho == Catch::Approx(s.cfg.rho1 / 4.0));
    CHECK(r.partition.ladder[1].rho == Catch::Approx(s.cfg.rho1 / 16.0));

    CHECK(r.conditions_ok);
    CHECK(r.stabilized);
    CHECK(r.disagreement.empty());
    CHECK(r.middle_band.empty());
    REQUIRE(r.rung_labels.size() == 2);
    CHECK(r.rung_labels[0] == r.rung_labels[1]);

    Bitset cone = a_cone(s.ball);
    CHECK(r.partition.D0_sites == cone);
    CHECK(r.partition.D1_sites == cone.complement());

    const std::uint32_t site_a = s.ball.find(s.spec.parse_word("a"));
    REQUIRE(r.partition.T_edges.size() == 1);
    CHECK(r.partition.T_edges[0] == std::pair<std::uint32_t, std::uint32_t>{0, site_a});
    CHECK(r.partition.T_sites.count() == 2);
    CHECK(r.partition.T_sites.test(0));
    CHECK(r.partition.T_sites.test(site_a));
    CHECK(r.partition.region_radius == 4);
    CHECK(r.partition.stabilization_radius == 3);

    PlateauPartition part = rho_sweep(DirichletProblem(s.spec, cylinder_a(s.spec), s.cfg.rho0,
                                                       {3, 4}, s.cfg),
                                      s.ball, quartic(), default_ladder(s.cfg.rho1, 2), 3,
                                      s.spec.entropy_exact(), ball_comparison_constant(s.spec));
    CHECK(part.D0_sites == cone);
    CHECK(part.T_edges == r.partition.T_edges);
}

TEST_CASE("coupling sweep validates ladder and radii") {
    auto spec = GroupSpec::free_group(2);
    auto cfg = tree_config();
    CayleyBall ball(spec, 5);
    DirichletProblem prob(spec, cylinder_a(spec), cfg.rho0, {3, 4}, cfg);
    auto run = [&](const CayleyBall& b, std::vector<double> ladder, int stab) {
        rho_sweep_report(prob, b, quartic(), ladder, stab, spec.entropy_exact(), 2.0);
    };

    CHECK_THROWS_AS(run(ball, {cfg.rho1 / 4.0}, 3), std::invalid_argument);
    CHECK_THROWS_AS(run(ball, {cfg.rho1 * 2.0, cfg.rho1}, 3), std::invalid_argument);
    CHECK_THROWS_AS(run(ball, {cfg.rho1 / 4.0, cfg.rho1 / 4.0}, 3), std::invalid_argument);
    CHECK_THROWS_AS(run(ball, {cfg.rho1 / 4.0, 0.0}, 3), std::invalid_argument);
    CHECK_THROWS_AS(run(ball, default_ladder(cfg.rho1, 2), 5), std::invalid_argument);

    CayleyBall tight(spec, 4);
    CHECK_THROWS_AS(run(tight, default_ladder(cfg.rho1, 2), 3), std::invalid_argument);
}

TEST_CASE("separating set meets every sampled geodesic") {
    const Sweep& s = sweep();
    BoundarySpecSet u = cylinder_a(s.spec);
    Rng rng(4242);

    auto audit = separation_audit(s.ball, s.result.partition, u, rng, 200, 2);
    CHECK(audit.passed);
    CHECK(audit.pairs_checked == 200);
    CHECK(audit.geodesics_checked >= 200);
    CHECK(audit.max_crossings >= 2);
    CHECK(audit.failures.empty());

    PlateauPartition gutted = s.result.partition;
    gutted.T_sites = Bitset(s.ball.size());
    gutted.T_edges.clear();
    Rng rng2(4242);
    auto broken = separation_audit(s.ball, gutted, u, rng2, 50, 2);
    CHECK_FALSE(broken.passed);
    CHECK(broken.failures.size() == broken.pairs_checked);

    BoundarySpecSet deep =
        BoundarySpecSet::normalize(s.spec, {Cylinder{s.spec.parse_word("aaaaaa")}});
    Rng rng3(7);
    auto vacuous = separation_audit(s.ball, s.result.partition, deep, rng3, 50, 2);
    CHECK(vacuous.passed);
    CHECK(vacuous.pairs_checked == 0);
}

TEST_CASE("phase components must reach the outer sphere") {
    const Sweep& s = sweep();
    auto audit = infinite_components_audit(s.result.partition);
    CHECK(audit.passed);
    CHECK(audit.components == 2);

    const std::uint32_t bb = s.ball.find(s.spec.parse_word("bb"));
    PlateauPartition doctored = s.result.partition;
    doctored.D0_sites.set(bb);
    doctored.D1_sites.reset(bb);
    auto island = infinite_components_audit(doctored);
    CHECK_FALSE(island.passed);
    CHECK(island.island == std::vector<std::uint32_t>{bb});
    CHECK(island.components > 2);
}

TEST_CASE("window action collapses to the cut functional") {
    CayleyBall ball(GroupSpec::free_group(2), 4);
    Bitset d0 = a_cone(ball);
    CutWindow win = make_window(ball, ball_subset(ball, 2));

    auto bc = bridge_check(ball, d0, win, quartic(), 0.01);
    CHECK(bc.applicable);
    CHECK(bc.cut == 1);
    CHECK(bc.predicted == Catch::Approx(0.02).epsilon(1e-15));
    CHECK(bc.action_value == Catch::Approx(bc.predicted).epsilon(1e-14));
    CHECK(bc.relative_error <= 1e-12);

    // a crossing edge leaves this two-site window, so the bridge is off
    Bitset lone(ball.size());
    lone.set(0);
    Bitset pair(ball.size());
    pair.set(0);
    pair.set(ball.find(GroupSpec::free_group(2).parse_word("a")));
    auto off = bridge_check(ball, lone, make_window(ball, pair), quartic(), 0.01);
    CHECK_FALSE(off.applicable);
    CHECK(off.cut == 0);
}
