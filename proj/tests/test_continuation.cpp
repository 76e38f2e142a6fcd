#include <catch2/catch_amalgamated.hpp>

#include "hypac/solve.hpp"
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

} // namespace

TEST_CASE("single-site minimum matches grid search") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        double rho = std::exp(rng.uniform(std::log(1e-3), std::log(1.0)));
        std::uint32_t deg = 3 + rng.uniform_index(4);
        std::vector<double> nb;
        double sum = 0.0;
        for (std::uint32_t s = 0; s < deg; ++s) {
            nb.push_back(rng.uniform(-1.3, 1.3));
            sum += nb.back();
        }
        double closed = detail::site_minimum(quartic(), rho, deg, sum);
        double scanned = oracle::site_argmin([&](double y) { return quartic().V(y); }, rho, nb);
        CHECK(closed == Catch::Approx(scanned).margin(1e-7));
        // stationarity of the closed form
        double p = rho * deg;
        CHECK(closed * closed * closed + (p - 1.0) * closed - rho * sum ==
              Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("coordinate descent reaches tolerance and freezes data") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    ScalarField f(ball, 0.02);
    Rng rng(5);
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        if (ball.length(g) >= 2) {
            f.frozen.set(g);
            f.values[g] = ball.length(g) == 2 ? (rng.coin() ? 1.0 : -1.0) : 0.7;
        } else {
            f.values[g] = rng.uniform(-0.5, 0.5);
        }
    }
    auto before = f.values;
    auto stats = solve_dirichlet(f, quartic());
    CHECK(stats.final_residual <= 1e-10);
    CHECK(stats.sweeps > 0);
    CHECK(stats.action_drop >= 0.0);
    f.frozen.for_each([&](std::uint32_t g) { CHECK(f.values[g] == before[g]); });
    CHECK(sup_residual(f, quartic(), f.free_sites()) <= 1e-10);
}

TEST_CASE("free sites touching the rim are refused") {
    CayleyBall ball(GroupSpec::free_group(2), 2);
    ScalarField f(ball, 0.1);
    CHECK_THROWS_AS(solve_dirichlet(f, quartic()), std::invalid_argument);
}

TEST_CASE("jacobi and gauss-seidel land on the same solution") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    auto setup = [&](ScalarField& f) {
        for (std::uint32_t g = 0; g < f.size(); ++g)
            if (ball.length(g) >= 2) {
                f.frozen.set(g);
                f.values[g] = g % 3 ? 1.0 : -1.0;
            }
    };
    ScalarField gs(ball, 0.01), jac(ball, 0.01);
    setup(gs);
    setup(jac);
    solve_dirichlet(gs, quartic());
    SolveOptions jopt;
    jopt.mode = SweepMode::jacobi;
    jopt.check_monotone = false;
    solve_dirichlet(jac, quartic(), jopt);
    for (std::uint32_t g = 0; g < gs.size(); ++g)
        CHECK(gs.values[g] == Catch::Approx(jac.values[g]).margin(1e-8));
}

TEST_CASE("solved fields pass the local-minimum probe") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    ScalarField f(ball, 0.02);
    for (std::uint32_t g = 0; g < f.size(); ++g)
        if (ball.length(g) >= 2) {
            f.frozen.set(g);
            f.values[g] = 1.0;
        }
    solve_dirichlet(f, quartic());
    auto probe = probe_local_min(f, quartic());
    CHECK(probe.passed);
    CHECK(probe.worst_coordinate_gain > 0.0);
    CHECK(probe.worst_random_gain > 0.0);
}

TEST_CASE("seed curvature validates critical data") {
    CHECK(seed_curvature(quartic(), {-1.0, 1.0, -1.0}, 2.0) ==
          std::vector<double>{2.0, 2.0, 2.0});
    CHECK_THROWS_AS(seed_curvature(quartic(), {0.5}, 2.0), std::invalid_argument);
    // the saddle is critical but sits below the rank-2 curvature floor
    CHECK_THROWS_AS(seed_curvature(quartic(), {0.0}, 2.0), std::invalid_argument);
    CHECK(seed_curvature(quartic(), {0.0}, 1.0) == std::vector<double>{-1.0});
}

TEST_CASE("quasi-newton map contracts inside the seed tube") {
    auto cfg = tree_config();
    CayleyBall ball(GroupSpec::free_group(2), 3);
    Rng rng(13);
    std::vector<double> seed(ball.size());
    for (auto& v : seed) v = rng.coin() ? 1.0 : -1.0;
    auto curvature = seed_curvature(quartic(), seed, cfg.hat_c);

    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ScalarField x(ball, cfg.rho0), y(ball, cfg.rho0);
        for (std::uint32_t g = 0; g < ball.size(); ++g) {
            x.values[g] = seed[g] + rng.uniform(-cfg.sigma0, cfg.sigma0);
            y.values[g] = seed[g] + rng.uniform(-cfg.sigma0, cfg.sigma0);
        }
        double before = 0.0;
        for (std::uint32_t g = 0; g < ball.size(); ++g)
            before = std::max(before, std::abs(x.values[g] - y.values[g]));
        quasi_newton_step(x, quartic(), curvature);
        quasi_newton_step(y, quartic(), curvature);
        double after = 0.0;
        for (std::uint32_t g = 0; g < ball.size(); ++g)
            after = std::max(after, std::abs(x.values[g] - y.values[g]));
        if (before > 0.0) worst = std::max(worst, after / before);
    }
    CHECK(worst <= cfg.k + 1e-6);
}

TEST_CASE("continuation stays near the seed and reports its rate") {
    auto cfg = tree_config();
    CayleyBall ball(GroupSpec::free_group(2), 4);
    ScalarField f(ball, cfg.rho0);
    std::vector<double> seed(ball.size(), 1.0);
    for (std::uint32_t g = 0; g < ball.size(); ++g)
        if (ball.length(g) <= 1) seed[g] = -1.0;
    for (std::uint32_t g = ball.sphere_begin(4); g < ball.size(); ++g) {
        f.frozen.set(g);
        f.values[g] = seed[g];
    }

    auto stats = continue_from_seed(f, quartic(), cfg, seed);
    CHECK(stats.rate_bound == Catch::Approx(cfg.k / 2.0 + cfg.rho0 * cfg.c_tilde / cfg.hat_c));
    CHECK(stats.rate_bound < 1.0);
    CHECK(stats.observed_rate <= stats.rate_bound + 1e-6);
    CHECK(stats.max_displacement <= cfg.sigma0);
    CHECK(stats.final_residual <= 1e-8);
    f.frozen.for_each([&](std::uint32_t g) { CHECK(f.values[g] == seed[g]); });

    ScalarField hot(ball, cfg.rho0 * 2.0);
    CHECK_THROWS_AS(continue_from_seed(hot, quartic(), cfg, seed), std::invalid_argument);
}

TEST_CASE("phase classification bands") {
    CayleyBall ball(GroupSpec::free_group(2), 2);
    ScalarField f(ball, 0.1, 0.0);
    f.values[0] = -0.99;
    f.values[1] = 0.9;
    f.values[2] = 0.5; // middle band
    for (std::uint32_t g = 3; g < f.size(); ++g) f.values[g] = -1.0;
    auto p = classify_phases(f, quartic(), 1.0 / 24.0);
    CHECK(p.phase0.test(0));
    CHECK(p.phase1.test(1));
    CHECK(p.phase0.count() + p.phase1.count() == f.size());
    REQUIRE(p.violations.size() == 2);
    CHECK(p.violations[0] == 1);
    CHECK(p.violations[1] == 2);
    CHECK(p.max_band_deviation == Catch::Approx(0.5));
}
