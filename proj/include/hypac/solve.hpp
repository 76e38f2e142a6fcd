#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypac/allen_cahn.hpp"
#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/field.hpp"
#include "hypac/potential.hpp"
#include "hypac/rng.hpp"

namespace hypac {

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), residual_trace(std::move(trace)) {}
    std::vector<double> residual_trace;
};

namespace detail {

// Minimize t -> (rho/2) * sum_h (t - x_h)^2 + V(t) in one variable.
// For the quartic well the stationary equation is the depressed cubic
// t^3 + (rho*deg - 1) t - rho*sum = 0, solved in closed form and polished.
inline double site_minimum_quartic(double rho, std::uint32_t deg, double neighbor_sum) {
    const double p = rho * static_cast<double>(deg) - 1.0;
    const double q = -rho * neighbor_sum;
    double best = 0.0;
    auto site_value = [&](double t) {
        double quad = 0.5 * rho * (static_cast<double>(deg) * t * t - 2.0 * t * neighbor_sum);
        double v = 0.25 * (1.0 - t * t) * (1.0 - t * t);
        return quad + v;
    };
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    std::vector<double> roots;
    if (disc > 0.0) {
        double s = std::sqrt(disc);
        double u = std::cbrt(-q / 2.0 + s);
        double v = std::cbrt(-q / 2.0 - s);
        roots.push_back(u + v);
    } else {
        // three real roots via the trigonometric form
        double r = 2.0 * std::sqrt(-p / 3.0);
        double phi = std::acos(std::clamp(-q / 2.0 / std::sqrt(-p * p * p / 27.0), -1.0, 1.0));
        for (int j = 0; j < 3; ++j)
            roots.push_back(r * std::cos((phi - 2.0 * M_PI * j) / 3.0));
    }
    double best_val = std::numeric_limits<double>::infinity();
    for (double t : roots) {
        // polish the root on f'(t) = t^3 + p t + q
        for (int it = 0; it < 3; ++it) {
            double f = t * t * t + p * t + q;
            double df = 3.0 * t * t + p;
            if (std::abs(df) < 1e-300) break;
            t -= f / df;
        }
        double val = site_value(t);
        if (val < best_val) { best_val = val; best = t; }
    }
    return best;
}

inline double site_minimum_generic(const Potential& pot, double rho, std::uint32_t deg,
                                   double neighbor_sum, double lo, double hi) {
    auto fprime = [&](double t) {
        return rho * (static_cast<double>(deg) * t - neighbor_sum) + pot.dV(t);
    };
    auto fval = [&](double t) {
        double quad = 0.5 * rho * (static_cast<double>(deg) * t * t - 2.0 * t * neighbor_sum);
        return quad + pot.V(t);
    };
    const int kGrid = 96;
    double best = lo, best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) {
        double t = lo + (hi - lo) * i / kGrid;
        double v = fval(t);
        if (v < best_val) { best_val = v; best = t; }
    }
    double step = (hi - lo) / kGrid;
    double a = std::max(lo, best - step), b = std::min(hi, best + step);
    if (fprime(a) <= 0.0 && fprime(b) >= 0.0) {
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (a + b);
            if (fprime(m) <= 0.0) a = m; else b = m;
        }
        best = 0.5 * (a + b);
    }
    return best;
}

inline double site_minimum(const Potential& pot, double rho, std::uint32_t deg,
                           double neighbor_sum) {
    if (pot.quartic) return site_minimum_quartic(rho, deg, neighbor_sum);
    double mean = deg ? neighbor_sum / deg : 0.0;
    double lo = std::min(pot.c0 - 1.0, mean - 1.0);
    double hi = std::max(pot.c1 + 1.0, mean + 1.0);
    return site_minimum_generic(pot, rho, deg, neighbor_sum, lo, hi);
}

} // namespace detail

enum class SweepMode { gauss_seidel, jacobi };

struct SolveOptions {
    double tol = 1e-10;
    std::uint32_t max_sweeps = 200000;
    SweepMode mode = SweepMode::gauss_seidel;
    bool check_monotone = true; // assert the energy never increases (GS only)
};

struct SolveStats {
    std::uint32_t sweeps = 0;
    double final_residual = 0.0;
    double action_drop = 0.0; // total energy decrease over the run
};

// Energy minimization with frozen Dirichlet data by cyclic coordinate
// descent. Every free site must have all its neighbors inside the ball.
inline SolveStats solve_dirichlet(ScalarField& f, const Potential& pot,
                                  const SolveOptions& opt = {}) {
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    std::vector<std::uint32_t> free;
    for (std::uint32_t g = 0; g < f.size(); ++g)
        if (!f.frozen.test(g)) free.push_back(g);
    for (std::uint32_t g : free)
        for (std::uint32_t s = 0; s < ns; ++s)
            if (ball.neighbor(g, s) == kExternal)
                throw std::invalid_argument("solve_dirichlet: free site " + std::to_string(g) +
                                            " touches the rim");

    auto site_energy = [&](std::uint32_t g, double t) {
        double acc = pot.V(t);
        for (std::uint32_t s = 0; s < ns; ++s) {
            double d = t - f.values[ball.neighbor(g, s)];
            acc += 0.5 * f.rho * d * d;
        }
        return acc;
    };

    SolveStats stats;
    std::vector<double> trace;
    const double mono_slack = 1e-11 * std::max<double>(1.0, free.size());
    for (std::uint32_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
        double sweep_drop = 0.0;
        if (opt.mode == SweepMode::gauss_seidel) {
            auto relax = [&](std::uint32_t g) {
                double sum = 0.0;
                for (std::uint32_t s = 0; s < ns; ++s) sum += f.values[ball.neighbor(g, s)];
                double before = site_energy(g, f.values[g]);
                double t = detail::site_minimum(pot, f.rho, ns, sum);
                double after = site_energy(g, t);
                // the true sitewise gain can sit below float resolution of
                // the energies; vetoing those moves stalls above tolerance
                if (after <= before + 1e-14 * std::max(1.0, std::abs(before))) {
                    f.values[g] = t;
                    sweep_drop += before - after;
                }
            };
            if (sweep % 2 == 0)
                for (auto it = free.begin(); it != free.end(); ++it) relax(*it);
            else
                for (auto it = free.rbegin(); it != free.rend(); ++it) relax(*it);
            if (opt.check_monotone && sweep_drop < -mono_slack)
                throw SolveError("energy increased during a descent sweep", trace);
        } else {
            std::vector<double> next(free.size());
            for (std::size_t i = 0; i < free.size(); ++i) {
                std::uint32_t g = free[i];
                double sum = 0.0;
                for (std::uint32_t s = 0; s < ns; ++s) sum += f.values[ball.neighbor(g, s)];
                next[i] = detail::site_minimum(pot, f.rho, ns, sum);
            }
            for (std::size_t i = 0; i < free.size(); ++i) f.values[free[i]] = next[i];
        }
        stats.action_drop += sweep_drop;
        double res = 0.0;
        for (std::uint32_t g : free) res = std::max(res, std::abs(residual_at(f, pot, g)));
        trace.push_back(res);
        stats.sweeps = sweep + 1;
        stats.final_residual = res;
        if (res <= opt.tol) return stats;
    }
    throw SolveError("coordinate descent did not reach tolerance " + std::to_string(opt.tol) +
                         " in " + std::to_string(opt.max_sweeps) + " sweeps",
                     trace);
}

// Certify a solved field is a coordinate-wise local minimum: nudging any
// single free site raises the energy. Also probes random directions.
struct LocalMinProbe {
    double worst_coordinate_gain = 0.0; // min over sites of energy increase
    double worst_random_gain = 0.0;
    bool passed = false;
};

inline LocalMinProbe probe_local_min(const ScalarField& f, const Potential& pot,
                                     double eta = 1e-6, std::uint32_t random_trials = 32,
                                     std::uint64_t seed = 11) {
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    std::vector<std::uint32_t> free;
    for (std::uint32_t g = 0; g < f.size(); ++g)
        if (!f.frozen.test(g)) free.push_back(g);

    auto site_energy = [&](std::uint32_t g, double t) {
        double acc = pot.V(t);
        for (std::uint32_t s = 0; s < ns; ++s) {
            double d = t - f.values[ball.neighbor(g, s)];
            acc += 0.5 * f.rho * d * d;
        }
        return acc;
    };

    LocalMinProbe out;
    out.worst_coordinate_gain = std::numeric_limits<double>::infinity();
    for (std::uint32_t g : free) {
        double base = site_energy(g, f.values[g]);
        double up = site_energy(g, f.values[g] + eta) - base;
        double dn = site_energy(g, f.values[g] - eta) - base;
        out.worst_coordinate_gain = std::min({out.worst_coordinate_gain, up, dn});
    }

    // multi-site probes: random +-eta pattern, energy recomputed exactly
    ScalarField probe = f;
    Rng rng(seed);
    out.worst_random_gain = std::numeric_limits<double>::infinity();
    Bitset all(f.size());
    all.fill();
    for (std::uint32_t trial = 0; trial < random_trials; ++trial) {
        probe.values = f.values;
        for (std::uint32_t g : free)
            probe.values[g] += rng.coin() ? eta : -eta;
        double gain = action(probe, pot, all, RimPolicy::clip).value -
                      action(f, pot, all, RimPolicy::clip).value;
        out.worst_random_gain = std::min(out.worst_random_gain, gain);
    }
    if (free.empty()) { out.worst_coordinate_gain = 0.0; out.worst_random_gain = 0.0; }
    out.passed = out.worst_coordinate_gain > 0.0 && out.worst_random_gain > 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Continuation from the decoupled limit.

struct ContinuationStats {
    std::uint32_t iterations = 0;
    double final_residual = 0.0;
    double max_displacement = 0.0;       // sup |x - seed| over updated sites
    double observed_rate = 0.0;          // max ratio of successive step norms
    double rate_bound = 0.0;             // k/2 + rho * c_tilde / hat_c
    std::vector<double> step_norms;
};

// Curvature divisors V''(seed) for the damped-Newton map; validates the
// seed is critical-valued and Morse above the configured floor.
inline std::vector<double> seed_curvature(const Potential& pot, const std::vector<double>& seed,
                                          double hat_c) {
    std::vector<double> curvature(seed.size(), 1.0);
    for (std::size_t g = 0; g < seed.size(); ++g) {
        if (!pot.is_critical_value(seed[g]))
            throw std::invalid_argument("seed value at site " + std::to_string(g) +
                                        " is not a critical point");
        curvature[g] = pot.d2V(seed[g]);
        if (std::abs(curvature[g]) < hat_c * (1.0 - 1e-9))
            throw std::invalid_argument("curvature floor violated by seed at site " +
                                        std::to_string(g));
    }
    return curvature;
}

// One application of the damped-Newton map: at interior non-frozen sites
// the full equation is used; at rim non-frozen sites the coupling term is
// dropped, so critical seed values there are exact fixed points. Returns
// the sup step size.
inline double quasi_newton_step(ScalarField& f, const Potential& pot,
                                const std::vector<double>& curvature) {
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    std::vector<double> next = f.values;
    double step = 0.0;
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        if (f.frozen.test(g)) continue;
        double coupled = 0.0;
        bool interior = true;
        for (std::uint32_t s = 0; s < ns; ++s) {
            std::uint32_t n = ball.neighbor(g, s);
            if (n == kExternal) { interior = false; break; }
            coupled += f.values[n] - f.values[g];
        }
        double numer = pot.dV(f.values[g]) - (interior ? f.rho * coupled : 0.0);
        double t = f.values[g] - numer / curvature[g];
        step = std::max(step, std::abs(t - f.values[g]));
        next[g] = t;
    }
    f.values = std::move(next);
    return step;
}

// Damped-Newton fixed point from a seed taking critical values at every
// site. Frozen sites keep their seed values exactly. Refuses couplings
// beyond the certified contraction range.
inline ContinuationStats continue_from_seed(ScalarField& f, const Potential& pot,
                                            const ContinuationConfig& cfg,
                                            const std::vector<double>& seed) {
    if (f.rho > cfg.rho0 * (1.0 + 1e-12))
        throw std::invalid_argument("continue_from_seed: coupling exceeds the certified range");
    if (seed.size() != f.values.size())
        throw std::invalid_argument("continue_from_seed: seed size mismatch");
    std::vector<double> curvature = seed_curvature(pot, seed, cfg.hat_c);

    f.values = seed;
    ContinuationStats stats;
    stats.rate_bound = cfg.k / 2.0 + f.rho * cfg.c_tilde / cfg.hat_c;
    double prev_step = 0.0;
    for (std::uint32_t iter = 0; iter < cfg.max_iter; ++iter) {
        double step = quasi_newton_step(f, pot, curvature);
        stats.step_norms.push_back(step);
        if (prev_step > 0.0 && step > 0.0)
            stats.observed_rate = std::max(stats.observed_rate, step / prev_step);
        prev_step = step;
        stats.iterations = iter + 1;
        if (step <= cfg.tol) break;
    }
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    double res = 0.0;
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        if (f.frozen.test(g)) continue;
        stats.max_displacement = std::max(stats.max_displacement, std::abs(f.values[g] - seed[g]));
        bool interior = true;
        for (std::uint32_t s = 0; s < ns; ++s)
            if (ball.neighbor(g, s) == kExternal) { interior = false; break; }
        if (interior) res = std::max(res, std::abs(residual_at(f, pot, g)));
    }
    stats.final_residual = res;
    return stats;
}

// ---------------------------------------------------------------------------
// Phase classification.

// Band assignment per site: phase0 near the lower well, phase1 near the
// upper. Sites outside both sigma0-bands are reported as violations, not
// errors — they falsify either minimality or the coupling regime.
struct PhasePartition {
    Bitset phase0;
    Bitset phase1;
    std::vector<std::uint32_t> violations; // middle-band sites
    double max_band_deviation = 0.0;       // worst distance to the nearest well
};

inline PhasePartition classify_phases(const ScalarField& f, const Potential& pot,
                                      double sigma0) {
    PhasePartition p;
    p.phase0 = Bitset(f.size());
    p.phase1 = Bitset(f.size());
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        double v = f.values[g];
        double d0 = std::abs(v - pot.c0);
        double d1 = std::abs(v - pot.c1);
        if (d0 <= d1) p.phase0.set(g); else p.phase1.set(g);
        double band = std::min(d0, d1);
        p.max_band_deviation = std::max(p.max_band_deviation, band);
        if (band >= sigma0) p.violations.push_back(g);
    }
    return p;
}

} // namespace hypac
