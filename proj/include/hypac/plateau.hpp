#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hypac/allen_cahn.hpp"
#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/boundary.hpp"
#include "hypac/dirichlet.hpp"
#include "hypac/field.hpp"
#include "hypac/maxflow.hpp"
#include "hypac/potential.hpp"
#include "hypac/sets.hpp"
#include "hypac/solve.hpp"

namespace hypac {

// A finite certification window. Free sites are those whose entire
// neighborhood stays inside the window; everything else is fixed context.
struct CutWindow {
    Bitset omega;
    Bitset omega_in;
};

inline CutWindow make_window(const CayleyBall& ball, Bitset omega) {
    CutWindow w;
    w.omega_in = inner_set(ball, omega);
    w.omega = std::move(omega);
    return w;
}

// Ordered pairs (g, gs) within the window with g in B and gs outside B.
// Each unordered crossing edge is counted exactly once (via its B-side
// endpoint), so the count is symmetric under complementing B.
inline std::uint64_t edge_cut(const CayleyBall& ball, const Bitset& b, const CutWindow& window) {
    std::uint64_t cut = 0;
    const int ns = ball.num_generators();
    window.omega.for_each([&](std::uint32_t g) {
        if (!b.test(g)) return;
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(g, static_cast<std::uint32_t>(s));
            if (h == kExternal || !window.omega.test(h)) continue;
            if (!b.test(h)) ++cut;
        }
    });
    return cut;
}

// ---------------------------------------------------------------------------
// Coupling ladder.

struct RungReport {
    double rho = 0.0;
    double sigma = 0.0;          // distance of the minimizer to its own two-level labeling
    double condition_lhs = 0.0;  // Ce^{hn} / (Ce^{hn} + 1)
    double condition_rhs = 0.0;  // (1 - 2 sigma)^2
    bool condition_ok = false;
    std::uint32_t sweeps = 0;
    double final_residual = 0.0;
};

struct PlateauPartition {
    const CayleyBall* ball = nullptr;
    Bitset D0_sites;
    Bitset D1_sites;
    Bitset T_sites;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> T_edges;
    std::vector<RungReport> ladder;
    int region_radius = 0;
    int stabilization_radius = 0;
};

struct RhoSweepResult {
    PlateauPartition partition;
    ScalarField final_field;
    std::vector<Bitset> rung_labels;        // phase-0 sites per ladder step
    std::vector<std::uint32_t> middle_band; // band violations at the last step
    bool conditions_ok = true;
    bool stabilized = false;
    std::vector<std::uint32_t> disagreement; // sites breaking stabilization
};

inline std::vector<double> default_ladder(double rho1, int depth) {
    if (depth < 2) throw std::invalid_argument("ladder depth must be at least 2");
    std::vector<double> out;
    double rho = rho1;
    for (int n = 1; n <= depth; ++n) {
        rho *= 0.25;
        out.push_back(rho);
    }
    return out;
}

// Two-sided constant comparing ball counts with e^{hn}; any window inside
// B_n then satisfies #W <= C e^{hn}. Free rank-k groups reach their
// supremum k/(k-1) in the limit; free products are scanned over exact
// sphere counts, deep enough to capture the even/odd oscillation.
inline double ball_comparison_constant(const GroupSpec& spec) {
    if (spec.backend() == GroupBackend::free_group) {
        const double k = static_cast<double>(spec.rank());
        return k / (k - 1.0);
    }
    const double h = spec.entropy_exact();
    auto spheres = spec.sphere_counts(48);
    double c = 1.0, cum = 0.0;
    for (std::size_t n = 0; n < spheres.size(); ++n) {
        cum += static_cast<double>(spheres[n]);
        const double ratio = cum / std::exp(h * static_cast<double>(n));
        c = std::max({c, ratio, 1.0 / ratio});
    }
    return c;
}

// Decreasing coupling ladder. Each step minimizes the action on the deepest
// requested region from the two-level seed via coordinate descent, whose
// sitewise-global updates may relabel boundary-layer sites the seed got
// wrong — the labels come from the minimizer, not the seed. The separation
// inequality Ce^{hn}/(Ce^{hn}+1) < (1-2s)^2 is re-verified per step against
// the measured band radius s rather than assumed, and the labeling must
// agree bit-exactly on the stabilization sub-ball across the final two
// steps.
inline RhoSweepResult rho_sweep_report(const DirichletProblem& prob, const CayleyBall& ball,
                                       const Potential& pot, const std::vector<double>& ladder,
                                       int stabilization_radius, double entropy,
                                       double c_tilde_metric) {
    if (ladder.size() < 2) throw std::invalid_argument("ladder needs at least two steps");
    if (ladder.front() > prob.config.rho1 * (1.0 + 1e-12))
        throw std::invalid_argument("ladder starts above the classification threshold");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] <= 0.0) throw std::invalid_argument("ladder couplings must be positive");
        if (i > 0 && ladder[i] >= ladder[i - 1])
            throw std::invalid_argument("ladder must be strictly decreasing");
    }
    const int region = prob.radii.back();
    if (region + 1 > ball.radius())
        throw std::invalid_argument("sweep needs one frozen sphere beyond the solve region");
    if (stabilization_radius > region)
        throw std::invalid_argument("stabilization radius exceeds the solve region");

    const ContinuationConfig& cfg = prob.config;
    ScalarField seed = anti_continuum_seed(ball, prob.boundary0, pot);
    Bitset free = inner_set(ball, ball_subset(ball, region));
    Bitset frozen = free.complement();
    const double growth_c = ball.num_generators() * c_tilde_metric;

    RhoSweepResult out;
    out.partition.ball = &ball;
    out.partition.region_radius = region;
    out.partition.stabilization_radius = stabilization_radius;

    ScalarField last = seed;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        ScalarField f = seed;
        f.rho = ladder[i];
        f.frozen = frozen;
        RungReport rung;
        rung.rho = f.rho;
        auto st = solve_dirichlet(f, pot);
        rung.sweeps = st.sweeps;
        rung.final_residual = st.final_residual;

        PhasePartition phases = classify_phases(f, pot, cfg.sigma0);
        rung.sigma = phases.max_band_deviation;
        const double e_hn = growth_c * std::exp(entropy * static_cast<double>(i + 1));
        rung.condition_lhs = e_hn / (e_hn + 1.0);
        rung.condition_rhs = (1.0 - 2.0 * rung.sigma) * (1.0 - 2.0 * rung.sigma);
        rung.condition_ok = rung.condition_lhs < rung.condition_rhs;
        out.conditions_ok = out.conditions_ok && rung.condition_ok;
        out.partition.ladder.push_back(rung);
        out.rung_labels.push_back(phases.phase0);
        if (i + 1 == ladder.size()) {
            out.middle_band = phases.violations;
            out.partition.D0_sites = std::move(phases.phase0);
            out.partition.D1_sites = std::move(phases.phase1);
        }
        last = std::move(f);
    }

    const auto& a = out.rung_labels[out.rung_labels.size() - 2];
    const auto& b = out.rung_labels.back();
    const std::uint32_t end = ball.sphere_end(stabilization_radius);
    out.stabilized = true;
    for (std::uint32_t g = 0; g < end; ++g)
        if (a.test(g) != b.test(g)) {
            out.stabilized = false;
            out.disagreement.push_back(g);
        }

    TransitionSet t = extract_transition_set(last, pot, cfg.sigma0, region);
    out.partition.T_sites = std::move(t.sites);
    out.partition.T_edges = std::move(t.edges);
    out.final_field = std::move(last);
    return out;
}

inline PlateauPartition rho_sweep(const DirichletProblem& prob, const CayleyBall& ball,
                                  const Potential& pot, const std::vector<double>& ladder,
                                  int stabilization_radius, double entropy,
                                  double c_tilde_metric) {
    RhoSweepResult r = rho_sweep_report(prob, ball, pot, ladder, stabilization_radius, entropy,
                                        c_tilde_metric);
    if (!r.conditions_ok) {
        std::string msg = "ladder separation inequality failed at step";
        for (std::size_t i = 0; i < r.partition.ladder.size(); ++i)
            if (!r.partition.ladder[i].condition_ok) msg += " " + std::to_string(i + 1);
        throw std::runtime_error(msg);
    }
    if (!r.middle_band.empty())
        throw std::runtime_error("final ladder step left " + std::to_string(r.middle_band.size()) +
                                 " sites outside both phase bands");
    if (!r.stabilized) {
        std::string msg = "labels did not stabilize; disagreeing sites:";
        for (std::size_t i = 0; i < r.disagreement.size() && i < 8; ++i)
            msg += " " + std::to_string(r.disagreement[i]);
        throw std::runtime_error(msg);
    }
    return std::move(r.partition);
}

// ---------------------------------------------------------------------------
// Certification.

enum class CertifyMode { exhaustive, oracle, both };

struct CertifyResult {
    std::uint64_t b_value = 0;   // cut of the partition itself
    std::uint64_t min_value = 0; // best achievable within the window
    bool minimal = false;
    bool ran_exhaustive = false;
    bool ran_oracle = false;
    bool modes_agree = true;                  // meaningful when both ran
    std::vector<std::uint32_t> witness_flips; // sites to flip for a smaller cut
};

namespace detail {

inline std::uint64_t min_cut_oracle(const CayleyBall& ball, const Bitset& d0,
                                    const CutWindow& window) {
    // compact ids for free sites; two contracted terminals at the end
    std::vector<std::uint32_t> ids(ball.size(), kExternal);
    std::uint32_t next = 0;
    window.omega_in.for_each([&](std::uint32_t g) { ids[g] = next++; });
    const std::uint32_t source = next, sink = next + 1;
    FlowNetwork net(next + 2);
    std::uint64_t fixed = 0;
    const int ns = ball.num_generators();
    window.omega.for_each([&](std::uint32_t g) {
        bool g_free = window.omega_in.test(g);
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(g, static_cast<std::uint32_t>(s));
            if (h == kExternal || !window.omega.test(h) || h <= g) continue;
            bool h_free = window.omega_in.test(h);
            if (g_free && h_free) {
                net.add_undirected_edge(ids[g], ids[h]);
            } else if (g_free) {
                net.add_undirected_edge(ids[g], d0.test(h) ? source : sink);
            } else if (h_free) {
                net.add_undirected_edge(ids[h], d0.test(g) ? source : sink);
            } else if (d0.test(g) != d0.test(h)) {
                ++fixed; // crossing between fixed sites: cut in every candidate
            }
        }
    });
    return net.max_flow(source, sink) + fixed;
}

} // namespace detail

// Minimality of the partition's cut within a window: every relabeling of
// the free sites must cost at least as much. Exhaustive mode enumerates
// all 2^{#free} candidates; oracle mode reduces to a minimum terminal cut.
// In `both` mode a window too large for enumeration falls back to the
// oracle alone; exhaustive-only mode refuses it.
inline CertifyResult plateau_certify(const CayleyBall& ball, const Bitset& d0,
                                     const CutWindow& window,
                                     CertifyMode mode = CertifyMode::both,
                                     std::uint32_t exhaustive_cap = 20) {
    CertifyResult res;
    res.b_value = edge_cut(ball, d0, window);

    std::vector<std::uint32_t> free;
    window.omega_in.for_each([&](std::uint32_t g) { free.push_back(g); });
    bool want_exhaustive = mode != CertifyMode::oracle;
    if (want_exhaustive && free.size() > exhaustive_cap) {
        if (mode == CertifyMode::exhaustive)
            throw std::invalid_argument("window free-site count " + std::to_string(free.size()) +
                                        " exceeds the exhaustive cap " +
                                        std::to_string(exhaustive_cap));
        want_exhaustive = false;
    }

    std::uint64_t min_ex = 0;
    std::vector<std::uint32_t> best_flips;
    if (want_exhaustive) {
        min_ex = std::numeric_limits<std::uint64_t>::max();
        Bitset candidate = d0;
        const std::uint64_t total = std::uint64_t{1} << free.size();
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            for (std::size_t i = 0; i < free.size(); ++i)
                candidate.assign(free[i], (mask >> i) & 1ULL);
            std::uint64_t cut = edge_cut(ball, candidate, window);
            if (cut < min_ex) {
                min_ex = cut;
                best_flips.clear();
                for (std::size_t i = 0; i < free.size(); ++i)
                    if ((((mask >> i) & 1ULL) != 0) != d0.test(free[i]))
                        best_flips.push_back(free[i]);
            }
        }
        res.ran_exhaustive = true;
    }
    std::uint64_t min_oracle = 0;
    if (mode != CertifyMode::exhaustive) {
        min_oracle = detail::min_cut_oracle(ball, d0, window);
        res.ran_oracle = true;
    }
    if (res.ran_exhaustive && res.ran_oracle) res.modes_agree = min_ex == min_oracle;
    res.min_value = res.ran_exhaustive ? min_ex : min_oracle;
    res.minimal = res.b_value <= res.min_value;
    if (!res.minimal && res.ran_exhaustive) res.witness_flips = std::move(best_flips);
    return res;
}

// ---------------------------------------------------------------------------
// Path and component audits.

struct SeparationAudit {
    bool passed = true;
    std::size_t pairs_checked = 0;
    std::size_t geodesics_checked = 0;
    std::uint64_t max_crossings = 0; // finite at every sampled pair; recorded
    std::vector<std::pair<std::uint32_t, std::uint32_t>> failures;
};

// Deep sites whose cones lie inside the boundary set, against deep sites
// whose cones avoid it entirely: every geodesic between such a pair must
// meet the transition set.
template <class Rng>
SeparationAudit separation_audit(const CayleyBall& ball, const PlateauPartition& part,
                                 const BoundarySpecSet& u, Rng& rng, std::size_t pairs,
                                 int min_depth) {
    SeparationAudit audit;
    const int region = part.region_radius;
    if (min_depth >= region) min_depth = region - 1;
    if (min_depth < 1) min_depth = 1;

    std::vector<std::uint32_t> side0, side1;
    for (std::uint32_t g = 0; g < ball.sphere_end(region); ++g) {
        if (ball.length(g) < min_depth) continue;
        Word w = ball.word_of(g);
        bool inside = false, touches = false;
        for (const auto& c : u.cylinders()) {
            if (BoundarySpecSet::is_prefix(c.prefix, w)) inside = touches = true;
            else if (BoundarySpecSet::is_prefix(w, c.prefix)) touches = true;
        }
        if (inside) side0.push_back(g);
        else if (!touches) side1.push_back(g);
    }
    if (side0.empty() || side1.empty()) return audit; // vacuous

    for (std::size_t p = 0; p < pairs; ++p) {
        std::uint32_t g = side0[rng.uniform_index(side0.size())];
        std::uint32_t h = side1[rng.uniform_index(side1.size())];
        ++audit.pairs_checked;
        for (const auto& path : ball.spec().all_geodesics(ball.word_of(g), ball.word_of(h))) {
            ++audit.geodesics_checked;
            std::uint64_t crossings = 0;
            for (const auto& w : path) {
                std::uint32_t idx = ball.find(w);
                if (idx != kExternal && part.T_sites.test(idx)) ++crossings;
            }
            audit.max_crossings = std::max(audit.max_crossings, crossings);
            if (crossings == 0) {
                audit.passed = false;
                audit.failures.emplace_back(g, h);
                break;
            }
        }
    }
    return audit;
}

// Finite-scale stand-in for both phases having only unbounded components:
// every component of either label set must reach the outermost sphere.
inline ComponentsAudit infinite_components_audit(const PlateauPartition& part) {
    const CayleyBall& ball = *part.ball;
    ComponentsAudit audit;
    for (const Bitset* phase : {&part.D0_sites, &part.D1_sites}) {
        for (auto& comp : detail::components_of(ball, *phase)) {
            ++audit.components;
            bool touches = false;
            for (std::uint32_t g : comp)
                if (ball.length(g) == ball.radius()) { touches = true; break; }
            if (!touches && audit.passed) {
                audit.passed = false;
                audit.island = comp;
            }
        }
    }
    return audit;
}

// ---------------------------------------------------------------------------
// Action bridge.

struct BridgeCheck {
    bool applicable = false; // no crossing edge may leave the window
    double action_value = 0.0;
    double predicted = 0.0;
    double relative_error = 0.0;
    std::uint64_t cut = 0;
};

// On the two-valued limit field, the window action collapses to the cut
// functional: (rho/2)(c1-c0)^2 per crossing edge plus the well values.
// Only windows containing all their crossing edges qualify; a crossing
// half-edge out of the window would contribute a stray quarter term.
inline BridgeCheck bridge_check(const CayleyBall& ball, const Bitset& d0, const CutWindow& window,
                                const Potential& pot, double rho) {
    BridgeCheck bc;
    const int ns = ball.num_generators();
    bool exits = false;
    window.omega.for_each([&](std::uint32_t g) {
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(g, static_cast<std::uint32_t>(s));
            if (h == kExternal || window.omega.test(h)) continue;
            if (d0.test(g) != d0.test(h)) exits = true;
        }
    });
    if (exits) return bc;
    bc.applicable = true;

    ScalarField y(ball, rho, pot.c1);
    d0.for_each([&](std::uint32_t g) { y.values[g] = pot.c0; });
    bc.action_value = action(y, pot, window.omega, RimPolicy::clip).value;
    bc.cut = edge_cut(ball, d0, window);
    const std::size_t in0 = (d0 & window.omega).count();
    const std::size_t in1 = window.omega.count() - in0;
    double span = pot.c1 - pot.c0;
    bc.predicted = 0.5 * rho * span * span * static_cast<double>(bc.cut) +
                   static_cast<double>(in0) * pot.V(pot.c0) +
                   static_cast<double>(in1) * pot.V(pot.c1);
    double scale = std::max({std::abs(bc.action_value), std::abs(bc.predicted), 1.0});
    bc.relative_error = std::abs(bc.action_value - bc.predicted) / scale;
    return bc;
}

} // namespace hypac
