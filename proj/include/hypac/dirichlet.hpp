#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypac/allen_cahn.hpp"
#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/boundary.hpp"
#include "hypac/field.hpp"
#include "hypac/potential.hpp"
#include "hypac/sets.hpp"
#include "hypac/solve.hpp"

namespace hypac {

// Dirichlet problem at infinity: boundary0 is the region at infinity where
// the solution approaches the lower well; its complement takes the upper.
struct DirichletProblem {
    GroupSpec spec;
    BoundarySpecSet boundary0;
    double rho = 0.0;
    std::vector<int> radii;
    ContinuationConfig config;

    DirichletProblem(GroupSpec spec_, BoundarySpecSet b0, double rho_, std::vector<int> radii_,
                     ContinuationConfig cfg)
        : spec(std::move(spec_)), boundary0(std::move(b0)), rho(rho_), radii(std::move(radii_)),
          config(cfg) {
        if (boundary0.empty() || boundary0.full())
            throw std::invalid_argument("both phase regions at infinity need nonempty interior");
        if (radii.empty()) throw std::invalid_argument("at least one solve radius required");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (radii[i] < 2) throw std::invalid_argument("solve radii must be >= 2");
            if (i && radii[i] <= radii[i - 1])
                throw std::invalid_argument("solve radii must be strictly increasing");
        }
        if (!(rho > 0.0)) throw std::invalid_argument("coupling must be positive");
    }
};

// Decoupled-limit configuration: c0 exactly on the inner set of the cone
// over U, c1 everywhere else. Inner membership is decided at the word
// level, so sites on the enumeration rim are handled exactly.
inline ScalarField anti_continuum_seed(const CayleyBall& ball, const BoundarySpecSet& u,
                                       const Potential& pot) {
    ScalarField f(ball, 0.0, pot.c1);
    Bitset in_cone = cone(ball, u);
    const int ns = ball.num_generators();
    in_cone.for_each([&](std::uint32_t g) {
        Word w = ball.word_of(g);
        for (int s = 0; s < ns; ++s) {
            std::uint32_t n = ball.neighbor(g, static_cast<std::uint32_t>(s));
            if (n != kExternal) {
                if (!in_cone.test(n)) return;
            } else if (!u.contains_word(ball.spec().mul(w, static_cast<std::uint8_t>(s)))) {
                return;
            }
        }
        f.values[g] = pot.c0;
    });
    return f;
}

struct SequenceEntry {
    int N = 0;
    ScalarField field;
    double final_residual = 0.0;
    std::uint32_t iterations = 0;
    bool via_continuation = false;
};

struct SolveMonitor {
    std::vector<int> radii;
    // sup_diff[p][m] = sup over the ball of radius m of |x^{N_{p+1}} - x^{N_p}|
    std::vector<std::vector<double>> sup_diff;

    // sup-change between the final two scales on the ball of radius m
    double last_pair(int m) const {
        if (sup_diff.empty()) return 0.0;
        const auto& row = sup_diff.back();
        return row[std::min<std::size_t>(m, row.size() - 1)];
    }
};

struct SolveSequenceResult {
    ScalarField seed;
    std::vector<SequenceEntry> entries;
    SolveMonitor monitor;
};

// Solve the problem on each listed radius, freezing everything outside the
// inner sub-ball to the seed. Small couplings go through the certified
// continuation; larger ones through coordinate descent started at the seed.
inline SolveSequenceResult solve_sequence(const DirichletProblem& prob, const CayleyBall& ball,
                                          const Potential& pot) {
    const int max_n = prob.radii.back();
    if (ball.radius() < max_n + 1)
        throw std::invalid_argument("ball radius must exceed the largest solve radius");
    SolveSequenceResult out;
    out.seed = anti_continuum_seed(ball, prob.boundary0, pot);
    out.monitor.radii = prob.radii;

    for (int n : prob.radii) {
        SequenceEntry e;
        e.N = n;
        e.field = out.seed;
        e.field.rho = prob.rho;
        Bitset free = inner_set(ball, ball_subset(ball, n));
        e.field.frozen = free.complement();
        if (prob.rho <= prob.config.rho0 * (1.0 + 1e-12)) {
            auto st = continue_from_seed(e.field, pot, prob.config, out.seed.values);
            e.final_residual = st.final_residual;
            e.iterations = st.iterations;
            e.via_continuation = true;
        } else {
            SolveOptions opt;
            auto st = solve_dirichlet(e.field, pot, opt);
            e.final_residual = st.final_residual;
            e.iterations = st.sweeps;
        }
        e.field.frozen.for_each([&](std::uint32_t g) {
            if (e.field.values[g] != out.seed.values[g])
                throw std::logic_error("solver touched a frozen site");
        });
        out.entries.push_back(std::move(e));
    }

    for (std::size_t p = 0; p + 1 < out.entries.size(); ++p) {
        const auto& a = out.entries[p].field;
        const auto& b = out.entries[p + 1].field;
        int m_max = out.entries[p].N;
        std::vector<double> row(m_max + 1, 0.0);
        for (std::uint32_t g = 0; g < ball.size(); ++g) {
            int len = ball.length(g);
            if (len > m_max) break;
            double d = std::abs(a.values[g] - b.values[g]);
            for (int m = len; m <= m_max; ++m) row[m] = std::max(row[m], d);
        }
        out.monitor.sup_diff.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transition sets.

struct TransitionSet {
    Bitset sites;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges; // crossing edges, min index first
    int N = 0;
    long distance_to_id = -1;
};

// Sites in the region with a neighbor across the phase gap. Computed twice
// (value jump >= 2*sigma0, and full boundary of the phase regions) and the
// two must agree, which Cor. of the band classification guarantees for
// middle-band-free fields.
inline TransitionSet extract_transition_set(const ScalarField& f, const Potential& pot,
                                            double sigma0, int region_radius) {
    const CayleyBall& ball = *f.ball;
    if (region_radius + 1 > ball.radius())
        throw std::invalid_argument("transition set needs neighbors one sphere beyond the region");
    TransitionSet t;
    t.N = region_radius;
    t.sites = Bitset(ball.size());
    const int ns = ball.num_generators();
    const std::uint32_t region_end = ball.sphere_end(region_radius);

    PhasePartition phases = classify_phases(f, pot, sigma0);
    for (std::uint32_t g = 0; g < region_end; ++g) {
        bool jump = false, cross = false;
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(g, static_cast<std::uint32_t>(s));
            if (h == kExternal) continue;
            if (std::abs(f.values[g] - f.values[h]) >= 2.0 * sigma0) jump = true;
            if (phases.phase0.test(g) != phases.phase0.test(h)) {
                cross = true;
                if (g < h) t.edges.emplace_back(g, h);
            }
        }
        if (jump != cross)
            throw std::runtime_error("transition-set definitions disagree at site " +
                                     std::to_string(g) + " (middle-band value present?)");
        if (jump) t.sites.set(g);
    }
    std::sort(t.edges.begin(), t.edges.end());
    t.edges.erase(std::unique(t.edges.begin(), t.edges.end()), t.edges.end());
    t.sites.for_each([&](std::uint32_t g) {
        long len = ball.length(g);
        if (t.distance_to_id < 0 || len < t.distance_to_id) t.distance_to_id = len;
    });
    return t;
}

// ---------------------------------------------------------------------------
// Phase-region audits.

namespace detail {

// connected components of `subject` under ball adjacency
inline std::vector<std::vector<std::uint32_t>> components_of(const CayleyBall& ball,
                                                             const Bitset& subject) {
    std::vector<std::vector<std::uint32_t>> comps;
    Bitset seen(subject.size());
    const int ns = ball.num_generators();
    subject.for_each([&](std::uint32_t start) {
        if (seen.test(start)) return;
        std::vector<std::uint32_t> comp;
        std::queue<std::uint32_t> q;
        q.push(start);
        seen.set(start);
        while (!q.empty()) {
            std::uint32_t g = q.front();
            q.pop();
            comp.push_back(g);
            for (int s = 0; s < ns; ++s) {
                std::uint32_t h = ball.neighbor(g, static_cast<std::uint32_t>(s));
                if (h == kExternal || seen.test(h) || !subject.test(h)) continue;
                seen.set(h);
                q.push(h);
            }
        }
        comps.push_back(std::move(comp));
    });
    return comps;
}

} // namespace detail

struct ComponentsAudit {
    bool passed = true;
    std::size_t components = 0;
    std::vector<std::uint32_t> island; // first component that avoids the rim
};

// Every connected component of each phase region must reach the rim of the
// solve region; an interior island would contradict minimality.
inline ComponentsAudit connected_components_audit(const ScalarField& f, const Potential& pot,
                                                  double sigma0, int region_radius) {
    const CayleyBall& ball = *f.ball;
    PhasePartition phases = classify_phases(f, pot, sigma0);
    Bitset region = ball_subset(ball, region_radius);
    ComponentsAudit audit;
    for (const Bitset* phase : {&phases.phase0, &phases.phase1}) {
        Bitset subject = *phase;
        subject &= region;
        for (auto& comp : detail::components_of(ball, subject)) {
            ++audit.components;
            bool touches = false;
            for (std::uint32_t g : comp)
                if (ball.length(g) == region_radius) { touches = true; break; }
            if (!touches && audit.passed) {
                audit.passed = false;
                audit.island = comp;
            }
        }
    }
    return audit;
}

struct QuasiMinimalityAudit {
    long long slack = 0;  // lhs - rhs, negative flags a violation
    std::uint64_t lhs = 0;
    std::uint64_t rhs = 0;
};

// For any finite window D: flipping the phase-1 mass of D's inner set down
// to the low well must not pay off for a minimizer. Charging the flip's
// action balance edge by edge bounds the phase-0 frontier of that mass by
// the phase-1 part of D's inner rim, up to the factor 6#S. Only the
// frontier witnessed through the inner set is controlled; a phase-0 site
// whose phase-1 neighbor merely grazes the window rim is not.
inline QuasiMinimalityAudit quasi_minimality_audit(const CayleyBall& ball, const Bitset& phase1,
                                                   const Bitset& window) {
    QuasiMinimalityAudit a;
    Bitset in_rim = boundary_in(ball, window);
    in_rim &= phase1;
    a.lhs = 6ULL * static_cast<std::uint64_t>(ball.num_generators()) * in_rim.count();
    Bitset flip = inner_set(ball, window);
    flip &= phase1;
    Bitset front = boundary_out(ball, flip, RimPolicy::clip).bits;
    front &= phase1.complement();
    a.rhs = front.count();
    a.slack = static_cast<long long>(a.lhs) - static_cast<long long>(a.rhs);
    return a;
}

struct QuasiMinimalitySweep {
    long long min_slack = 0;
    std::size_t samples = 0;
    std::size_t violations = 0;
};

template <class Rng>
QuasiMinimalitySweep quasi_minimality_sweep(const CayleyBall& ball, const Bitset& phase1,
                                            Rng& rng, std::size_t samples) {
    QuasiMinimalitySweep sweep;
    sweep.min_slack = std::numeric_limits<long long>::max();
    std::uint32_t limit = ball.size();
    for (std::size_t i = 0; i < samples; ++i) {
        Bitset window;
        if (i < static_cast<std::size_t>(ball.radius()) + 1) {
            window = ball_subset(ball, static_cast<int>(i));
        } else {
            std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(limit));
            std::size_t target = 1 + rng.uniform_index(std::max<std::uint32_t>(1, limit / 8));
            window = random_connected_subset(ball, rng, seed, target, limit);
        }
        auto a = quasi_minimality_audit(ball, phase1, window);
        sweep.min_slack = std::min(sweep.min_slack, a.slack);
        if (a.slack < 0) ++sweep.violations;
        ++sweep.samples;
    }
    return sweep;
}

// ---------------------------------------------------------------------------
// Cascade constants.

struct MainLemmaConstants {
    double r = 0.0;
    double k = 0.0;
    std::uint64_t L0 = 1;
    double n1_terms[3] = {0.0, 0.0, 0.0};
    double n1_lower = 0.0;
    double n1 = 0.0; // smallest natural >= n1_lower
    std::vector<double> r_seq; // r_1..r_levels
    std::vector<double> d_seq; // d_1..d_levels
    std::vector<double> n_seq; // n_1..n_levels
    std::vector<double> M_seq; // M_1..M_levels (may overflow to +inf)
    double D = 0.0, h = 0.0, epsilon = 0.0, k0 = 0.0, k1 = 0.0;
    double Ctilde = 0.0, C4 = 0.0, C5 = 0.0;
    double t_factor = 0.0; // t_n = t_factor * e^{-eps n}
    double ratio = 0.0;    // (D + 1/2) / (D + 1/4)
};

namespace detail {

// Least L such that (log n)^{4D} < n for every n >= L. Failures, when any
// exist, form one contiguous range whose top solves u = 4D log u.
inline std::uint64_t least_log_power_threshold(double four_d) {
    auto holds = [&](double n) { return std::pow(std::log(n), four_d) < n; };
    if (four_d * std::log(four_d) <= four_d) {
        // the curve u - 4D log u never dips below zero: no failures
        return 1;
    }
    double lo = four_d, hi = four_d;
    while (hi - four_d * std::log(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid - four_d * std::log(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    double u_top = hi;
    auto guess = static_cast<std::uint64_t>(std::floor(std::exp(u_top)));
    // walk down to the true last failure, then one past it
    std::uint64_t L = guess + 2;
    while (L > 2 && !holds(static_cast<double>(L - 1))) ++L; // defensive, no-op normally
    while (L > 2 && holds(static_cast<double>(L - 1))) --L;
    return L;
}

} // namespace detail

inline MainLemmaConstants compute_main_lemma_constants(const GroupSpec& spec,
                                                       const ConstantsReport& rep, double r,
                                                       std::size_t levels) {
    if (!(rep.D > 0.25))
        throw std::invalid_argument("cascade constants need visual dimension above 1/4");
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("cascade radius must lie in (0,1]");
    MainLemmaConstants c;
    c.r = r;
    c.D = rep.D;
    c.h = rep.h;
    c.epsilon = rep.epsilon;
    c.k0 = rep.k0.value;
    c.k1 = rep.k1.value;
    c.Ctilde = rep.Ctilde.value;
    c.C4 = rep.C4.value;
    c.C5 = rep.C5.value;
    c.t_factor = rep.separation().t_factor;
    c.ratio = (c.D + 0.5) / (c.D + 0.25);

    const double ns = spec.num_generators();
    const double four_d = 4.0 * c.D;
    c.k = std::pow(48.0 * ns * c.k0 * c.Ctilde, four_d / (four_d - 1.0));
    c.L0 = detail::least_log_power_threshold(four_d);

    c.n1_terms[0] = 4.0 / (c.epsilon * (four_d + 1.0)) *
                    std::log(static_cast<double>(c.L0) / c.k);
    c.n1_terms[1] = 32.0 * c.h;
    c.n1_terms[2] = 2.0 / c.epsilon *
                    std::log((c.k + 2.0 * c.Ctilde) * 4.0 * M_PI * M_PI /
                             (3.0 * r * c.Ctilde * c.k1 * std::exp(-c.epsilon)));
    c.n1_lower = std::max({c.n1_terms[0], c.n1_terms[1], c.n1_terms[2]});
    c.n1 = std::ceil(c.n1_lower);
    if (c.n1 < 1.0) c.n1 = 1.0;

    double partial = 0.0;
    for (std::size_t i = 1; i <= levels; ++i) {
        partial += 1.0 / (static_cast<double>(i) * static_cast<double>(i));
        c.r_seq.push_back(6.0 * r / (M_PI * M_PI) * partial);
        double di = 6.0 * r / (M_PI * M_PI * static_cast<double>(i + 1) * static_cast<double>(i + 1));
        c.d_seq.push_back(di);
        double ni = c.n1 * std::pow(c.ratio, static_cast<double>(i - 1));
        c.n_seq.push_back(ni);
        double ni1 = c.n1 * std::pow(c.ratio, static_cast<double>(i));
        double mi = std::ceil(ni1 + c.k * c.ratio * std::exp(c.epsilon * (c.D + 0.25) * ni1) + 1.0);
        c.M_seq.push_back(mi);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Cascade audit.

struct CascadeLevel {
    std::size_t i = 0;
    double n_i = 0.0;
    double threshold = 0.0;       // k e^{eps (D+1/4) n_i}
    std::uint64_t cone_count = 0; // phase-1 sites in the level's cone
    bool triggered = false;
    bool conclusion_checked = false;
    bool conclusion_holds = true; // V_j counts for j >= i, when triggered
};

struct CascadeAudit {
    std::vector<CascadeLevel> levels;
    bool any_triggered = false;
    bool all_conclusions_hold = true;
};

// Cylinder depth realizing the visual ball of radius r: least m with
// e^{-eps m} <= r.
inline int visual_ball_depth(double r, double epsilon) {
    if (r >= 1.0) return 0;
    return static_cast<int>(std::ceil(-std::log(r) / epsilon));
}

// Evaluates the growth-hypothesis threshold per cascade level against the
// actual phase-1 census around a boundary point, and — when the hypothesis
// triggers — counts the annular conclusion sets. At desk scale the
// thresholds typically dwarf any ball, so "not triggered" is the expected,
// honest outcome.
inline CascadeAudit cascade_audit(const CayleyBall& ball, const Bitset& phase1, int region_radius,
                                  const BoundaryPoint& xi0, const MainLemmaConstants& mlc) {
    CascadeAudit audit;
    RayStream ray(xi0);
    const std::uint32_t region_end = ball.sphere_end(region_radius);

    auto cone_mask = [&](int depth) {
        Word prefix = ray.prefix(static_cast<std::size_t>(depth));
        Bitset mask(ball.size());
        for (std::uint32_t g = 0; g < region_end; ++g) {
            Word w = ball.word_of(g);
            if (w.size() < prefix.size()) continue;
            if (std::equal(prefix.begin(), prefix.end(), w.begin())) mask.set(g);
        }
        return mask;
    };

    for (std::size_t i = 1; i <= mlc.n_seq.size(); ++i) {
        double ni = mlc.n_seq[i - 1];
        if (!(ni < static_cast<double>(region_radius))) break;
        CascadeLevel lvl;
        lvl.i = i;
        lvl.n_i = ni;
        lvl.threshold = mlc.k * std::exp(mlc.epsilon * (mlc.D + 0.25) * ni);
        Bitset cone_i = cone_mask(visual_ball_depth(mlc.r_seq[i - 1], mlc.epsilon));
        cone_i &= phase1;
        lvl.cone_count = cone_i.count();
        lvl.triggered = static_cast<double>(lvl.cone_count) >= lvl.threshold;
        if (lvl.triggered) {
            audit.any_triggered = true;
            lvl.conclusion_checked = true;
            for (std::size_t j = i; j < mlc.n_seq.size(); ++j) {
                double nj = mlc.n_seq[j - 1];
                if (!(nj < static_cast<double>(region_radius))) break;
                Bitset vj = cone_mask(visual_ball_depth(mlc.r_seq[j], mlc.epsilon));
                Bitset inner = cone_mask(visual_ball_depth(mlc.r_seq[j - 1], mlc.epsilon));
                vj = minus(vj, inner);
                vj = minus(vj, ball_subset(ball, static_cast<int>(std::floor(nj))));
                vj &= phase1;
                double vthr = mlc.k * std::exp(mlc.epsilon * (mlc.D + 0.25) * nj);
                if (static_cast<double>(vj.count()) < vthr) {
                    lvl.conclusion_holds = false;
                    audit.all_conclusions_hold = false;
                    break;
                }
            }
        }
        audit.levels.push_back(lvl);
    }
    return audit;
}

// ---------------------------------------------------------------------------
// Asymptotic values.

struct DecaySeries {
    Word prefix;
    double target = 0.0; // well value this cylinder should approach
    std::vector<int> depths;
    std::vector<double> max_dev;
    bool monotone = true;
    double fitted_rate = 0.0; // geometric rate of the deviation decay
    bool rate_fitted = false;
};

struct DecayReport {
    std::vector<DecaySeries> series;
    bool all_monotone = true;
    double worst_rate = 0.0;
    double rate_bound = 0.0; // the continuation contraction constant
    bool rates_ok = true;
};

// Deviation |x_g - c_j| over cylinder cones, by depth: must shrink
// monotonically and at a geometric rate no worse than the contraction
// constant. Depths are truncated to the solved region.
inline DecayReport asymptotic_value_audit(const ScalarField& f, const Potential& pot,
                                          const BoundarySpecSet& u, double k,
                                          int region_radius) {
    const CayleyBall& ball = *f.ball;
    DecayReport rep;
    rep.rate_bound = k;

    std::vector<std::pair<Word, double>> tests;
    for (auto& c : u.cylinders()) tests.emplace_back(c.prefix, pot.c0);
    // complement side: depth-1 cylinders disjoint from every listed prefix
    for (int s = 0; s < ball.num_generators(); ++s) {
        Word w;
        if (!ball.spec().plain_append(w, static_cast<std::uint8_t>(s))) continue;
        w.push_back(static_cast<std::uint8_t>(s));
        bool disjoint = true;
        for (auto& c : u.cylinders())
            if (BoundarySpecSet::is_prefix(c.prefix, w) || BoundarySpecSet::is_prefix(w, c.prefix))
                disjoint = false;
        if (disjoint) tests.emplace_back(w, pot.c1);
    }

    const std::uint32_t region_end = ball.sphere_end(region_radius);
    for (auto& [prefix, target] : tests) {
        DecaySeries ds;
        ds.prefix = prefix;
        ds.target = target;
        int max_depth = region_radius - 1; // final solved sphere is frozen data
        for (int n = static_cast<int>(prefix.size()); n <= max_depth; ++n) {
            double dev = 0.0;
            std::uint64_t hits = 0;
            for (std::uint32_t g = ball.sphere_begin(n); g < std::min(ball.sphere_end(n), region_end);
                 ++g) {
                Word w = ball.word_of(g);
                if (w.size() < prefix.size() ||
                    !std::equal(prefix.begin(), prefix.end(), w.begin()))
                    continue;
                ++hits;
                dev = std::max(dev, std::abs(f.values[g] - target));
            }
            if (!hits) continue;
            ds.depths.push_back(n);
            ds.max_dev.push_back(dev);
        }
        for (std::size_t j = 0; j + 1 < ds.max_dev.size(); ++j)
            if (ds.max_dev[j + 1] > ds.max_dev[j] + 1e-12) ds.monotone = false;
        // geometric fit over informative entries
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j < ds.max_dev.size(); ++j)
            if (ds.max_dev[j] > 1e-15) {
                xs.push_back(static_cast<double>(ds.depths[j]));
                ys.push_back(std::log(ds.max_dev[j]));
            }
        if (xs.size() >= 2) {
            double n = static_cast<double>(xs.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                sx += xs[j];
                sy += ys[j];
                sxx += xs[j] * xs[j];
                sxy += xs[j] * ys[j];
            }
            double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            ds.fitted_rate = std::exp(slope);
            ds.rate_fitted = true;
        }
        rep.all_monotone = rep.all_monotone && ds.monotone;
        if (ds.rate_fitted) rep.worst_rate = std::max(rep.worst_rate, ds.fitted_rate);
        rep.series.push_back(std::move(ds));
    }
    rep.rates_ok = rep.worst_rate <= k + 1e-9;
    return rep;
}

} // namespace hypac
