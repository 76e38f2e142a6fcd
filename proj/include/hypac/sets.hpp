#pragma once

#include <cmath>
#include <stdexcept>

#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"

namespace hypac {

// Whether set images may silently clip at the ball rim. Strict callers get an
// exception instead of a truncated answer.
enum class RimPolicy { strict, clip };

struct SetImage {
    Bitset bits;
    bool exits_ball = false;
};

namespace detail {
inline void check_universe(const CayleyBall& ball, const Bitset& a) {
    if (a.size() != ball.size()) throw std::invalid_argument("subset universe does not match ball");
}
} // namespace detail

// A^out = { g : d(g, A) <= 1 }. Clipping is opt-in: a set touching the rim
// has part of its outer set beyond the enumerated ball.
inline SetImage outer_set(const CayleyBall& ball, const Bitset& a, RimPolicy policy = RimPolicy::strict) {
    detail::check_universe(ball, a);
    SetImage out{a, false};
    const int ns = ball.num_generators();
    a.for_each([&](std::size_t g) {
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(static_cast<std::uint32_t>(g), s);
            if (h == kExternal) out.exits_ball = true;
            else out.bits.set(h);
        }
    });
    if (out.exits_ball && policy == RimPolicy::strict)
        throw std::runtime_error("outer set exits the enumerated ball; pass RimPolicy::clip to accept clipping");
    return out;
}

// A^in = { g in A : gs in A for all s }. Exact regardless of the rim: an
// external neighbor is certainly outside A.
inline Bitset inner_set(const CayleyBall& ball, const Bitset& a) {
    detail::check_universe(ball, a);
    Bitset in(a.size());
    const int ns = ball.num_generators();
    a.for_each([&](std::size_t g) {
        for (int s = 0; s < ns; ++s) {
            std::uint32_t h = ball.neighbor(static_cast<std::uint32_t>(g), s);
            if (h == kExternal || !a.test(h)) return;
        }
        in.set(g);
    });
    return in;
}

inline SetImage boundary_out(const CayleyBall& ball, const Bitset& a, RimPolicy policy = RimPolicy::strict) {
    SetImage img = outer_set(ball, a, policy);
    img.bits = minus(std::move(img.bits), a);
    return img;
}

inline Bitset boundary_in(const CayleyBall& ball, const Bitset& a) {
    return minus(a, inner_set(ball, a));
}

inline SetImage boundary_full(const CayleyBall& ball, const Bitset& a, RimPolicy policy = RimPolicy::strict) {
    SetImage img = boundary_out(ball, a, policy);
    img.bits |= boundary_in(ball, a);
    return img;
}

inline Bitset ball_subset(const CayleyBall& ball, int m) {
    if (m > ball.radius()) throw std::invalid_argument("sub-ball radius exceeds enumerated radius");
    Bitset b(ball.size());
    for (std::uint32_t g = 0; g < ball.sphere_end(m); ++g) b.set(g);
    return b;
}

inline Bitset sphere_subset(const CayleyBall& ball, int m) {
    Bitset b(ball.size());
    for (std::uint32_t g = ball.sphere_begin(m); g < ball.sphere_end(m); ++g) b.set(g);
    return b;
}

// (#A / log #A) / #boundary_out(A); the singleton denominator uses log 2.
inline double isoperimetric_ratio(const CayleyBall& ball, const Bitset& a, RimPolicy policy = RimPolicy::clip) {
    std::size_t n = a.count();
    if (n == 0) throw std::invalid_argument("isoperimetric ratio of the empty set");
    SetImage bd = boundary_out(ball, a, policy);
    std::size_t nb = bd.bits.count();
    if (nb == 0 && bd.exits_ball)
        throw std::runtime_error("boundary fully outside the enumerated ball");
    double num = static_cast<double>(n) / std::log(static_cast<double>(std::max<std::size_t>(n, 2)));
    return num / static_cast<double>(nb);
}

// Random connected set grown from `seed` by frontier expansion, confined
// to site indices below `limit`.
template <class Rng>
Bitset random_connected_subset(const CayleyBall& ball, Rng& rng, std::uint32_t seed,
                               std::size_t target, std::uint32_t limit) {
    Bitset a(ball.size());
    std::vector<std::uint32_t> frontier{seed};
    a.set(seed);
    std::size_t sz = 1;
    while (sz < target && !frontier.empty()) {
        std::size_t pick = rng.uniform_index(frontier.size());
        std::uint32_t g = frontier[pick];
        frontier[pick] = frontier.back();
        frontier.pop_back();
        for (int s = 0; s < ball.num_generators(); ++s) {
            std::uint32_t h = ball.neighbor(g, s);
            if (h == kExternal || h >= limit || a.test(h)) continue;
            a.set(h);
            frontier.push_back(h);
            if (++sz >= target) break;
        }
    }
    return a;
}

struct IsoperimetricAudit {
    double k0_observed = 0.0;   // max ratio seen across the corpus
    double k0_calibrated = 0.0; // observed * safety factor
    std::size_t samples = 0;
};

// Calibrates the isoperimetric constant on a corpus of sub-balls and random
// connected sets; the safety factor keeps downstream constants conservative.
template <class Rng>
IsoperimetricAudit isoperimetric_audit(const CayleyBall& ball, Rng& rng, int random_sets = 200,
                                       double safety = 2.0) {
    IsoperimetricAudit audit;
    auto consider = [&](const Bitset& a) {
        double r = isoperimetric_ratio(ball, a, RimPolicy::clip);
        audit.k0_observed = std::max(audit.k0_observed, r);
        ++audit.samples;
    };
    for (int m = 0; m + 1 <= ball.radius(); ++m) consider(ball_subset(ball, m));
    for (int i = 0; i < random_sets; ++i) {
        std::uint32_t limit = ball.sphere_end(std::max(0, ball.radius() - 1));
        std::uint32_t seed = static_cast<std::uint32_t>(rng.uniform_index(limit));
        std::size_t target = 1 + rng.uniform_index(std::max<std::uint32_t>(1, limit / 4));
        consider(random_connected_subset(ball, rng, seed, target, limit));
    }
    audit.k0_calibrated = audit.k0_observed * safety;
    return audit;
}

} // namespace hypac
