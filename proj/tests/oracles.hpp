#pragma once

// Reference implementations used only by the test suite. Each one is built
// from the definition it checks, along a different computational route than
// the library takes, so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include <quadmath.h>

#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/group.hpp"
#include "hypac/plateau.hpp"

namespace oracle {

using hypac::Bitset;
using hypac::CayleyBall;
using hypac::GroupSpec;
using hypac::Word;

// --- word enumeration -------------------------------------------------------

// All normal forms of each length up to n, generated recursively from the
// normal-form grammar (free: never follow a symbol with its inverse; product:
// alternate factors, each syllable spelled in its short canonical form).
// Never calls GroupSpec::mul or plain_append.
inline std::vector<std::vector<Word>> enumerate_words(const GroupSpec& spec, int n) {
    std::vector<std::vector<Word>> by_len(static_cast<std::size_t>(n) + 1);
    by_len[0].push_back({});
    if (spec.backend() == hypac::GroupBackend::free_group) {
        const int ns = spec.num_generators();
        std::function<void(Word&)> grow = [&](Word& w) {
            if (static_cast<int>(w.size()) >= n) return;
            for (int s = 0; s < ns; ++s) {
                if (!w.empty() && spec.inverse(static_cast<std::uint8_t>(s)) == w.back()) continue;
                w.push_back(static_cast<std::uint8_t>(s));
                by_len[w.size()].push_back(w);
                grow(w);
                w.pop_back();
            }
        };
        Word w;
        grow(w);
        return by_len;
    }
    const auto& orders = spec.orders();
    struct Syllable {
        Word spelled;
        int factor;
    };
    std::vector<Syllable> sylls;
    for (std::size_t f = 0; f < orders.size(); ++f) {
        int m = orders[f];
        std::uint8_t pos = spec.factor_generator(static_cast<int>(f));
        for (int e = 1; e < m; ++e) {
            int len = std::min(e, m - e);
            std::uint8_t sym = (2 * e < m || 2 * e == m) ? pos : static_cast<std::uint8_t>(pos + 1);
            if (m == 2) sym = pos;
            sylls.push_back({Word(static_cast<std::size_t>(len), sym), static_cast<int>(f)});
        }
    }
    // dedupe tie spellings (e and m-e give the same canonical word)
    std::sort(sylls.begin(), sylls.end(), [](const Syllable& a, const Syllable& b) {
        return std::tie(a.factor, a.spelled) < std::tie(b.factor, b.spelled);
    });
    sylls.erase(std::unique(sylls.begin(), sylls.end(),
                            [](const Syllable& a, const Syllable& b) {
                                return a.factor == b.factor && a.spelled == b.spelled;
                            }),
                sylls.end());
    std::function<void(Word&, int)> grow = [&](Word& w, int last_factor) {
        for (const auto& syl : sylls) {
            if (syl.factor == last_factor) continue;
            if (static_cast<int>(w.size() + syl.spelled.size()) > n) continue;
            const std::size_t keep = w.size();
            w.insert(w.end(), syl.spelled.begin(), syl.spelled.end());
            by_len[w.size()].push_back(w);
            grow(w, syl.factor);
            w.resize(keep);
        }
    };
    Word w;
    grow(w, -1);
    return by_len;
}

inline std::vector<std::uint64_t> sphere_counts(const GroupSpec& spec, int n) {
    auto words = enumerate_words(spec, n);
    std::vector<std::uint64_t> out;
    for (auto& lvl : words) out.push_back(lvl.size());
    return out;
}

// --- graph distance ---------------------------------------------------------

// BFS over the enumerated adjacency only; no word arithmetic.
inline int bfs_distance(const CayleyBall& ball, std::uint32_t a, std::uint32_t b) {
    if (a == b) return 0;
    std::vector<int> dist(ball.size(), -1);
    std::queue<std::uint32_t> q;
    q.push(a);
    dist[a] = 0;
    while (!q.empty()) {
        std::uint32_t g = q.front();
        q.pop();
        for (int s = 0; s < ball.num_generators(); ++s) {
            std::uint32_t h = ball.neighbor(g, s);
            if (h == hypac::kExternal || dist[h] >= 0) continue;
            dist[h] = dist[g] + 1;
            if (h == b) return dist[h];
            q.push(h);
        }
    }
    return -1;
}

// --- one-site minimization --------------------------------------------------

// Grid scan plus golden-section refinement on the value itself; never touches
// the derivative or any closed form.
inline double site_argmin(const std::function<double(double)>& V, double rho,
                          const std::vector<double>& neighbors, double lo = -2.5,
                          double hi = 2.5) {
    auto energy = [&](double t) {
        double acc = V(t);
        for (double x : neighbors) acc += 0.5 * rho * (t - x) * (t - x);
        return acc;
    };
    const int grid = 4000;
    double best = lo, best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        double t = lo + (hi - lo) * i / grid;
        double v = energy(t);
        if (v < best_val) { best_val = v; best = t; }
    }
    double step = (hi - lo) / grid;
    double a = best - step, b = best + step;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = energy(x1), f2 = energy(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = energy(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = energy(x2);
        }
    }
    return 0.5 * (a + b);
}

// --- series -----------------------------------------------------------------

inline double geometric_sum(double a, double q, int terms) {
    double acc = 0.0, t = a;
    for (int i = 0; i < terms; ++i, t *= q) acc += t;
    return acc;
}

// --- cuts -------------------------------------------------------------------

// 2^n sweep over free-site assignments; the cut is recounted from scratch by
// scanning every ordered pair, independent of edge_cut's one-sided walk.
inline std::uint64_t brute_min_cut(const CayleyBall& ball, const Bitset& d0,
                                   const hypac::CutWindow& window) {
    std::vector<std::uint32_t> free_sites;
    window.omega_in.for_each([&](std::uint32_t g) { free_sites.push_back(g); });
    if (free_sites.size() > 20) throw std::invalid_argument("brute cut cap exceeded");
    auto count_cut = [&](const Bitset& b) {
        std::uint64_t ordered = 0;
        window.omega.for_each([&](std::uint32_t g) {
            for (int s = 0; s < ball.num_generators(); ++s) {
                std::uint32_t h = ball.neighbor(g, s);
                if (h == hypac::kExternal || !window.omega.test(h)) continue;
                if (b.test(g) != b.test(h)) ++ordered;
            }
        });
        return ordered / 2;
    };
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    Bitset cand = d0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free_sites.size()); ++mask) {
        for (std::size_t i = 0; i < free_sites.size(); ++i)
            cand.assign(free_sites[i], (mask >> i) & 1ULL);
        best = std::min(best, count_cut(cand));
    }
    return best;
}

// --- quad-precision constants ----------------------------------------------

// (48 #S k0 Ctilde)^{4D/(4D-1)} along two independent 128-bit routes.
inline __float128 cascade_k_pow(__float128 ns, __float128 k0, __float128 ctilde, __float128 d) {
    __float128 base = 48.0q * ns * k0 * ctilde;
    __float128 e = 4.0q * d / (4.0q * d - 1.0q);
    return powq(base, e);
}

inline __float128 cascade_k_explog(__float128 ns, __float128 k0, __float128 ctilde, __float128 d) {
    __float128 base = 48.0q * ns * k0 * ctilde;
    __float128 e = 4.0q * d / (4.0q * d - 1.0q);
    return expq(e * logq(base));
}

inline long double quad_rel_diff(__float128 a, __float128 b) {
    __float128 scale = fabsq(a) > fabsq(b) ? fabsq(a) : fabsq(b);
    if (scale == 0.0q) return 0.0L;
    return static_cast<long double>(fabsq(a - b) / scale);
}

// Least L with (log n)^{4D} < n for all n >= L. Substituting n = e^u turns
// the failure region into {u : u < 4D log u}; bisection in quad finds the
// upper root of u = 4D log u and an integer walk pins the exact boundary.
inline std::uint64_t quad_log_power_threshold(__float128 four_d) {
    auto holds = [&](std::uint64_t n) {
        __float128 x = static_cast<__float128>(n);
        return powq(logq(x), four_d) < x;
    };
    if (four_d * logq(four_d) <= four_d) return 1;
    __float128 lo = four_d, hi = four_d;
    while (hi - four_d * logq(hi) < 0.0q) hi *= 2.0q;
    for (int it = 0; it < 300; ++it) {
        __float128 mid = 0.5q * (lo + hi);
        if (mid - four_d * logq(mid) < 0.0q) lo = mid;
        else hi = mid;
    }
    auto guess = static_cast<std::uint64_t>(floorq(expq(hi)));
    std::uint64_t L = guess + 2;
    while (L > 2 && !holds(L - 1)) ++L;
    while (L > 2 && holds(L - 1)) --L;
    return L;
}

} // namespace oracle
