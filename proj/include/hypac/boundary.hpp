#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/rng.hpp"
#include "hypac/sets.hpp"

namespace hypac {

// Boundary point given as an eventually periodic geodesic ray: the infinite
// normal form preperiod . period . period ...
struct BoundaryPoint {
    Word preperiod;
    Word period;
};

struct Cylinder {
    Word prefix;
};

class RayStream {
public:
    explicit RayStream(const BoundaryPoint& bp) : bp_(&bp) {}
    std::uint8_t symbol(std::size_t t) const {
        if (t < bp_->preperiod.size()) return bp_->preperiod[t];
        return bp_->period[(t - bp_->preperiod.size()) % bp_->period.size()];
    }
    std::size_t preperiod_length() const { return bp_->preperiod.size(); }
    std::size_t period_length() const { return bp_->period.size(); }
    Word prefix(std::size_t depth) const {
        Word w;
        w.reserve(depth);
        for (std::size_t t = 0; t < depth; ++t) w.push_back(symbol(t));
        return w;
    }

private:
    const BoundaryPoint* bp_;
};

// A ray is valid when spelling it symbol by symbol always grows the normal
// form: then the infinite word is geodesic and all its prefixes are normal.
inline void validate_ray(const GroupSpec& spec, const BoundaryPoint& bp) {
    if (bp.period.empty()) throw std::invalid_argument("boundary ray needs a nonempty period");
    RayStream st(bp);
    std::size_t depth = bp.preperiod.size() + 3 * bp.period.size();
    Word w;
    for (std::size_t t = 0; t < depth; ++t) {
        std::uint8_t s = st.symbol(t);
        if (!spec.plain_append(w, s))
            throw std::invalid_argument("ray is not a geodesic normal form (cancellation at depth " +
                                        std::to_string(t) + ")");
        w.push_back(s);
    }
}

inline std::size_t common_prefix_depth(const Word& a, const Word& b) {
    std::size_t n = std::min(a.size(), b.size()), t = 0;
    while (t < n && a[t] == b[t]) ++t;
    return t;
}

inline std::size_t common_prefix_depth(const Word& a, const BoundaryPoint& xi) {
    RayStream st(xi);
    std::size_t t = 0;
    while (t < a.size() && a[t] == st.symbol(t)) ++t;
    return t;
}

// Returns nullopt when the two rays are the same boundary point.
inline std::optional<std::size_t> common_prefix_depth(const BoundaryPoint& a, const BoundaryPoint& b) {
    RayStream sa(a), sb(b);
    std::size_t pa = sa.preperiod_length(), pb = sb.preperiod_length();
    std::size_t bound = std::max(pa, pb) + std::lcm(sa.period_length(), sb.period_length());
    for (std::size_t t = 0; t < bound; ++t)
        if (sa.symbol(t) != sb.symbol(t)) return t;
    return std::nullopt;
}

// Visual (quasi-)metric in tree form: e^(-eps * l) with l the depth of the
// common normal-form prefix. Exact on tree backends; on free products this is
// the canonical-prefix ultrametric the rest of the boundary model uses.
struct VisualMetric {
    double epsilon;

    double between(const Word& a, const Word& b) const {
        if (a == b) return 0.0;
        return std::exp(-epsilon * static_cast<double>(common_prefix_depth(a, b)));
    }
    double between(const Word& a, const BoundaryPoint& xi) const {
        return std::exp(-epsilon * static_cast<double>(common_prefix_depth(a, xi)));
    }
    double between(const BoundaryPoint& a, const BoundaryPoint& b) const {
        auto cp = common_prefix_depth(a, b);
        if (!cp) return 0.0;
        return std::exp(-epsilon * static_cast<double>(*cp));
    }
};

// Union of cylinders describing an open boundary set. normalize() dedupes,
// drops nested prefixes and merges complete sibling families, after which
// membership is a plain prefix test.
class BoundarySpecSet {
public:
    static BoundarySpecSet normalize(const GroupSpec& spec, std::vector<Cylinder> cyls) {
        for (auto& c : cyls)
            if (!spec.is_normal(c.prefix))
                throw std::invalid_argument("cylinder prefix is not a normal form");
        bool changed = true;
        while (changed) {
            changed = false;
            std::sort(cyls.begin(), cyls.end(),
                      [](const Cylinder& x, const Cylinder& y) { return x.prefix < y.prefix; });
            std::vector<Cylinder> kept;
            for (auto& c : cyls) {
                bool nested = false;
                for (auto& k : kept)
                    if (is_prefix(k.prefix, c.prefix)) { nested = true; break; }
                if (!nested) kept.push_back(std::move(c));
                else changed = true;
            }
            cyls = std::move(kept);
            // merge complete sibling families into their parent
            for (std::size_t i = 0; i < cyls.size(); ++i) {
                const Word& w = cyls[i].prefix;
                if (w.empty()) continue;
                Word parent(w.begin(), w.end() - 1);
                bool complete = true;
                for (int s = 0; s < spec.num_generators() && complete; ++s) {
                    if (!spec.plain_append(parent, static_cast<std::uint8_t>(s))) continue;
                    Word child = parent;
                    child.push_back(static_cast<std::uint8_t>(s));
                    bool found = false;
                    for (auto& c : cyls) found = found || c.prefix == child;
                    complete = found;
                }
                if (complete) {
                    std::vector<Cylinder> next;
                    for (auto& c : cyls) {
                        Word p(c.prefix.begin(), c.prefix.empty() ? c.prefix.end() : c.prefix.end() - 1);
                        if (!(c.prefix.size() == parent.size() + 1 && p == parent)) next.push_back(c);
                    }
                    next.push_back(Cylinder{parent});
                    cyls = std::move(next);
                    changed = true;
                    break;
                }
            }
        }
        BoundarySpecSet u;
        u.cylinders_ = std::move(cyls);
        return u;
    }

    const std::vector<Cylinder>& cylinders() const { return cylinders_; }

    // degenerate shapes: no cylinder at all, or the empty prefix after
    // merging (the whole boundary)
    bool empty() const { return cylinders_.empty(); }
    bool full() const {
        for (auto& c : cylinders_)
            if (c.prefix.empty()) return true;
        return false;
    }

    bool contains_word(const Word& w) const {
        for (auto& c : cylinders_)
            if (is_prefix(c.prefix, w)) return true;
        return false;
    }

    bool contains_ray(const BoundaryPoint& xi) const {
        RayStream st(xi);
        for (auto& c : cylinders_) {
            bool ok = true;
            for (std::size_t t = 0; t < c.prefix.size() && ok; ++t) ok = st.symbol(t) == c.prefix[t];
            if (ok) return true;
        }
        return false;
    }

    std::size_t max_depth() const {
        std::size_t d = 0;
        for (auto& c : cylinders_) d = std::max(d, c.prefix.size());
        return d;
    }

    static bool is_prefix(const Word& p, const Word& w) {
        return p.size() <= w.size() && std::equal(p.begin(), p.end(), w.begin());
    }

private:
    std::vector<Cylinder> cylinders_;
};

// Cone of a boundary set: elements all of whose shadow lies inside U. With
// cylinder shadows this is the set of elements extending a listed prefix.
inline Bitset cone(const CayleyBall& ball, const BoundarySpecSet& u) {
    Bitset bits(ball.size());
    std::unordered_set<std::string> prefixes;
    for (auto& c : u.cylinders())
        prefixes.emplace(reinterpret_cast<const char*>(c.prefix.data()), c.prefix.size());
    // membership is hereditary along parent chains: a word extends a prefix
    // iff its parent does or the word itself is listed
    std::vector<char> member(ball.size(), 0);
    for (std::uint32_t g = 0; g < ball.size(); ++g) {
        Word w = ball.word_of(g);
        bool m = false;
        if (!w.empty()) {
            Word parent(w.begin(), w.end() - 1);
            std::uint32_t pi = ball.find(parent);
            m = pi != kExternal && member[pi];
        }
        if (!m) m = prefixes.count(std::string(reinterpret_cast<const char*>(w.data()), w.size())) > 0;
        member[g] = m ? 1 : 0;
        if (m) bits.set(g);
    }
    return bits;
}

// Cone of a finite boundary point set: a shadow always contains a whole
// cylinder, so a set with empty interior has an empty cone.
inline Bitset cone_of_points(const CayleyBall& ball, const std::vector<BoundaryPoint>&) {
    return Bitset(ball.size());
}

// Literal shadow membership: every geodesic ray id -> xi passes within R of
// g. On trees the ray is unique; free products branch at even-order tie
// syllables and every routing is checked.
inline bool shadow_membership(const GroupSpec& spec, const BoundaryPoint& xi, const Word& g, double R) {
    RayStream st(xi);
    const int horizon = static_cast<int>(g.size()) + static_cast<int>(std::floor(R)) + 1;

    struct Walker {
        const GroupSpec& spec;
        const RayStream& st;
        const Word& g;
        double R;
        int horizon;
        bool run(Word w, int t) {
            if (spec.distance(w, g) <= R) return true;
            if (t >= horizon) return false;
            std::uint8_t q = st.symbol(t);
            // full syllable length (runs are bounded by half the factor order)
            int p = 1;
            while (st.symbol(t + p) == q) {
                ++p;
                if (p > 64) break;
            }
            std::vector<Word> routes;
            routes.push_back(Word(static_cast<std::size_t>(p), q));
            if (spec.backend() == GroupBackend::free_product) {
                int m = spec.factor_order(spec.factor_of(q));
                if (2 * p == m) routes.push_back(Word(static_cast<std::size_t>(p), spec.inverse(q)));
            }
            for (auto& route : routes) {
                Word v = w;
                bool hit = false;
                for (auto s : route) {
                    v = spec.mul(std::move(v), s);
                    if (spec.distance(v, g) <= R) { hit = true; break; }
                }
                if (hit) continue;
                if (!run(std::move(v), t + p)) return false;
            }
            return true;
        }
    };
    Walker walker{spec, st, g, R, horizon};
    return walker.run(Word{}, 0);
}

// C_{B_r(xi0)} \ B_n at the exact tree depth: the ball at infinity of radius
// r around xi0 is the cylinder at depth m = ceil(-log r / eps), its cone
// starts at that depth, and n = m discards nothing extra.
struct TruncatedCone {
    Bitset bits;
    int depth = 0;  // cylinder depth m
    int cut = 0;    // n with C \ B_n returned
    double sandwich_factor = 0.0;
};

inline TruncatedCone truncated_cone_neighborhood(const CayleyBall& ball, const BoundaryPoint& xi0,
                                                 double r, double eps) {
    if (!(r > 0.0) || !(r < 1.0))
        throw std::invalid_argument("truncated cone radius must lie in (0,1)");
    int m = static_cast<int>(std::ceil(-std::log(r) / eps - 1e-12));
    if (m < 1) m = 1;
    TruncatedCone out;
    out.depth = m;
    out.cut = m;
    out.sandwich_factor = std::exp(eps);
    RayStream st(xi0);
    auto u = BoundarySpecSet::normalize(ball.spec(), {Cylinder{st.prefix(static_cast<std::size_t>(m))}});
    out.bits = cone(ball, u);
    // elements shorter than the prefix cannot extend it, so B_n is already
    // disjoint from the cone; kept as an explicit invariant
    for (std::uint32_t g = 0; g < ball.sphere_end(std::min(m - 1, ball.radius())); ++g)
        if (out.bits.test(g)) throw std::logic_error("truncated cone intersects B_n");
    return out;
}

// Thickness schedule for separating sets.
struct SeparationConstants {
    double epsilon = 0.0;
    double t_factor = 0.0;  // min{ e^eps C4, e^{eps(2R+delta~)} C2 }
    double t_n(int n) const { return t_factor * std::exp(-epsilon * static_cast<double>(n)); }
};

struct SeparatingSet {
    Bitset bits;
    double t = 0.0;
    bool degenerate = false;
};

// Ray sites over the closed annulus around xi0 of inner radius r+t_n and
// width 2t_n, minus B_n. Membership per element: some extension of its normal
// form is a boundary point whose distance to xi0 lands in the band.
inline SeparatingSet separating_set(const CayleyBall& ball, const BoundaryPoint& xi0, double r, int n,
                                    const SeparationConstants& sc) {
    if (n < 0 || n > ball.radius()) throw std::invalid_argument("separating set cut outside ball");
    SeparatingSet out;
    out.bits = Bitset(ball.size());
    out.t = sc.t_n(n);
    const double lo = r + out.t, hi = r + 3.0 * out.t;
    const double eps = sc.epsilon;
    for (std::uint32_t g = ball.sphere_end(n); g < ball.size(); ++g) {
        Word w = ball.word_of(g);
        std::size_t c = common_prefix_depth(w, xi0);
        if (c < w.size()) {
            double d = std::exp(-eps * static_cast<double>(c));
            if (d >= lo - 1e-15 && d <= hi + 1e-15) out.bits.set(g);
        } else {
            // g lies on the ray; extensions realize every depth >= |g|
            double kmin = -std::log(hi) / eps, kmax = -std::log(lo) / eps;
            long k0 = static_cast<long>(std::ceil(kmin - 1e-12));
            long k1 = static_cast<long>(std::floor(kmax + 1e-12));
            k0 = std::max<long>(k0, static_cast<long>(w.size()));
            if (k0 <= k1) out.bits.set(g);
        }
    }
    out.degenerate = out.bits.none();
    return out;
}

// Finite Patterson-Sullivan weights at s > h, normalized over the ball.
inline double ps_weight(const CayleyBall& ball, double s, const Bitset& a) {
    detail::check_universe(ball, a);
    double h = ball.spec().entropy_exact();
    if (!(s > h)) throw std::invalid_argument("Patterson-Sullivan exponent must exceed the entropy");
    double num = 0.0, den = 0.0;
    for (int m = 0; m <= ball.radius(); ++m) {
        double w = std::exp(-s * m);
        den += w * static_cast<double>(ball.sphere_count(m));
    }
    a.for_each([&](std::size_t g) { num += std::exp(-s * ball.length(static_cast<std::uint32_t>(g))); });
    return num / den;
}

// Closed-form tail weight on F_k: sum over extensions of a length-l word,
// truncated at the ball radius (or the full geometric series).
inline double ps_tail_geometric(const GroupSpec& spec, double s, int len, int radius = -1) {
    if (spec.backend() != GroupBackend::free_group)
        throw std::invalid_argument("geometric tail form applies to the tree backends");
    if (len < 1) throw std::invalid_argument("tail needs a nontrivial base word");
    double q = (2.0 * spec.rank() - 1.0) * std::exp(-s);
    double head = std::exp(-s * len);
    if (radius < 0) return head / (1.0 - q);
    if (radius < len) return 0.0;
    int terms = radius - len + 1;
    return head * (1.0 - std::pow(q, terms)) / (1.0 - q);
}

struct ConeGrowthAudit {
    std::vector<std::uint64_t> sphere_counts;
    int first_depth = 0;
    double slope = 0.0;
    double envelope_hi = 0.0;  // max count / (r^D e^{eps D n})
    double envelope_lo = 0.0;
    bool emptied = false;
};

inline ConeGrowthAudit cone_growth_audit(const CayleyBall& ball, const BoundarySpecSet& u, double eps,
                                         double D) {
    if (ball.radius() < 6) throw std::invalid_argument("cone growth audit needs radius >= 6");
    ConeGrowthAudit out;
    Bitset c = cone(ball, u);
    out.first_depth = static_cast<int>(u.max_depth());
    for (auto& cyl : u.cylinders())
        out.first_depth = std::min<int>(out.first_depth, static_cast<int>(cyl.prefix.size()));
    out.sphere_counts.assign(static_cast<std::size_t>(ball.radius()) + 1, 0);
    c.for_each([&](std::size_t g) { out.sphere_counts[ball.length(static_cast<std::uint32_t>(g))]++; });
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int pts = 0;
    double r = std::exp(-eps * out.first_depth);
    out.envelope_hi = 0.0;
    out.envelope_lo = std::numeric_limits<double>::infinity();
    for (int m = out.first_depth; m <= ball.radius(); ++m) {
        std::uint64_t cm = out.sphere_counts[m];
        if (cm == 0) { out.emptied = true; continue; }
        double x = m, y = std::log(static_cast<double>(cm));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++pts;
        double ref = std::pow(r, D) * std::exp(eps * D * m);
        out.envelope_hi = std::max(out.envelope_hi, cm / ref);
        out.envelope_lo = std::min(out.envelope_lo, cm / ref);
    }
    if (pts >= 2) out.slope = (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
    return out;
}

enum class Provenance { closed_form, calibrated, assumed };

struct ReportedConstant {
    double value = 0.0;
    Provenance provenance = Provenance::assumed;
    std::string note;
};

struct ConstantsReport {
    std::string group;
    double h = 0.0;
    double epsilon = 0.0;
    double D = 0.0;
    double delta = 0.0;
    double delta_tilde = 0.0;
    double R = 0.0;
    ReportedConstant lambda, C1, C2, C3, C4, C5, Ctilde, k0, k1;

    SeparationConstants separation() const {
        SeparationConstants sc;
        sc.epsilon = epsilon;
        sc.t_factor = std::min(std::exp(epsilon) * C4.value,
                               std::exp(epsilon * (2.0 * R + delta_tilde)) * C2.value);
        return sc;
    }
};

// Assembles the constant table for a ball: closed forms where the tree model
// is exact, sampled calibrations (with a safety factor) elsewhere.
inline ConstantsReport compute_constants_report(const CayleyBall& ball, Rng& rng,
                                                std::optional<double> eps_override = std::nullopt) {
    const GroupSpec& spec = ball.spec();
    ConstantsReport rep;
    rep.group = spec.describe();
    rep.h = spec.entropy_exact();
    rep.epsilon = eps_override.value_or(rep.h / 2.0);
    if (!(rep.epsilon > 0.0)) throw std::invalid_argument("visual metric parameter must be positive");
    rep.D = rep.h / rep.epsilon;
    if (!(rep.D > 0.25))
        throw std::invalid_argument("visual dimension h/eps must exceed 1/4; shrink eps");
    rep.delta = spec.delta();
    rep.delta_tilde = spec.delta_tilde();
    rep.R = spec.shadow_radius();

    bool tree = spec.is_tree();
    if (tree) {
        rep.lambda = {1.0, Provenance::closed_form, "tree visual metric is exact"};
        rep.C2 = {1.0, Provenance::closed_form, "cylinder shadows, unit comparison"};
        rep.C4 = {1.0, Provenance::closed_form, "cylinder shadows, unit comparison"};
        double k = spec.rank();
        rep.C1 = {2.0 * k / (2.0 * k - 1.0), Provenance::closed_form,
                  "uniform boundary measure of a cylinder vs e^{-h|g|}"};
        rep.C3 = {(2.0 * k / (2.0 * k - 1.0)) * std::exp(rep.h), Provenance::closed_form,
                  "cylinder measure vs r^D with depth rounding"};
        rep.Ctilde = {k / (k - 1.0), Provenance::closed_form, "ball count closed form"};
    } else {
        int half = 0;
        for (int m : spec.orders()) half = std::max(half, m / 2);
        rep.lambda = {std::exp(rep.epsilon * half), Provenance::assumed,
                      "canonical-prefix model distortion bound"};
        rep.C2 = {1.0, Provenance::assumed, "canonical-prefix model"};
        rep.C4 = {1.0, Provenance::assumed, "canonical-prefix model"};
        // calibrate C1/C3 from finite-s tail weights over sampled elements
        double s = 1.05 * rep.h;
        double worst = 1.0;
        for (int i = 0; i < 2000; ++i) {
            std::uint32_t g = 1 + static_cast<std::uint32_t>(rng.uniform_index(ball.size() - 1));
            Bitset tail(ball.size());
            Word wg = ball.word_of(g);
            for (std::uint32_t x = 0; x < ball.size(); ++x) {
                Word wx = ball.word_of(x);
                if (BoundarySpecSet::is_prefix(wg, wx)) tail.set(x);
            }
            double nu = ps_weight(ball, s, tail);
            double ref = std::exp(-rep.h * ball.length(g));
            double ratio = nu / ref;
            worst = std::max({worst, ratio, 1.0 / ratio});
        }
        rep.C1 = {worst * 2.0, Provenance::calibrated, "sampled tail weights, safety 2"};
        rep.C3 = {worst * std::exp(rep.h) * 2.0, Provenance::calibrated, "from C1 with depth rounding"};
        double sup = 0.0;
        for (int m = 0; m <= ball.radius(); ++m) {
            double an = static_cast<double>(ball.count_up_to(m)) * std::exp(-rep.h * m);
            sup = std::max({sup, an, 1.0 / an});
        }
        rep.Ctilde = {sup, Provenance::calibrated, "enumerated ball counts vs e^{hn}"};
    }

    auto iso = isoperimetric_audit(ball, rng);
    rep.k0 = {iso.k0_calibrated, Provenance::calibrated,
              "max (#A/log#A)/#boundary over corpus, safety 2"};

    // C5 from the growth of a depth-1 cylinder cone
    Word seed{0};
    auto u = BoundarySpecSet::normalize(spec, {Cylinder{seed}});
    if (ball.radius() >= 6) {
        auto gr = cone_growth_audit(ball, u, rep.epsilon, rep.D);
        double c5 = std::max(gr.envelope_hi, gr.envelope_lo > 0 ? 1.0 / gr.envelope_lo : 0.0);
        rep.C5 = {c5 * 2.0, tree ? Provenance::closed_form : Provenance::calibrated,
                  tree ? "exact cylinder counts, reported with safety 2" : "sampled cone growth, safety 2"};
    } else {
        rep.C5 = {2.0, Provenance::assumed, "ball too small to calibrate"};
    }

    double tf = std::min(std::exp(rep.epsilon) * rep.C4.value,
                         std::exp(rep.epsilon * (2.0 * rep.R + rep.delta_tilde)) * rep.C2.value);
    rep.k1 = {1.0 / (4.0 * tf), tree ? Provenance::closed_form : Provenance::assumed,
              "from C2, C4, R, delta~"};
    return rep;
}

} // namespace hypac
