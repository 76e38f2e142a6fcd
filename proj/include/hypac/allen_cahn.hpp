#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypac/ball.hpp"
#include "hypac/bitset.hpp"
#include "hypac/field.hpp"
#include "hypac/potential.hpp"
#include "hypac/sets.hpp"

namespace hypac {

// Graph Laplacian at a site: sum over generators of forward differences.
// Throws if a neighbor leaves the ball, since the value there is undefined.
inline double laplacian_at(const ScalarField& f, std::uint32_t g) {
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    double acc = 0.0;
    for (std::uint32_t s = 0; s < ns; ++s) {
        std::uint32_t n = ball.neighbor(g, s);
        if (n == kExternal)
            throw std::out_of_range("laplacian_at: neighbor outside ball at site " + std::to_string(g));
        acc += f.values[n] - f.values[g];
    }
    return acc;
}

// Residual of the discrete equation at an interior site: rho*Lap - V'.
inline double residual_at(const ScalarField& f, const Potential& pot, std::uint32_t g) {
    return f.rho * laplacian_at(f, g) - pot.dV(f.values[g]);
}

// Largest residual magnitude over a set of sites (all must be interior).
inline double sup_residual(const ScalarField& f, const Potential& pot, const Bitset& sites) {
    double worst = 0.0;
    sites.for_each([&](std::uint32_t g) {
        worst = std::max(worst, std::abs(residual_at(f, pot, g)));
    });
    return worst;
}

struct ActionValue {
    double value = 0.0;
    bool exits_ball = false; // some gradient term was dropped (clip policy)
};

// Energy of the field restricted to `sites`: for each site, half-edge
// gradient terms toward every neighbor plus the on-site potential.
// strict: throw when a neighbor leaves the ball. clip: drop that term.
inline ActionValue action(const ScalarField& f, const Potential& pot, const Bitset& sites,
                          RimPolicy policy = RimPolicy::strict) {
    const CayleyBall& ball = *f.ball;
    const auto ns = static_cast<std::uint32_t>(ball.spec().num_generators());
    ActionValue out;
    sites.for_each([&](std::uint32_t g) {
        for (std::uint32_t s = 0; s < ns; ++s) {
            std::uint32_t n = ball.neighbor(g, s);
            if (n == kExternal) {
                if (policy == RimPolicy::strict)
                    throw std::out_of_range("action: site " + std::to_string(g) +
                                            " has a neighbor outside the ball");
                out.exits_ball = true;
                continue;
            }
            double d = f.values[n] - f.values[g];
            out.value += 0.25 * f.rho * d * d;
        }
        out.value += pot.V(f.values[g]);
    });
    return out;
}

// Submodularity of the energy: pointwise min and max of two fields never
// cost more together than the originals. Returns the slack, which must be
// nonnegative up to arithmetic noise.
inline double minmax_check(const ScalarField& x, const ScalarField& y, const Bitset& sites,
                           const Potential& pot, RimPolicy policy = RimPolicy::strict) {
    if (x.size() != y.size()) throw std::invalid_argument("minmax_check: size mismatch");
    ScalarField lo = x, hi = x;
    for (std::uint32_t g = 0; g < x.size(); ++g) {
        lo.values[g] = std::min(x.values[g], y.values[g]);
        hi.values[g] = std::max(x.values[g], y.values[g]);
    }
    double wx = action(x, pot, sites, policy).value;
    double wy = action(y, pot, sites, policy).value;
    double wmin = action(lo, pot, sites, policy).value;
    double wmax = action(hi, pot, sites, policy).value;
    return wx + wy - wmax - wmin;
}

// Check that a solution's values stay inside the well interval spanned by
// its boundary data, with a fixed slack for float noise.
struct HullCheck {
    double lo_data = 0.0, hi_data = 0.0;
    double lo_field = 0.0, hi_field = 0.0;
    bool inside = false;
};

inline HullCheck hull_check(const ScalarField& f, const Bitset& interior, double slack = 1e-9) {
    HullCheck r;
    r.lo_data = std::numeric_limits<double>::infinity();
    r.hi_data = -std::numeric_limits<double>::infinity();
    r.lo_field = std::numeric_limits<double>::infinity();
    r.hi_field = -std::numeric_limits<double>::infinity();
    Bitset data = interior.complement();
    data.for_each([&](std::uint32_t g) {
        r.lo_data = std::min(r.lo_data, f.values[g]);
        r.hi_data = std::max(r.hi_data, f.values[g]);
    });
    interior.for_each([&](std::uint32_t g) {
        r.lo_field = std::min(r.lo_field, f.values[g]);
        r.hi_field = std::max(r.hi_field, f.values[g]);
    });
    r.inside = r.lo_field >= r.lo_data - slack && r.hi_field <= r.hi_data + slack;
    return r;
}

enum class OrderingKind { identical, strictly_ordered, violation };

struct ComparisonResult {
    OrderingKind kind = OrderingKind::identical;
    std::uint32_t witness = 0; // site violating the order, when kind == violation
    double gap = 0.0;          // smallest interior separation when strictly ordered
};

// Classify two solutions with ordered boundary data: either they coincide
// everywhere or the order is strict on the interior. Boundary data must
// already be ordered lo <= hi.
inline ComparisonResult comparison_check(const ScalarField& lo, const ScalarField& hi,
                                         const Bitset& interior, double tol = 1e-9) {
    ComparisonResult r;
    Bitset data = interior.complement();
    bool bad_data = false;
    std::uint32_t bad_site = 0;
    data.for_each([&](std::uint32_t g) {
        if (!bad_data && lo.values[g] > hi.values[g] + tol) { bad_data = true; bad_site = g; }
    });
    if (bad_data)
        throw std::invalid_argument("comparison_check: boundary data not ordered at site " +
                                    std::to_string(bad_site));
    bool all_equal = true;
    for (std::uint32_t g = 0; g < lo.size(); ++g) {
        if (std::abs(lo.values[g] - hi.values[g]) > tol) { all_equal = false; break; }
    }
    if (all_equal) { r.kind = OrderingKind::identical; return r; }
    r.gap = std::numeric_limits<double>::infinity();
    r.kind = OrderingKind::strictly_ordered;
    interior.for_each([&](std::uint32_t g) {
        double d = hi.values[g] - lo.values[g];
        if (d <= tol && r.kind == OrderingKind::strictly_ordered) {
            r.kind = OrderingKind::violation;
            r.witness = g;
        }
        r.gap = std::min(r.gap, d);
    });
    return r;
}

// Largest coupling, found by halving from rho_start, at which solved
// fields are guaranteed to sit in phase bands: residual-sized |V'| values
// force proximity to a critical point, and the saddle plateau costs more
// energy than a sharp interface.
inline double compute_rho1(const Potential& pot, std::uint32_t num_gens, double sigma0,
                           double rho_start, int max_halvings = 60) {
    const double span = pot.c1 - pot.c0;
    const double scan_lo = pot.c0 - sigma0, scan_hi = pot.c1 + sigma0;
    const int kGrid = 40000;
    auto bands_capture = [&](double rho) {
        double bound = 2.0 * rho * span * num_gens;
        for (int i = 0; i <= kGrid; ++i) {
            double x = scan_lo + (scan_hi - scan_lo) * i / kGrid;
            if (std::abs(pot.dV(x)) > bound) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (double c : pot.critical_points) nearest = std::min(nearest, std::abs(x - c));
            if (nearest >= sigma0) return false;
        }
        return true;
    };
    auto saddle_rejected = [&](double rho) {
        return num_gens * span * span * rho <= 2.0 * pot.d_tilde;
    };
    double rho = rho_start;
    for (int j = 0; j < max_halvings; ++j, rho *= 0.5)
        if (bands_capture(rho) && saddle_rejected(rho)) return rho;
    throw std::runtime_error("compute_rho1: no admissible coupling found");
}

// Coupling regime for continuation from the decoupled limit. All the
// constants are explicit functions of the potential and generator count.
struct ContinuationConfig {
    double k = 0.5;       // target contraction budget split
    double sigma0 = 0.0;  // seed neighborhood radius
    double c_tilde = 0.0; // Laplacian range bound over the tube
    double rho0 = 0.0;    // safe coupling for the quasi-Newton contraction
    double rho1 = 0.0;    // phase-band classification threshold
    double hat_c = 0.0;   // curvature floor actually used (seed-dependent)
    std::uint32_t max_iter = 10000;
    double tol = 1e-13;

    static ContinuationConfig make(const Potential& pot, std::uint32_t num_gens,
                                   double k, double seed_hat_c) {
        if (!(k > 0.0 && k < 1.0)) throw std::invalid_argument("contraction split must lie in (0,1)");
        if (!(seed_hat_c > 0.0)) throw std::invalid_argument("curvature floor must be positive");
        ContinuationConfig c;
        c.k = k;
        c.hat_c = seed_hat_c;
        double span = pot.c1 - pot.c0;
        c.sigma0 = std::min(k * seed_hat_c / (2.0 * pot.lipschitz_d2V),
                            span / 3.0 * (1.0 - 1e-9));
        c.c_tilde = 2.0 * num_gens * (span + 2.0 * c.sigma0);
        c.rho0 = std::min(k * seed_hat_c / (2.0 * c.c_tilde),
                          (1.0 - k) * c.sigma0 * seed_hat_c / c.c_tilde);
        c.rho1 = compute_rho1(pot, num_gens, c.sigma0, c.rho0);
        return c;
    }
};

} // namespace hypac
