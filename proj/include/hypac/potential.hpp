#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hypac {

// Double-well data: V with two outermost absolute minima c0 < c1, Morse at
// every listed critical point. The default quartic well keeps closed-form
// single-site minimization available to the solvers.
struct Potential {
    std::function<double(double)> V;
    std::function<double(double)> dV;
    std::function<double(double)> d2V;
    std::vector<double> critical_points;  // sorted ascending
    double c0 = 0.0;
    double c1 = 0.0;
    double hat_c = 0.0;         // lower bound for |V''| over all critical points
    double lipschitz_d2V = 0.0; // Lipschitz constant of V'' on [c0-1, c1+1]
    double d_tilde = 0.0;       // interior barrier: min V(saddle) - V(minima)
    bool quartic = false;

    static Potential quartic_double_well() {
        Potential p;
        p.V = [](double y) { double w = 1.0 - y * y; return 0.25 * w * w; };
        p.dV = [](double y) { return y * y * y - y; };
        p.d2V = [](double y) { return 3.0 * y * y - 1.0; };
        p.critical_points = {-1.0, 0.0, 1.0};
        p.c0 = -1.0;
        p.c1 = 1.0;
        p.hat_c = 1.0;           // |V''(0)| = 1 is the binding critical point
        p.lipschitz_d2V = 12.0;  // |V'''| = 6|y| <= 12 on [-2, 2]
        p.d_tilde = 0.25;
        p.quartic = true;
        p.validate();
        return p;
    }

    void validate() const {
        if (critical_points.size() < 3)
            throw std::invalid_argument("potential needs two minima and an interior saddle");
        for (std::size_t i = 0; i + 1 < critical_points.size(); ++i)
            if (!(critical_points[i] < critical_points[i + 1]))
                throw std::invalid_argument("critical points must be strictly sorted");
        if (c0 != critical_points.front() || c1 != critical_points.back() || !(c0 < c1))
            throw std::invalid_argument("c0/c1 must be the outermost critical points");
        for (double c : critical_points) {
            if (std::abs(dV(c)) > 1e-9)
                throw std::invalid_argument("listed point is not critical");
            if (std::abs(d2V(c)) < hat_c - 1e-12)
                throw std::invalid_argument("potential is not Morse at the stated margin");
        }
        double vmin = std::min(V(c0), V(c1));
        for (int i = 0; i <= 400; ++i) {
            double y = (c0 - 1.0) + (c1 - c0 + 2.0) * i / 400.0;
            if (V(y) < vmin - 1e-9)
                throw std::invalid_argument("c0/c1 are not absolute minima");
        }
        if (!(hat_c > 0.0) || !(lipschitz_d2V > 0.0) || !(d_tilde > 0.0))
            throw std::invalid_argument("potential margins must be positive");
    }

    // Smallest curvature magnitude among the critical values a seed uses;
    // the continuation contraction bound is built from this.
    double curvature_floor(const std::vector<double>& seed_values) const {
        double floor_ = std::numeric_limits<double>::infinity();
        for (double v : seed_values) floor_ = std::min(floor_, std::abs(d2V(v)));
        if (!std::isfinite(floor_)) floor_ = std::abs(d2V(c0));
        return floor_;
    }

    bool is_critical_value(double y) const {
        for (double c : critical_points)
            if (y == c) return true;
        return false;
    }
};

} // namespace hypac
