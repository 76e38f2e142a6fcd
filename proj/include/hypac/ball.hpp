#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypac/group.hpp"

namespace hypac {

inline constexpr std::uint32_t kExternal = std::numeric_limits<std::uint32_t>::max();

struct MemoryCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric ball B_n around the identity, enumerated breadth-first, spheres in
// increasing radius and lexicographic word order within a sphere. Immutable
// after construction; every other module works against element indices into
// this table. Words are stored as (parent, last symbol) chains since prefixes
// of normal forms are normal forms.
class CayleyBall {
public:
    CayleyBall(GroupSpec spec, int radius, std::size_t memory_cap = 20'000'000)
        : spec_(std::move(spec)), radius_(radius) {
        if (radius < 0) throw std::invalid_argument("ball radius must be >= 0");
        build(memory_cap);
    }

    const GroupSpec& spec() const { return spec_; }
    int radius() const { return radius_; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(parent_.size()); }
    int num_generators() const { return spec_.num_generators(); }

    std::uint32_t neighbor(std::uint32_t g, int s) const {
        return adj_[static_cast<std::size_t>(g) * spec_.num_generators() + s];
    }

    bool on_rim(std::uint32_t g) const {
        for (int s = 0; s < spec_.num_generators(); ++s)
            if (neighbor(g, s) == kExternal) return true;
        return false;
    }

    int length(std::uint32_t g) const {
        int lo = 0, hi = radius_;
        while (lo < hi) {
            int mid = (lo + hi) / 2;
            if (g < sphere_offset_[mid + 1]) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }

    std::uint32_t sphere_begin(int m) const { return sphere_offset_[m]; }
    std::uint32_t sphere_end(int m) const { return sphere_offset_[m + 1]; }
    std::uint64_t sphere_count(int m) const { return sphere_end(m) - sphere_begin(m); }
    std::uint64_t count_up_to(int m) const { return sphere_offset_[m + 1]; }

    Word word_of(std::uint32_t g) const {
        Word w;
        while (g != 0) {
            w.push_back(last_symbol_[g]);
            g = parent_[g];
        }
        std::reverse(w.begin(), w.end());
        return w;
    }

    std::string name_of(std::uint32_t g) const { return spec_.format_word(word_of(g)); }

    // Walks the normal form through the adjacency table; prefixes of a
    // normal form never leave the ball, so this needs no hash lookup.
    std::uint32_t find(const Word& w) const {
        if (static_cast<int>(w.size()) > radius_) return kExternal;
        std::uint32_t cur = 0;
        for (auto s : w) {
            cur = neighbor(cur, s);
            if (cur == kExternal) return kExternal;
        }
        return cur;
    }

    int distance(std::uint32_t a, std::uint32_t b) const {
        return spec_.distance(word_of(a), word_of(b));
    }

    // Geodesic as element indices; throws if an intermediate point leaves the
    // ball (possible only off the tree backends, near the rim).
    std::vector<std::uint32_t> geodesic(std::uint32_t a, std::uint32_t b) const {
        auto words = spec_.geodesic_words(word_of(a), word_of(b));
        std::vector<std::uint32_t> path;
        path.reserve(words.size());
        for (auto& w : words) {
            std::uint32_t idx = find(w);
            if (idx == kExternal)
                throw std::runtime_error("geodesic leaves the enumerated ball");
            path.push_back(idx);
        }
        return path;
    }

    std::uint64_t content_hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        };
        mix(static_cast<std::uint64_t>(spec_.backend() == GroupBackend::free_group ? 1 : 2));
        mix(static_cast<std::uint64_t>(spec_.rank()));
        for (int m : spec_.orders()) mix(static_cast<std::uint64_t>(m));
        mix(static_cast<std::uint64_t>(radius_));
        mix(parent_.size());
        for (std::size_t i = 0; i < parent_.size(); ++i) {
            mix(parent_[i]);
            mix(last_symbol_[i]);
        }
        return h;
    }

private:
    void build(std::size_t cap) {
        const int ns = spec_.num_generators();
        parent_.push_back(kExternal);
        last_symbol_.push_back(0);
        sphere_offset_.assign(1, 0);
        sphere_offset_.push_back(1);

        // children sphere by sphere; an element's parent is its word minus
        // the last symbol, so "plain appends" enumerate each sphere once
        for (int m = 0; m < radius_; ++m) {
            std::uint32_t begin = sphere_offset_[m], end = sphere_offset_[m + 1];
            for (std::uint32_t g = begin; g < end; ++g) {
                Word w = word_of(g);
                for (int s = 0; s < ns; ++s) {
                    if (!spec_.plain_append(w, static_cast<std::uint8_t>(s))) continue;
                    if (parent_.size() >= cap)
                        throw MemoryCapError("ball enumeration exceeds memory cap of " +
                                             std::to_string(cap) + " elements");
                    parent_.push_back(g);
                    last_symbol_.push_back(static_cast<std::uint8_t>(s));
                }
            }
            sphere_offset_.push_back(static_cast<std::uint32_t>(parent_.size()));
        }

        adj_.assign(parent_.size() * static_cast<std::size_t>(ns), kExternal);
        // child edges first so find() works for everything already enumerated
        for (std::uint32_t g = 1; g < parent_.size(); ++g) {
            adj_[static_cast<std::size_t>(parent_[g]) * ns + last_symbol_[g]] = g;
            adj_[static_cast<std::size_t>(g) * ns + spec_.inverse(last_symbol_[g])] = parent_[g];
        }
        if (spec_.backend() == GroupBackend::free_group) return;

        for (std::uint32_t g = 0; g < parent_.size(); ++g) {
            Word w = word_of(g);
            for (int s = 0; s < ns; ++s) {
                std::size_t slot = static_cast<std::size_t>(g) * ns + s;
                if (adj_[slot] != kExternal) continue;
                adj_[slot] = find(spec_.mul(w, static_cast<std::uint8_t>(s)));
            }
        }
    }

    GroupSpec spec_;
    int radius_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint8_t> last_symbol_;
    std::vector<std::uint32_t> adj_;
    std::vector<std::uint32_t> sphere_offset_;
};

// Least-squares slope of log #S_m against m, over the nonempty spheres
// m >= 1. Sphere counts are the clean regressor: for free groups the fit
// is exactly linear, while ball counts carry an additive constant that
// biases short-range fits.
struct EntropyEstimate {
    double slope = 0.0;
    double exact = 0.0;
    std::vector<std::uint64_t> ball_counts;
};

inline EntropyEstimate entropy_estimate(const CayleyBall& ball) {
    if (ball.radius() < 3)
        throw std::invalid_argument("entropy estimate needs ball radius >= 3");
    EntropyEstimate est;
    est.exact = ball.spec().entropy_exact();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int m = 0; m <= ball.radius(); ++m) {
        est.ball_counts.push_back(ball.count_up_to(m));
        if (m == 0 || ball.sphere_count(m) == 0) continue;
        double x = m, y = std::log(static_cast<double>(ball.sphere_count(m)));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    est.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return est;
}

} // namespace hypac
