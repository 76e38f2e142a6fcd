#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hypac {

// Fixed-size bitmask over ball element indices. All subset algebra in the
// library runs on these, including the exhaustive 2^n sweeps, so the word
// layout is kept flat and the hot operations branch-free.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    std::size_t size() const { return n_; }

    bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { w_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    void reset(std::size_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    void assign(std::size_t i, bool v) { v ? set(i) : reset(i); }

    void clear() { for (auto& w : w_) w = 0; }

    void fill() {
        for (auto& w : w_) w = ~std::uint64_t{0};
        trim();
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool any() const {
        for (auto w : w_) if (w) return true;
        return false;
    }
    bool none() const { return !any(); }

    Bitset& operator|=(const Bitset& o) { check(o); for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i]; return *this; }
    Bitset& operator&=(const Bitset& o) { check(o); for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i]; return *this; }
    Bitset& operator^=(const Bitset& o) { check(o); for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i]; return *this; }

    friend Bitset operator|(Bitset a, const Bitset& b) { a |= b; return a; }
    friend Bitset operator&(Bitset a, const Bitset& b) { a &= b; return a; }
    friend Bitset operator^(Bitset a, const Bitset& b) { a ^= b; return a; }

    // a \ b
    friend Bitset minus(Bitset a, const Bitset& b) {
        a.check(b);
        for (std::size_t i = 0; i < a.w_.size(); ++i) a.w_[i] &= ~b.w_[i];
        return a;
    }

    Bitset complement() const {
        Bitset r(*this);
        for (auto& w : r.w_) w = ~w;
        r.trim();
        return r;
    }

    bool operator==(const Bitset& o) const { return n_ == o.n_ && w_ == o.w_; }
    bool operator!=(const Bitset& o) const { return !(*this == o); }

    bool subset_of(const Bitset& o) const {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & ~o.w_[i]) return false;
        return true;
    }

    bool intersects(const Bitset& o) const {
        check(o);
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & o.w_[i]) return true;
        return false;
    }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t wi = 0; wi < w_.size(); ++wi) {
            std::uint64_t w = w_[wi];
            while (w) {
                unsigned b = static_cast<unsigned>(std::countr_zero(w));
                f(static_cast<std::size_t>((wi << 6) + b));
                w &= w - 1;
            }
        }
    }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for_each([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    std::uint64_t fnv64() const {
        std::uint64_t h = 1469598103934665603ull;
        for (auto w : w_)
            for (int b = 0; b < 8; ++b) {
                h ^= (w >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        return h;
    }

private:
    void check(const Bitset& o) const {
        if (n_ != o.n_) throw std::invalid_argument("bitset size mismatch");
    }
    void trim() {
        if (n_ & 63) w_.back() &= (std::uint64_t{1} << (n_ & 63)) - 1;
        if (w_.empty()) return;
    }

    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

} // namespace hypac
