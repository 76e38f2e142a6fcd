#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypac {

using Word = std::vector<std::uint8_t>;

enum class GroupBackend { free_group, free_product };

// Finitely generated group with trivially computable normal forms: a free
// group F_k (k >= 2) or a free product of finite cyclic groups. Elements are
// geodesic normal-form words over the symmetric generating set; word length
// is the word-metric distance to the identity.
//
// For cyclic factors every exponent e in 1..m-1 is written in its short form
// (e copies of the positive generator when 2e < m, m-e copies of the inverse
// when 2e > m, the positive generator on the 2e = m tie), which makes normal
// forms geodesic and prefixes of normal forms normal forms again.
class GroupSpec {
public:
    static GroupSpec free_group(int rank) {
        if (rank < 2)
            throw std::invalid_argument("free group rank must be >= 2 (rank 1 is elementary)");
        if (rank > 26)
            throw std::invalid_argument("free group rank capped at 26 (single-letter generator names)");
        GroupSpec s;
        s.backend_ = GroupBackend::free_group;
        s.rank_ = rank;
        s.num_gens_ = 2 * rank;
        s.inverse_.resize(s.num_gens_);
        for (int i = 0; i < s.num_gens_; ++i) s.inverse_[i] = static_cast<std::uint8_t>(i ^ 1);
        s.delta_ = 0.0;
        return s;
    }

    static GroupSpec free_product(std::vector<int> orders) {
        if (orders.size() < 2)
            throw std::invalid_argument("free product needs at least two factors");
        for (int m : orders)
            if (m < 2) throw std::invalid_argument("cyclic factor order must be >= 2");
        if (orders.size() == 2 && orders[0] == 2 && orders[1] == 2)
            throw std::invalid_argument("Z/2 * Z/2 is elementary (infinite dihedral); not supported");
        GroupSpec s;
        s.backend_ = GroupBackend::free_product;
        s.orders_ = std::move(orders);
        for (std::size_t f = 0; f < s.orders_.size(); ++f) {
            if (s.orders_[f] == 2) {
                s.gen_factor_.push_back(static_cast<int>(f));
                s.gen_positive_.push_back(1);
                s.inverse_.push_back(static_cast<std::uint8_t>(s.gen_factor_.size() - 1));
            } else {
                s.gen_factor_.push_back(static_cast<int>(f));
                s.gen_positive_.push_back(1);
                s.gen_factor_.push_back(static_cast<int>(f));
                s.gen_positive_.push_back(0);
                std::uint8_t pos = static_cast<std::uint8_t>(s.gen_factor_.size() - 2);
                s.inverse_.push_back(static_cast<std::uint8_t>(pos + 1));
                s.inverse_.push_back(pos);
            }
        }
        s.num_gens_ = static_cast<int>(s.gen_factor_.size());
        s.delta_ = 0.0;
        for (int m : s.orders_) s.delta_ = std::max(s.delta_, cycle_delta(m));
        return s;
    }

    GroupBackend backend() const { return backend_; }
    int rank() const { return rank_; }
    const std::vector<int>& orders() const { return orders_; }
    int num_generators() const { return num_gens_; }
    std::uint8_t inverse(std::uint8_t s) const { return inverse_[s]; }
    double delta() const { return delta_; }
    // Slimness margin used for triangles with an ideal vertex.
    double delta_tilde() const { return delta_ + 1.0; }
    bool is_tree() const { return backend_ == GroupBackend::free_group; }
    // Shadow parameter: 0 on trees, 2*(delta+1) otherwise.
    double shadow_radius() const { return is_tree() ? 0.0 : 2.0 * (delta_ + 1.0); }

    int factor_of(std::uint8_t s) const { return backend_ == GroupBackend::free_group ? s / 2 : gen_factor_[s]; }
    bool positive(std::uint8_t s) const { return backend_ == GroupBackend::free_group ? (s % 2 == 0) : gen_positive_[s] != 0; }
    int factor_order(int f) const { return orders_[f]; }
    // Positive generator index of a factor (free_product).
    std::uint8_t factor_generator(int f) const {
        int idx = 0;
        for (int i = 0; i < f; ++i) idx += orders_[i] == 2 ? 1 : 2;
        return static_cast<std::uint8_t>(idx);
    }

    bool operator==(const GroupSpec& o) const {
        return backend_ == o.backend_ && rank_ == o.rank_ && orders_ == o.orders_;
    }

    // --- word arithmetic -------------------------------------------------

    // Right-multiply a normal form by one generator; result is normal.
    Word mul(Word w, std::uint8_t s) const {
        if (s >= num_gens_) throw std::out_of_range("generator index");
        if (backend_ == GroupBackend::free_group) {
            if (!w.empty() && w.back() == inverse_[s]) w.pop_back();
            else w.push_back(s);
            return w;
        }
        int f = gen_factor_[s];
        std::size_t run = 0;
        while (run < w.size() && gen_factor_[w[w.size() - 1 - run]] == f) ++run;
        int m = orders_[f];
        int e = 0;
        if (run > 0) {
            std::uint8_t q = w.back();
            e = gen_positive_[q] ? static_cast<int>(run) : m - static_cast<int>(run);
        }
        e = (e + (gen_positive_[s] ? 1 : m - 1)) % m;
        w.resize(w.size() - run);
        append_canonical_run(w, f, e);
        return w;
    }

    Word inverse_word(const Word& w) const {
        Word r;
        r.reserve(w.size());
        for (auto it = w.rbegin(); it != w.rend(); ++it) r.push_back(inverse_[*it]);
        if (backend_ == GroupBackend::free_product) recanonicalize_ties(r);
        return r;
    }

    Word multiply(Word a, const Word& b) const {
        for (auto s : b) a = mul(std::move(a), s);
        return a;
    }

    int distance(const Word& a, const Word& b) const {
        return static_cast<int>(multiply(inverse_word(a), b).size());
    }

    bool is_normal(const Word& w) const {
        if (backend_ == GroupBackend::free_group) {
            for (std::size_t i = 0; i + 1 < w.size(); ++i)
                if (w[i + 1] == inverse_[w[i]]) return false;
            for (auto s : w) if (s >= num_gens_) return false;
            return true;
        }
        std::size_t i = 0;
        int prev_factor = -1;
        while (i < w.size()) {
            if (w[i] >= num_gens_) return false;
            std::uint8_t q = w[i];
            int f = gen_factor_[q];
            if (f == prev_factor) return false;
            std::size_t run = 0;
            while (i + run < w.size() && w[i + run] == q) ++run;
            if (i + run < w.size() && gen_factor_[w[i + run]] == f && w[i + run] != q) return false;
            int m = orders_[f];
            int len = static_cast<int>(run);
            if (gen_positive_[q]) {
                if (2 * len > m) return false;
            } else {
                if (2 * len >= m) return false;
            }
            prev_factor = f;
            i += run;
        }
        return true;
    }

    // True when appending s to w grows the normal form by exactly one symbol,
    // i.e. w+[s] is itself normal. Ball enumeration and ray validation key on this.
    bool plain_append(const Word& w, std::uint8_t s) const {
        if (backend_ == GroupBackend::free_group) return w.empty() || w.back() != inverse_[s];
        Word r = mul(w, s);
        if (r.size() != w.size() + 1) return false;
        return std::equal(w.begin(), w.end(), r.begin()) && r.back() == s;
    }

    // Geodesic from a to b as the list of visited normal forms (endpoints included).
    std::vector<Word> geodesic_words(const Word& a, const Word& b) const {
        Word z = multiply(inverse_word(a), b);
        std::vector<Word> path;
        path.reserve(z.size() + 1);
        Word cur = a;
        path.push_back(cur);
        for (auto s : z) {
            cur = mul(std::move(cur), s);
            path.push_back(cur);
        }
        return path;
    }

    // Every geodesic from a to b. Trees have exactly one; in a free product
    // each half-way syllable of the connecting word can run around its
    // cycle either way, doubling the count.
    std::vector<std::vector<Word>> all_geodesics(const Word& a, const Word& b) const {
        Word z = multiply(inverse_word(a), b);
        std::size_t i = 0;
        std::vector<std::vector<Word>> run_choices;
        while (i < z.size()) {
            std::uint8_t q = z[i];
            std::size_t len = 1;
            while (i + len < z.size() && z[i + len] == q) ++len;
            Word run(len, q);
            std::vector<Word> choices{run};
            if (backend_ == GroupBackend::free_product && gen_positive_[q] &&
                2 * len == static_cast<std::size_t>(orders_[gen_factor_[q]]))
                choices.push_back(Word(len, inverse_[q]));
            run_choices.push_back(std::move(choices));
            i += len;
        }
        std::vector<Word> flat{{}};
        for (auto& choices : run_choices) {
            std::vector<Word> next;
            for (auto& prefix : flat)
                for (auto& c : choices) {
                    Word w = prefix;
                    w.insert(w.end(), c.begin(), c.end());
                    next.push_back(std::move(w));
                }
            flat = std::move(next);
        }
        std::vector<std::vector<Word>> out;
        for (auto& spelled : flat) {
            std::vector<Word> path;
            path.reserve(spelled.size() + 1);
            Word cur = a;
            path.push_back(cur);
            for (auto s : spelled) {
                cur = mul(std::move(cur), s);
                path.push_back(cur);
            }
            out.push_back(std::move(path));
        }
        return out;
    }

    // --- naming ----------------------------------------------------------

    std::string format_word(const Word& w) const {
        if (w.empty()) return "e";
        std::string out;
        if (backend_ == GroupBackend::free_group) {
            for (auto s : w) out.push_back(s % 2 == 0 ? static_cast<char>('a' + s / 2) : static_cast<char>('A' + s / 2));
            return out;
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) out.push_back('.');
            int f = gen_factor_[w[i]];
            out.push_back(gen_positive_[w[i]] ? 't' : 'T');
            out += std::to_string(f + 1);
        }
        return out;
    }

    Word parse_word(const std::string& text) const {
        Word w;
        if (text.empty() || text == "e" || text == "id") return w;
        if (backend_ == GroupBackend::free_group) {
            for (char c : text) {
                std::uint8_t s;
                if (c >= 'a' && c < 'a' + rank_) s = static_cast<std::uint8_t>(2 * (c - 'a'));
                else if (c >= 'A' && c < 'A' + rank_) s = static_cast<std::uint8_t>(2 * (c - 'A') + 1);
                else throw std::invalid_argument("unknown generator letter in word: " + text);
                w.push_back(s);
            }
        } else {
            std::size_t i = 0;
            while (i < text.size()) {
                char c = text[i];
                if (c == '.') { ++i; continue; }
                if (c != 't' && c != 'T') throw std::invalid_argument("bad token in word: " + text);
                std::size_t j = i + 1;
                while (j < text.size() && isdigit(static_cast<unsigned char>(text[j]))) ++j;
                if (j == i + 1) throw std::invalid_argument("generator token needs a factor number: " + text);
                int f = std::stoi(text.substr(i + 1, j - i - 1)) - 1;
                if (f < 0 || f >= static_cast<int>(orders_.size()))
                    throw std::invalid_argument("factor index out of range in word: " + text);
                std::uint8_t pos = factor_generator(f);
                if (c == 'T' && orders_[f] == 2)
                    throw std::invalid_argument("order-2 generator is self-inverse; write it lowercase: " + text);
                w.push_back(c == 't' ? pos : static_cast<std::uint8_t>(pos + 1));
                i = j;
            }
        }
        if (!is_normal(w))
            throw std::invalid_argument("word is not in normal form: " + text);
        return w;
    }

    std::string describe() const {
        if (backend_ == GroupBackend::free_group) return "F" + std::to_string(rank_);
        std::string s;
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            if (i) s += "*";
            s += "Z" + std::to_string(orders_[i]);
        }
        return s;
    }

    // Exact growth entropy. Free groups: log(#S - 1). Free products: -log t*
    // for t* the smallest positive zero of 1 - sum_f P_f(t)/(1+P_f(t)), where
    // P_f is the syllable length polynomial of factor f; located by bisection.
    double entropy_exact() const {
        if (backend_ == GroupBackend::free_group)
            return std::log(static_cast<double>(2 * rank_ - 1));
        auto denom = [&](double t) {
            double acc = 1.0;
            for (int m : orders_) {
                double p = syllable_poly(m, t);
                acc -= p / (1.0 + p);
            }
            return acc;
        };
        double lo = 1e-12, hi = 1.0 - 1e-12;
        if (denom(hi) > 0.0)
            throw std::runtime_error("growth series has no pole in (0,1); group too small");
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (denom(mid) > 0.0 ? lo : hi) = mid;
        }
        return -std::log(0.5 * (lo + hi));
    }

    // Sphere counts by syllable-structure recursion; independent of ball BFS.
    std::vector<std::uint64_t> sphere_counts(int n) const {
        std::vector<std::uint64_t> out(static_cast<std::size_t>(n) + 1, 0);
        out[0] = 1;
        if (backend_ == GroupBackend::free_group) {
            for (int m = 1; m <= n; ++m) {
                double v = 2.0 * rank_ * std::pow(2.0 * rank_ - 1.0, m - 1);
                out[m] = static_cast<std::uint64_t>(v + 0.5);
            }
            return out;
        }
        std::size_t nf = orders_.size();
        // count[len][last_factor]
        std::vector<std::vector<std::uint64_t>> cnt(static_cast<std::size_t>(n) + 1,
                                                    std::vector<std::uint64_t>(nf, 0));
        for (int len = 1; len <= n; ++len)
            for (std::size_t f = 0; f < nf; ++f) {
                int m = orders_[f];
                for (int l = 1; 2 * l <= m && l <= len; ++l) {
                    std::uint64_t ways = (2 * l == m) ? 1 : (m == 2 ? 1 : 2);
                    if (m == 2) ways = 1;
                    std::uint64_t prev = 0;
                    if (l == len) prev = 1;
                    else
                        for (std::size_t f2 = 0; f2 < nf; ++f2)
                            if (f2 != f) prev += cnt[len - l][f2];
                    cnt[len][f] += ways * prev;
                }
            }
        for (int len = 1; len <= n; ++len)
            out[len] = std::accumulate(cnt[len].begin(), cnt[len].end(), std::uint64_t{0});
        return out;
    }

    static double cycle_delta(int m) {
        if (m <= 3) return 0.0;
        // Exact slimness constant of the m-cycle: max over triangles and
        // geodesic side choices of the worst vertex-to-other-sides distance.
        auto dist = [m](int a, int b) {
            int d = std::abs(a - b) % m;
            return std::min(d, m - d);
        };
        auto arcs = [&](int a, int b) {
            std::vector<std::vector<int>> out;
            int d = dist(a, b);
            for (int dir : {1, -1}) {
                int len = dir == 1 ? (b - a + m) % m : (a - b + m) % m;
                if (len != d) continue;
                std::vector<int> side;
                for (int t = 0; t <= len; ++t) side.push_back(((a + dir * t) % m + m) % m);
                out.push_back(std::move(side));
                if (d == 0 || 2 * d == m) continue;
                break;
            }
            if (out.empty()) out.push_back({a});
            return out;
        };
        double worst = 0.0;
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b)
                for (int c = b; c < m; ++c) {
                    auto ab = arcs(a, b), bc = arcs(b, c), ca = arcs(c, a);
                    for (auto& s1 : ab)
                        for (auto& s2 : bc)
                            for (auto& s3 : ca) {
                                const std::vector<int>* sides[3] = {&s1, &s2, &s3};
                                for (int k = 0; k < 3; ++k) {
                                    for (int v : *sides[k]) {
                                        int best = m;
                                        for (int o = 0; o < 3; ++o) {
                                            if (o == k) continue;
                                            for (int u : *sides[o]) best = std::min(best, dist(v, u));
                                        }
                                        worst = std::max(worst, static_cast<double>(best));
                                    }
                                }
                            }
                }
        return worst;
    }

private:
    void append_canonical_run(Word& w, int f, int e) const {
        if (e == 0) return;
        int m = orders_[f];
        std::uint8_t pos = factor_generator(f);
        if (2 * e < m) w.insert(w.end(), static_cast<std::size_t>(e), pos);
        else if (2 * e > m) w.insert(w.end(), static_cast<std::size_t>(m - e), static_cast<std::uint8_t>(pos + (m == 2 ? 0 : 1)));
        else w.insert(w.end(), static_cast<std::size_t>(e), pos);  // tie: positive generator
    }

    // Reversal can turn a tie run s^(m/2) into its inverse spelling; rewrite.
    void recanonicalize_ties(Word& w) const {
        std::size_t i = 0;
        while (i < w.size()) {
            std::uint8_t q = w[i];
            std::size_t run = 1;
            while (i + run < w.size() && w[i + run] == q) ++run;
            int f = gen_factor_[q];
            int m = orders_[f];
            if (!gen_positive_[q] && 2 * static_cast<int>(run) == m) {
                std::uint8_t pos = inverse_[q];
                for (std::size_t j = 0; j < run; ++j) w[i + j] = pos;
            }
            i += run;
        }
    }

    static double syllable_poly(int m, double t) {
        // sum over canonical syllable spellings of t^len
        double acc = 0.0;
        for (int l = 1; 2 * l <= m; ++l) {
            double ways = (m == 2 || 2 * l == m) ? 1.0 : 2.0;
            acc += ways * std::pow(t, l);
        }
        return acc;
    }

    GroupBackend backend_ = GroupBackend::free_group;
    int rank_ = 0;
    std::vector<int> orders_;
    int num_gens_ = 0;
    std::vector<std::uint8_t> inverse_;
    std::vector<int> gen_factor_;
    std::vector<std::uint8_t> gen_positive_;
    double delta_ = 0.0;
};

} // namespace hypac
