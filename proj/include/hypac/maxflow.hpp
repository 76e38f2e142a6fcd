#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace hypac {

// Unit-capacity max flow by shortest augmenting paths. Small graphs only:
// windows hold at most a few thousand sites and the flow value is bounded
// by the vertex degree times the terminal contraction.
class FlowNetwork {
public:
    explicit FlowNetwork(std::uint32_t nodes) : head_(nodes, -1) {}

    std::uint32_t size() const { return static_cast<std::uint32_t>(head_.size()); }

    // undirected unit edge: a single residual pair with capacity on both sides
    void add_undirected_edge(std::uint32_t a, std::uint32_t b) {
        edges_.push_back({b, 1, head_[a]});
        head_[a] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({a, 1, head_[b]});
        head_[b] = static_cast<int>(edges_.size()) - 1;
    }

    std::uint64_t max_flow(std::uint32_t s, std::uint32_t t) {
        if (s >= size() || t >= size() || s == t)
            throw std::invalid_argument("bad flow terminals");
        std::uint64_t total = 0;
        while (true) {
            // BFS for a shortest residual path
            std::vector<int> via(size(), -1);
            std::vector<char> seen(size(), 0);
            std::queue<std::uint32_t> q;
            q.push(s);
            seen[s] = 1;
            while (!q.empty() && !seen[t]) {
                std::uint32_t u = q.front();
                q.pop();
                for (int e = head_[u]; e != -1; e = edges_[e].next) {
                    if (edges_[e].cap == 0) continue;
                    std::uint32_t v = edges_[e].to;
                    if (seen[v]) continue;
                    seen[v] = 1;
                    via[v] = e;
                    q.push(v);
                }
            }
            if (!seen[t]) break;
            for (std::uint32_t v = t; v != s;) {
                int e = via[v];
                --edges_[e].cap;
                ++edges_[e ^ 1].cap;
                v = edges_[e ^ 1].to;
            }
            ++total;
        }
        return total;
    }

private:
    struct Arc {
        std::uint32_t to;
        int cap;
        int next;
    };

    std::vector<Arc> edges_;
    std::vector<int> head_;
};

} // namespace hypac
