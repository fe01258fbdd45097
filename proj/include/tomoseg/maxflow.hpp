#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <type_traits>
#include <vector>

namespace tomoseg {

/// Dinic max-flow over an explicit residual graph.
///
/// Cap may be integral (exact) or floating point; for floating capacities a
/// residual at or below `tolerance` counts as saturated.
template <typename Cap>
class MaxFlow {
    static_assert(std::is_arithmetic_v<Cap>);

public:
    explicit MaxFlow(int nodes, Cap tolerance = Cap{0})
        : head_(static_cast<std::size_t>(nodes), -1), tolerance_(tolerance) {}

    int nodes() const { return static_cast<int>(head_.size()); }

    /// Adds u->v with capacity `cap` and v->u with `reverse_cap`.
    void add_edge(int u, int v, Cap cap, Cap reverse_cap = Cap{0}) {
        arcs_.push_back({v, head_[u], cap});
        head_[u] = static_cast<int>(arcs_.size()) - 1;
        arcs_.push_back({u, head_[v], reverse_cap});
        head_[v] = static_cast<int>(arcs_.size()) - 1;
    }

    Cap solve(int source, int sink) {
        Cap total{0};
        while (build_levels(source, sink)) {
            next_ = head_;
            for (;;) {
                const Cap pushed = augment(source, sink, std::numeric_limits<Cap>::max());
                if (!(pushed > tolerance_)) break;
                total += pushed;
            }
        }
        mark_source_side(source);
        return total;
    }

    /// True if v is reachable from the source in the final residual graph.
    bool source_side(int v) const { return reached_[v] != 0; }

private:
    struct Arc {
        int to;
        int next;
        Cap residual;
    };

    bool open(const Arc& a) const { return a.residual > tolerance_; }

    bool build_levels(int source, int sink) {
        level_.assign(head_.size(), -1);
        std::queue<int> q;
        level_[source] = 0;
        q.push(source);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int e = head_[u]; e != -1; e = arcs_[e].next) {
                const Arc& a = arcs_[e];
                if (open(a) && level_[a.to] < 0) {
                    level_[a.to] = level_[u] + 1;
                    q.push(a.to);
                }
            }
        }
        return level_[sink] >= 0;
    }

    // Iterative blocking-flow DFS along the level graph.
    Cap augment(int source, int sink, Cap limit) {
        std::vector<int> path;  // arc indices
        int u = source;
        for (;;) {
            if (u == sink) {
                Cap f = limit;
                for (int e : path) f = std::min(f, arcs_[e].residual);
                for (int e : path) {
                    arcs_[e].residual -= f;
                    arcs_[e ^ 1].residual += f;
                }
                return f;
            }
            int& e = next_[u];
            while (e != -1 && !(open(arcs_[e]) && level_[arcs_[e].to] == level_[u] + 1)) e = arcs_[e].next;
            if (e == -1) {
                if (path.empty()) return Cap{0};
                level_[u] = -1;  // dead end
                const int back = path.back();
                path.pop_back();
                u = arcs_[back ^ 1].to;
                next_[u] = arcs_[next_[u]].next;
                continue;
            }
            path.push_back(e);
            u = arcs_[e].to;
        }
    }

    void mark_source_side(int source) {
        reached_.assign(head_.size(), 0);
        std::vector<int> stack{source};
        reached_[source] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int e = head_[u]; e != -1; e = arcs_[e].next) {
                const Arc& a = arcs_[e];
                if (open(a) && !reached_[a.to]) {
                    reached_[a.to] = 1;
                    stack.push_back(a.to);
                }
            }
        }
    }

    std::vector<int> head_;
    std::vector<Arc> arcs_;
    std::vector<int> level_;
    std::vector<int> next_;
    std::vector<char> reached_;
    Cap tolerance_;
};

}  // namespace tomoseg
