#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orient/error.hpp"
#include "orient/parallel.hpp"
#include "orient/point_cloud.hpp"
#include "orient/rng.hpp"
#include "orient/segmentation.hpp"

namespace orient {

struct GraphEdge {
    int i = 0, j = 0;          // canonical i < j
    double alpha = 0.0, alpha_bar = 0.0;
};

struct BlockGraph {
    int node_count = 0;
    double epsilon = 1e-6;
    std::vector<GraphEdge> edges;

    void validate() const {
        for (const auto& e : edges) {
            if (e.i < 0 || e.j >= node_count || e.i >= e.j)
                throw Error("block graph: edge endpoints must satisfy 0 <= i < j < N");
            if (e.alpha < 0 || e.alpha_bar < 0)
                throw Error("block graph: negative consistency score");
        }
        if (epsilon <= 0) throw Error("block graph: epsilon must be positive");
    }
};

struct FlipAssignment {
    std::vector<std::uint8_t> bits;
    double objective = 0.0;
};

/// Normalized preference for keeping (same_state) or flipping the
/// pair. Always in [0, 1).
inline double edge_weight(double alpha, double alpha_bar, double epsilon, bool same_state) {
    const double denom = alpha + alpha_bar + epsilon;
    return (same_state ? alpha : alpha_bar) / denom;
}

/// Total consistency: sum of edge weights under the given flip bits.
inline double objective(const BlockGraph& graph, const std::vector<std::uint8_t>& bits) {
    if (static_cast<int>(bits.size()) != graph.node_count)
        throw Error("objective: assignment length mismatch");
    double total = 0.0;
    for (const auto& e : graph.edges)
        total += edge_weight(e.alpha, e.alpha_bar, graph.epsilon, bits[e.i] == bits[e.j]);
    return total;
}

namespace detail {

/// Cut form of the objective: value = sum(w00) + sum over cut edges of
/// delta = w01 - w00. Solvers maximize the cut part.
struct CutProblem {
    int n = 0;
    double base = 0.0;
    std::vector<std::vector<std::pair<int, double>>> adj;  // (neighbor, delta)

    explicit CutProblem(const BlockGraph& g) : n(g.node_count), adj(g.node_count) {
        for (const auto& e : g.edges) {
            const double w00 = edge_weight(e.alpha, e.alpha_bar, g.epsilon, true);
            const double w01 = edge_weight(e.alpha, e.alpha_bar, g.epsilon, false);
            base += w00;
            const double delta = w01 - w00;
            adj[e.i].emplace_back(e.j, delta);
            adj[e.j].emplace_back(e.i, delta);
        }
    }
};

inline std::vector<std::vector<int>> graph_components(const CutProblem& cut) {
    std::vector<int> label(cut.n, -1);
    std::vector<std::vector<int>> comps;
    for (int s = 0; s < cut.n; ++s) {
        if (label[s] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        std::vector<int> stack{s};
        label[s] = id;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            comps[id].push_back(v);
            for (const auto& [u, d] : cut.adj[v])
                if (label[u] < 0) {
                    label[u] = id;
                    stack.push_back(u);
                }
        }
        std::sort(comps[id].begin(), comps[id].end());
    }
    return comps;
}

/// Depth-first branch and bound on one component's nodes (in the given
/// order; order[0] is fixed to 0 by complement symmetry). The bound adds
/// max(delta, 0) for every edge not yet fully assigned.
class BranchBound {
public:
    BranchBound(const CutProblem& cut, const std::vector<int>& order)
        : cut_(cut), order_(order), slot_(cut.n, -1) {
        for (std::size_t s = 0; s < order.size(); ++s) slot_[order[s]] = static_cast<int>(s);
        // optimistic_[s]: sum of positive deltas of edges whose later endpoint
        // is at slot >= s (still undecided when s is the next slot to fill).
        optimistic_.assign(order.size() + 1, 0.0);
        for (std::size_t s = order.size(); s-- > 0;) {
            double here = 0.0;
            const int v = order_[s];
            for (const auto& [u, d] : cut_.adj[v])
                if (slot_[u] >= 0 && slot_[u] < static_cast<int>(s) && d > 0.0) here += d;
            optimistic_[s] = optimistic_[s + 1] + here;
        }
        bits_.assign(order.size(), 0);
        best_bits_ = bits_;
        best_ = -1.0;
        dfs(0, 0.0);
    }

    const std::vector<std::uint8_t>& best_bits() const { return best_bits_; }
    double best_gain() const { return best_; }

private:
    void dfs(std::size_t s, double gain) {
        if (gain + optimistic_[s] <= best_) return;
        if (s == order_.size()) {
            if (gain > best_) {
                best_ = gain;
                best_bits_ = bits_;
            }
            return;
        }
        const int v = order_[s];
        const int choices = s == 0 ? 1 : 2;  // symmetry: first node stays 0
        for (int b = 0; b < choices; ++b) {
            bits_[s] = static_cast<std::uint8_t>(b);
            double g = gain;
            for (const auto& [u, d] : cut_.adj[v]) {
                const int us = slot_[u];
                if (us >= 0 && us < static_cast<int>(s) && bits_[us] != b) g += d;
            }
            dfs(s + 1, g);
        }
    }

    const CutProblem& cut_;
    const std::vector<int>& order_;
    std::vector<int> slot_;
    std::vector<double> optimistic_;
    std::vector<std::uint8_t> bits_;
    std::vector<std::uint8_t> best_bits_;
    double best_;
};

/// Steepest-ascent single-bit-flip walk from the given start bits.
inline void local_search(const CutProblem& cut, std::vector<std::uint8_t>& bits) {
    std::vector<double> gain(cut.n, 0.0);
    auto flip_gain = [&](int v) {
        double g = 0.0;
        for (const auto& [u, d] : cut.adj[v]) g += (bits[v] == bits[u] ? d : -d);
        return g;
    };
    for (int v = 0; v < cut.n; ++v) gain[v] = flip_gain(v);
    for (;;) {
        int best_v = -1;
        double best_g = 1e-12;  // strict improvement only
        for (int v = 0; v < cut.n; ++v)
            if (gain[v] > best_g) {
                best_g = gain[v];
                best_v = v;
            }
        if (best_v < 0) break;
        bits[best_v] = static_cast<std::uint8_t>(1 - bits[best_v]);
        gain[best_v] = -gain[best_v];
        for (const auto& [u, d] : cut.adj[best_v]) gain[u] = flip_gain(u);
    }
}

}  // namespace detail

/// Globally optimal flips by branch and bound; refuses graphs larger than
/// exact_limit nodes. Disconnected components are solved independently.
inline FlipAssignment solve_exact(const BlockGraph& graph, int exact_limit = 28,
                                  std::vector<std::string>* warnings = nullptr) {
    graph.validate();
    if (graph.node_count > exact_limit)
        throw Error("solve_exact: " + std::to_string(graph.node_count) + " nodes exceeds limit " +
                    std::to_string(exact_limit) + "; use solve_heuristic");
    const detail::CutProblem cut(graph);
    const auto comps = detail::graph_components(cut);
    if (comps.size() > 1 && warnings)
        warnings->push_back("block graph has " + std::to_string(comps.size()) +
                            " disconnected components; solved independently");
    FlipAssignment out;
    out.bits.assign(graph.node_count, 0);
    for (const auto& comp : comps) {
        detail::BranchBound bb(cut, comp);
        for (std::size_t s = 0; s < comp.size(); ++s) out.bits[comp[s]] = bb.best_bits()[s];
    }
    out.objective = objective(graph, out.bits);
    return out;
}

/// Multi-start steepest-ascent local search; deterministic for a given seed
/// (restarts run concurrently but are merged in restart order).
inline FlipAssignment solve_heuristic(const BlockGraph& graph, int restarts = 32,
                                      std::uint64_t seed = 0,
                                      std::vector<std::string>* warnings = nullptr) {
    graph.validate();
    if (restarts < 1) throw Error("solve_heuristic: restarts must be >= 1");
    const detail::CutProblem cut(graph);
    if (warnings) {
        const auto comps = detail::graph_components(cut);
        if (comps.size() > 1)
            warnings->push_back("block graph has " + std::to_string(comps.size()) +
                                " disconnected components");
    }

    std::vector<std::vector<std::uint8_t>> cand(restarts);
    std::vector<double> score(restarts);
    parallel_for(restarts, [&](int r) {
        Rng rng = make_rng(mix_seed(seed, 0x9eu, static_cast<std::uint64_t>(r)));
        std::vector<std::uint8_t> bits(graph.node_count);
        if (r == 0) {
            std::fill(bits.begin(), bits.end(), std::uint8_t{0});  // all-keep start
        } else {
            for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
        }
        detail::local_search(cut, bits);
        cand[r] = std::move(bits);
        score[r] = objective(graph, cand[r]);
    });

    int best = 0;
    for (int r = 1; r < restarts; ++r)
        if (score[r] > score[best]) best = r;
    FlipAssignment out;
    out.bits = cand[best];
    out.objective = score[best];
    return out;
}

/// Route to the exact solver when feasible, else the heuristic.
inline FlipAssignment solve_flips(const BlockGraph& graph, int exact_limit = 28, int restarts = 32,
                                  std::uint64_t seed = 0,
                                  std::vector<std::string>* warnings = nullptr) {
    if (graph.node_count <= exact_limit) return solve_exact(graph, exact_limit, warnings);
    return solve_heuristic(graph, restarts, seed, warnings);
}

/// Negate the normals of every point in blocks with o = 1.
inline void apply_flips(PointCloud& cloud, const Segmentation& seg, const FlipAssignment& flips) {
    if (flips.bits.size() != seg.blocks.size()) throw Error("apply_flips: assignment size mismatch");
    if (!cloud.has_normals()) throw Error("apply_flips: cloud has no normals");
    for (std::size_t b = 0; b < seg.blocks.size(); ++b) {
        if (!flips.bits[b]) continue;
        for (int i : seg.blocks[b].members) cloud.normals[i] = -cloud.normals[i];
    }
}

/// Plain-text round-trip: header `N epsilon`, then `i j alpha alpha_bar`.
inline void dump_graph(const std::string& path, const BlockGraph& graph) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("dump_graph: cannot open " + path);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d %.17g\n", graph.node_count, graph.epsilon);
    out << buf;
    for (const auto& e : graph.edges) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g\n", e.i, e.j, e.alpha, e.alpha_bar);
        out << buf;
    }
    if (!out) throw Error("dump_graph: write failed for " + path);
}

inline BlockGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("load_graph: cannot open " + path);
    BlockGraph graph;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw InputError(path + ": empty graph file");
    ++line_no;
    {
        std::istringstream ls(line);
        if (!(ls >> graph.node_count >> graph.epsilon))
            throw InputError(path + ":1: malformed header (want `N epsilon`)");
    }
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        GraphEdge e;
        if (!(ls >> e.i >> e.j >> e.alpha >> e.alpha_bar)) {
            std::string head;
            std::istringstream(line) >> head;
            if (head.empty() || head[0] == '#') continue;
            throw InputError(path + ":" + std::to_string(line_no) + ": malformed edge line");
        }
        graph.edges.push_back(e);
    }
    graph.validate();
    return graph;
}

}  // namespace orient
