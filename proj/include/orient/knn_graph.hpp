#pragma once

#include <algorithm>
#include <vector>

#include "orient/error.hpp"
#include "orient/kdtree.hpp"
#include "orient/parallel.hpp"
#include "orient/point_cloud.hpp"

namespace orient {

/// kNN graph over a point cloud. With mutual=true only edges where each
/// endpoint lists the other among its k nearest are kept, which makes the
/// adjacency symmetric.
struct KnnGraph {
    int k = 10;
    bool mutual = true;
    std::vector<std::vector<int>> adjacency;

    std::size_t size() const { return adjacency.size(); }

    bool has_edge(int i, int j) const {
        const auto& nb = adjacency[i];
        return std::binary_search(nb.begin(), nb.end(), j);
    }
};

inline KnnGraph build_knn_graph(const PointCloud& cloud, int k = 10, bool mutual = true) {
    const int n = static_cast<int>(cloud.size());
    if (n == 0) throw InputError("build_knn_graph: empty cloud");
    if (k < 1) throw InputError("build_knn_graph: k must be >= 1");
    if (k >= n) throw InputError("build_knn_graph: k >= point count (degenerate input)");

    KdTree tree(cloud.positions);
    std::vector<std::vector<int>> raw(n);
    parallel_for(n, [&](int i) {
        auto hits = tree.knn(cloud.positions[i], k, i);
        raw[i].reserve(hits.size());
        for (const auto& h : hits) raw[i].push_back(h.index);
    });

    KnnGraph graph;
    graph.k = k;
    graph.mutual = mutual;
    graph.adjacency.resize(n);
    if (mutual) {
        // Sort copies for membership tests, then keep reciprocated edges only.
        std::vector<std::vector<int>> sorted = raw;
        for (auto& nb : sorted) std::sort(nb.begin(), nb.end());
        parallel_for(n, [&](int i) {
            for (int j : raw[i])
                if (std::binary_search(sorted[j].begin(), sorted[j].end(), i))
                    graph.adjacency[i].push_back(j);
            std::sort(graph.adjacency[i].begin(), graph.adjacency[i].end());
        });
    } else {
        graph.adjacency = std::move(raw);
        for (auto& nb : graph.adjacency) std::sort(nb.begin(), nb.end());
    }
    return graph;
}

/// Maximal connected vertex sets, largest first. Ties in size break toward
/// the component containing the smaller minimum vertex index.
inline std::vector<std::vector<int>> connected_components(const KnnGraph& graph) {
    const int n = static_cast<int>(graph.size());
    std::vector<int> label(n, -1);
    std::vector<std::vector<int>> comps;
    std::vector<int> stack;
    for (int seed = 0; seed < n; ++seed) {
        if (label[seed] >= 0) continue;
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        stack.push_back(seed);
        label[seed] = id;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            comps[id].push_back(v);
            for (int w : graph.adjacency[v]) {
                if (label[w] < 0) {
                    label[w] = id;
                    stack.push_back(w);
                }
            }
        }
        std::sort(comps[id].begin(), comps[id].end());
    }
    std::stable_sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        return a.size() > b.size();
    });
    return comps;
}

}  // namespace orient
