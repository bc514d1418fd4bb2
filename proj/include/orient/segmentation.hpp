#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "orient/error.hpp"
#include "orient/knn_graph.hpp"
#include "orient/point_cloud.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct Block {
    int id = 0;
    std::vector<int> members;  // sorted point indices
};

struct Segmentation {
    std::vector<Block> blocks;
    int target_count = 200;

    std::size_t size() const { return blocks.size(); }

    /// Per-point block id (-1 only if a point is uncovered, which validate rejects).
    std::vector<int> labels(std::size_t point_count) const {
        std::vector<int> lab(point_count, -1);
        for (const auto& b : blocks)
            for (int i : b.members) lab[i] = b.id;
        return lab;
    }

    void validate(std::size_t point_count) const {
        std::vector<char> seen(point_count, 0);
        for (const auto& b : blocks) {
            if (b.members.empty()) throw Error("segmentation: empty block " + std::to_string(b.id));
            for (int i : b.members) {
                if (i < 0 || static_cast<std::size_t>(i) >= point_count || seen[i])
                    throw Error("segmentation: bad or duplicate point index");
                seen[i] = 1;
            }
        }
        for (std::size_t i = 0; i < point_count; ++i)
            if (!seen[i]) throw Error("segmentation: point " + std::to_string(i) + " uncovered");
    }
};

namespace detail {

inline void kd_split(const std::vector<Vec3>& pos, std::vector<int>& idx, int begin, int end,
                     int parts, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        out.emplace_back(idx.begin() + begin, idx.begin() + end);
        std::sort(out.back().begin(), out.back().end());
        return;
    }
    Vec3 lo(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = begin; i < end; ++i) {
        const Vec3& p = pos[idx[i]];
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    int axis = 0;
    for (int a = 1; a < 3; ++a)
        if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;

    // Split point counts proportionally to the target part counts so leaf
    // sizes end up within one of each other (the median when parts is even).
    const int left_parts = parts / 2;
    const long long count = end - begin;
    const int mid = begin + static_cast<int>(count * left_parts / parts);
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                     [&](int a, int b) {
                         const double ca = pos[a][axis], cb = pos[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    kd_split(pos, idx, begin, mid, left_parts, out);
    kd_split(pos, idx, mid, end, parts - left_parts, out);
}

}  // namespace detail

/// Recursive axis-aligned median partition into `target_count` spatial subsets.
/// Subsets are balanced (sizes differ by at most one) but not necessarily
/// connected; grow_blocks repairs connectivity.
inline std::vector<std::vector<int>> kd_partition(const PointCloud& cloud, int target_count) {
    const int n = static_cast<int>(cloud.size());
    if (target_count < 1) throw InputError("kd_partition: target_count must be >= 1");
    if (target_count > n) throw InputError("kd_partition: more blocks than points");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::vector<int>> out;
    out.reserve(target_count);
    detail::kd_split(cloud.positions, idx, 0, n, target_count, out);
    return out;
}

/// Simultaneous BFS over the kNN graph from one seed per subset (the member
/// nearest the subset centroid). Fronts advance in synchronized rounds; when
/// two fronts reach a point in the same round the lower block id wins, so the
/// result is independent of scheduling. Subsets whose seed territory is fully
/// claimed by earlier fronts produce no block.
inline Segmentation grow_blocks(const PointCloud& cloud, const std::vector<std::vector<int>>& subsets,
                                const KnnGraph& graph) {
    const int n = static_cast<int>(cloud.size());
    const auto comps = connected_components(graph);
    if (comps.size() != 1) {
        std::string sizes;
        for (std::size_t i = 0; i < comps.size() && i < 8; ++i)
            sizes += (i ? ", " : "") + std::to_string(comps[i].size());
        if (comps.size() > 8) sizes += ", ...";
        throw InputError("grow_blocks: cloud is not connected under the kNN graph (component sizes: " +
                         sizes + ")");
    }

    std::vector<int> seeds;
    seeds.reserve(subsets.size());
    for (const auto& subset : subsets) {
        if (subset.empty()) throw InputError("grow_blocks: empty subset");
        Vec3 centroid(0, 0, 0);
        for (int i : subset) centroid += cloud.positions[i];
        centroid /= static_cast<double>(subset.size());
        int best = subset[0];
        double best_d2 = squared_distance(cloud.positions[best], centroid);
        for (int i : subset) {
            const double d2 = squared_distance(cloud.positions[i], centroid);
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
                best = i;
                best_d2 = d2;
            }
        }
        seeds.push_back(best);
    }

    const int nb = static_cast<int>(seeds.size());
    std::vector<int> label(n, -1);
    std::vector<std::vector<int>> fronts(nb);
    for (int b = 0; b < nb; ++b) {
        // Distinct subsets share no members, so seeds never collide.
        label[seeds[b]] = b;
        fronts[b].push_back(seeds[b]);
    }

    std::vector<int> claim(n, -1);
    std::vector<int> touched;
    bool active = true;
    while (active) {
        active = false;
        touched.clear();
        for (int b = 0; b < nb; ++b) {
            for (int v : fronts[b]) {
                for (int w : graph.adjacency[v]) {
                    if (label[w] >= 0) continue;
                    if (claim[w] < 0) {
                        claim[w] = b;
                        touched.push_back(w);
                    } else if (b < claim[w]) {
                        claim[w] = b;
                    }
                }
            }
        }
        for (int b = 0; b < nb; ++b) fronts[b].clear();
        for (int w : touched) {
            label[w] = claim[w];
            fronts[claim[w]].push_back(w);
            claim[w] = -1;
            active = true;
        }
    }

    Segmentation seg;
    seg.target_count = nb;
    std::vector<std::vector<int>> members(nb);
    for (int i = 0; i < n; ++i) members[label[i]].push_back(i);
    for (int b = 0; b < nb; ++b) {
        if (members[b].empty()) continue;  // starved by earlier fronts
        Block blk;
        blk.id = static_cast<int>(seg.blocks.size());
        blk.members = std::move(members[b]);
        seg.blocks.push_back(std::move(blk));
    }
    seg.validate(cloud.size());
    return seg;
}

/// Undirected block pairs joined by at least one cross-block kNN edge,
/// as (i, j) with i < j, sorted.
inline std::vector<std::pair<int, int>> block_adjacency(const Segmentation& seg, const KnnGraph& graph) {
    const auto labels = seg.labels(graph.size());
    std::vector<std::pair<int, int>> edges;
    for (std::size_t v = 0; v < graph.size(); ++v) {
        for (int w : graph.adjacency[v]) {
            const int a = labels[v], b = labels[w];
            if (a < b) edges.emplace_back(a, b);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace orient
