#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "orient/error.hpp"
#include "orient/kdtree.hpp"
#include "orient/knn_graph.hpp"
#include "orient/normals.hpp"
#include "orient/point_cloud.hpp"
#include "orient/rng.hpp"
#include "orient/segmentation.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct DipoleParams {
    double c = 4.0;      // field exponent constant, > 1; use 2 for noisy inputs
    int passes = 5;      // M randomized greedy passes
    std::uint64_t seed = 0;
    int k_field = 16;    // predecessors kept per greedy step (nearest visited)
    bool exact = false;  // sum over all predecessors instead (O(n^2) oracle mode)

    void validate() const {
        if (c <= 1.0) throw InputError("dipole: c must be > 1");
        if (passes < 1) throw InputError("dipole: passes must be >= 1");
        if (k_field < 1) throw InputError("dipole: k_field must be >= 1");
    }
};

/// Field at p_target generated by an oriented point (p, n):
///   F(p') = -(c r_hat r_hat^T - I) n / |r|^3,  r = p' - p.
inline Vec3 dipole_field(const Vec3& p, const Vec3& n, const Vec3& p_target, double c) {
    const Vec3 r = p_target - p;
    const double len = r.norm();
    if (len < 1e-12) throw Error("dipole_field: coincident points");
    const Vec3 r_hat = r / len;
    return (n - r_hat * (c * dot(r_hat, n))) / (len * len * len);
}

/// e((p,n),(p',n')) = F_{p,n}(p') . n'. Asymmetric in its two arguments.
inline double interaction(const Vec3& p, const Vec3& n, const Vec3& p_target,
                          const Vec3& n_target, double c) {
    return dot(dipole_field(p, n, p_target, c), n_target);
}

/// One randomized greedy sweep over a block: BFS order from a random seed
/// (frontier shuffled per round), each point's flip bit chosen to maximize the
/// field agreement with its already-oriented predecessors.
struct OrientationPass {
    std::vector<int> visit_order;      // global point indices, BFS order
    std::vector<std::uint8_t> flips;   // parallel to block members (sorted)
};

namespace detail {

/// Nearest usable (visited, non-degenerate) predecessors of block-local point
/// `target`, closest first. Grows the kd-tree query until enough usable points
/// fall inside it; `block_pos` indexes match tree indexes.
inline void nearest_visited(const KdTree& tree, const std::vector<Vec3>& block_pos,
                            const std::vector<char>& usable, int target, int want,
                            std::vector<int>& out_local) {
    const int m = static_cast<int>(block_pos.size());
    int kq = std::min(m, std::max(32, want * 3));
    for (;;) {
        auto hits = tree.knn(block_pos[target], kq, target);
        out_local.clear();
        for (const auto& h : hits) {
            if (!usable[h.index]) continue;
            out_local.push_back(h.index);
            if (static_cast<int>(out_local.size()) == want) return;
        }
        if (kq >= m) return;  // scanned the whole block
        kq = std::min(m, kq * 2);
    }
}

}  // namespace detail

inline OrientationPass greedy_pass(const Block& block, const PointCloud& cloud,
                                   const PcaNormals& est, const KnnGraph& graph,
                                   const DipoleParams& params, Rng& rng) {
    params.validate();
    const int m = static_cast<int>(block.members.size());
    OrientationPass pass;
    pass.flips.assign(m, 0);
    pass.visit_order.reserve(m);

    std::vector<int> local_of(cloud.size(), -1);
    for (int l = 0; l < m; ++l) local_of[block.members[l]] = l;

    std::vector<Vec3> block_pos(m);
    for (int l = 0; l < m; ++l) block_pos[l] = cloud.positions[block.members[l]];
    const KdTree tree(block_pos);

    std::vector<char> visited(m, 0);
    std::vector<char> usable(m, 0);  // visited, non-degenerate, field source
    std::vector<double> sign(m, 1.0);
    std::vector<int> visited_usable;  // in visit order, for the exact mode
    std::vector<int> preds;

    auto decide = [&](int l) {
        const int g = block.members[l];
        if (est.degenerate[g]) return;  // handled after the sweep
        double s = 0.0;
        if (params.exact) {
            for (int pl : visited_usable)
                s += interaction(block_pos[pl], est.normals[block.members[pl]] * sign[pl],
                                 block_pos[l], est.normals[g], params.c);
        } else {
            detail::nearest_visited(tree, block_pos, usable, l, params.k_field, preds);
            for (int pl : preds)
                s += interaction(block_pos[pl], est.normals[block.members[pl]] * sign[pl],
                                 block_pos[l], est.normals[g], params.c);
        }
        if (s < 0.0) {
            pass.flips[l] = 1;
            sign[l] = -1.0;
        }
        usable[l] = 1;
        visited_usable.push_back(l);
    };

    // BFS with per-round frontier shuffling. Restarts cover blocks whose
    // induced subgraph is disconnected (robustness; grow_blocks never
    // produces them).
    int assigned = 0;
    int seed_l = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(m)));
    while (assigned < m) {
        if (visited[seed_l]) {
            seed_l = -1;
            for (int l = 0; l < m; ++l)
                if (!visited[l]) {
                    seed_l = l;
                    break;
                }
        }
        std::vector<int> frontier{seed_l};
        visited[seed_l] = 1;
        while (!frontier.empty()) {
            for (int l : frontier) {
                pass.visit_order.push_back(block.members[l]);
                decide(l);
                ++assigned;
            }
            std::vector<int> next;
            for (int l : frontier)
                for (int w : graph.adjacency[block.members[l]]) {
                    const int wl = local_of[w];
                    if (wl >= 0 && !visited[wl]) {
                        visited[wl] = 1;
                        next.push_back(wl);
                    }
                }
            shuffle_vec(next, rng);
            frontier = std::move(next);
        }
    }

    // Degenerate points: zero field contribution above; orient by the single
    // nearest usable neighbor now that the block is swept.
    for (int l = 0; l < m; ++l) {
        const int g = block.members[l];
        if (!est.degenerate[g]) continue;
        detail::nearest_visited(tree, block_pos, usable, l, 1, preds);
        if (preds.empty()) continue;  // fully degenerate block: leave unflipped
        const int pl = preds[0];
        const double e = interaction(block_pos[pl], est.normals[block.members[pl]] * sign[pl],
                                     block_pos[l], est.normals[g], params.c);
        if (e < 0.0) pass.flips[l] = 1;
    }
    return pass;
}

/// Align M passes by exhaustively choosing per-pass global flips (first pass
/// fixed) to maximize pairwise agreement, then majority-vote per point.
/// Ties in the vote keep the aligned first pass's bit.
inline std::vector<std::uint8_t> align_and_vote(const std::vector<OrientationPass>& passes) {
    if (passes.empty()) throw Error("align_and_vote: no passes");
    const int M = static_cast<int>(passes.size());
    const int m = static_cast<int>(passes[0].flips.size());
    for (const auto& p : passes)
        if (static_cast<int>(p.flips.size()) != m)
            throw Error("align_and_vote: pass size mismatch");

    // Pairwise Hamming distances; agreement under alignment g is
    // m - h when g_a == g_b, else h.
    std::vector<std::vector<int>> ham(M, std::vector<int>(M, 0));
    for (int a = 0; a < M; ++a)
        for (int b = a + 1; b < M; ++b) {
            int h = 0;
            for (int i = 0; i < m; ++i) h += passes[a].flips[i] != passes[b].flips[i];
            ham[a][b] = h;
        }

    long long best_score = -1;
    std::uint32_t best_g = 0;
    for (std::uint32_t g = 0; g < (1u << (M - 1)); ++g) {
        const std::uint32_t bits = g << 1;  // bit 0 (first pass) fixed to 0
        long long score = 0;
        for (int a = 0; a < M; ++a)
            for (int b = a + 1; b < M; ++b) {
                const bool same = ((bits >> a) & 1) == ((bits >> b) & 1);
                score += same ? (m - ham[a][b]) : ham[a][b];
            }
        if (score > best_score) {
            best_score = score;
            best_g = bits;
        }
    }

    std::vector<std::uint8_t> vote(m, 0);
    for (int i = 0; i < m; ++i) {
        int ones = 0;
        for (int a = 0; a < M; ++a) ones += passes[a].flips[i] ^ ((best_g >> a) & 1);
        if (2 * ones > M)
            vote[i] = 1;
        else if (2 * ones == M)
            vote[i] = passes[0].flips[i];  // first pass is never globally flipped
    }
    return vote;
}

struct BlockInit {
    std::vector<Vec3> normals;        // oriented, parallel to block members
    std::vector<std::uint8_t> flips;  // applied to the PCA signs
    bool all_degenerate = false;      // no usable geometry; normals unchanged
};

/// Full block initializer: M randomized sweeps, alignment, vote, apply.
inline BlockInit orient_block_initial(const Block& block, const PointCloud& cloud,
                                      const PcaNormals& est, const KnnGraph& graph,
                                      const DipoleParams& params) {
    params.validate();
    const int m = static_cast<int>(block.members.size());

    bool any_usable = false;
    for (int g : block.members)
        if (!est.degenerate[g]) any_usable = true;

    BlockInit out;
    out.normals.resize(m);
    if (!any_usable) {
        out.flips.assign(m, 0);
        out.all_degenerate = true;
        for (int l = 0; l < m; ++l) out.normals[l] = est.normals[block.members[l]];
        return out;
    }

    std::vector<OrientationPass> passes(params.passes);
    for (int a = 0; a < params.passes; ++a) {
        Rng rng = make_rng(mix_seed(params.seed, static_cast<std::uint64_t>(block.id),
                                    static_cast<std::uint64_t>(a)));
        passes[a] = greedy_pass(block, cloud, est, graph, params, rng);
    }
    out.flips = align_and_vote(passes);
    for (int l = 0; l < m; ++l) {
        const Vec3 n = est.normals[block.members[l]];
        out.normals[l] = out.flips[l] ? -n : n;
    }
    return out;
}

}  // namespace orient
