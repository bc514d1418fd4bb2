#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "orient/error.hpp"
#include "orient/vec3.hpp"

namespace orient {

/// Exact-query kd-tree over a fixed set of points. Distance ties are broken
/// by ascending point index, so results are a pure function of the input.
class KdTree {
public:
    struct Hit {
        int index = -1;
        double dist2 = std::numeric_limits<double>::infinity();
    };

    KdTree() = default;

    explicit KdTree(const std::vector<Vec3>& points) : points_(&points) {
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(points.size() / kLeafSize * 2 + 1);
        if (!points.empty()) root_ = build(0, static_cast<int>(points.size()));
    }

    std::size_t size() const { return points_ ? points_->size() : 0; }

    /// k nearest to `query`, nearest first. `exclude` skips one point index
    /// (pass the query's own index when querying cloud points).
    std::vector<Hit> knn(const Vec3& query, int k, int exclude = -1) const {
        std::vector<Hit> heap;  // max-heap on (dist2, index)
        heap.reserve(k);
        if (root_ >= 0 && k > 0) search(root_, query, k, exclude, heap);
        std::sort_heap(heap.begin(), heap.end(), HitWorse{});
        return heap;
    }

    Hit nearest(const Vec3& query, int exclude = -1) const {
        auto hits = knn(query, 1, exclude);
        return hits.empty() ? Hit{} : hits[0];
    }

private:
    static constexpr int kLeafSize = 12;

    struct Node {
        double split = 0.0;
        int axis = -1;       // -1 for leaves
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    struct HitWorse {
        bool operator()(const Hit& a, const Hit& b) const {
            return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
        }
    };

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        if (end - begin <= kLeafSize) {
            nodes_[id].begin = begin;
            nodes_[id].end = end;
            return id;
        }
        Vec3 lo(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (int i = begin; i < end; ++i) {
            const Vec3& p = (*points_)[order_[i]];
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
        int axis = 0;
        double extent = hi[0] - lo[0];
        for (int a = 1; a < 3; ++a) {
            if (hi[a] - lo[a] > extent) {
                extent = hi[a] - lo[a];
                axis = a;
            }
        }
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             const double ca = (*points_)[a][axis], cb = (*points_)[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        const int pivot = order_[mid];
        nodes_[id].axis = axis;
        nodes_[id].split = (*points_)[pivot][axis];
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void consider(const Vec3& query, int k, int exclude, int idx, std::vector<Hit>& heap) const {
        if (idx == exclude) return;
        const Hit cand{idx, squared_distance(query, (*points_)[idx])};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), HitWorse{});
        } else if (HitWorse{}(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), HitWorse{});
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), HitWorse{});
        }
    }

    void search(int node_id, const Vec3& query, int k, int exclude, std::vector<Hit>& heap) const {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i)
                consider(query, k, exclude, order_[i], heap);
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, query, k, exclude, heap);
        if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().dist2)
            search(far, query, k, exclude, heap);
    }

    const std::vector<Vec3>* points_ = nullptr;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace orient
