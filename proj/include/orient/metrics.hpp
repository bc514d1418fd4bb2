#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "orient/error.hpp"
#include "orient/kdtree.hpp"
#include "orient/parallel.hpp"
#include "orient/segmentation.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct OrientationReport {
    double incorrect_ratio = 0.0;           // percent, capped at 50
    bool flipped_gt = false;                // GT negated because >50% disagreed
    std::vector<double> per_block_ratio;    // percent, [0, 100], when seg given
    double chamfer = -1.0;                  // < 0 when not computed
    std::vector<std::uint8_t> correct;      // per-point labels (post flip rule)
};

/// A prediction is correct iff pred . gt > 0 (ties count
/// incorrect); if more than half the points disagree, the ground truth is
/// globally negated first; the reported ratio is capped at 50%.
inline OrientationReport incorrect_ratio(const std::vector<Vec3>& pred,
                                         const std::vector<Vec3>& gt,
                                         const Segmentation* seg = nullptr) {
    if (pred.size() != gt.size() || pred.empty())
        throw InputError("incorrect_ratio: length mismatch or empty input");
    const std::size_t n = pred.size();

    OrientationReport report;
    std::size_t incorrect = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (dot(pred[i], gt[i]) <= 0.0) ++incorrect;
    double gt_sign = 1.0;
    if (2 * incorrect > n) {
        report.flipped_gt = true;
        gt_sign = -1.0;
        incorrect = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (dot(pred[i], gt[i]) * gt_sign <= 0.0) ++incorrect;
    }
    report.correct.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        report.correct[i] = dot(pred[i], gt[i]) * gt_sign > 0.0 ? 1 : 0;
    report.incorrect_ratio =
        std::min(50.0, 100.0 * static_cast<double>(incorrect) / static_cast<double>(n));

    if (seg) {
        report.per_block_ratio.resize(seg->blocks.size(), 0.0);
        for (std::size_t b = 0; b < seg->blocks.size(); ++b) {
            std::size_t bad = 0;
            for (int i : seg->blocks[b].members)
                if (!report.correct[i]) ++bad;
            report.per_block_ratio[b] =
                100.0 * static_cast<double>(bad) / static_cast<double>(seg->blocks[b].members.size());
        }
    }
    return report;
}

/// Symmetric Chamfer distance: half the sum of the two directed mean
/// nearest-neighbor distances.
inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw InputError("chamfer: empty point set");
    auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        const KdTree tree(to);
        const int n = static_cast<int>(from.size());
        std::vector<double> d(n);
        parallel_for(n, [&](int i) { d[i] = std::sqrt(tree.nearest(from[i]).dist2); });
        double sum = 0.0;
        for (double v : d) sum += v;
        return sum / n;
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

}  // namespace orient
