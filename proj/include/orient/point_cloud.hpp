#pragma once

#include <vector>

#include "orient/error.hpp"
#include "orient/vec3.hpp"

namespace orient {

/// Input cloud. `normals` is the working (estimated/oriented) field,
/// `gt_normals` the ground truth used only for evaluation.
struct PointCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;      // empty or same length as positions
    std::vector<Vec3> gt_normals;   // empty or same length as positions

    std::size_t size() const { return positions.size(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_gt_normals() const { return !gt_normals.empty(); }

    void validate() const {
        if (positions.empty()) throw InputError("point cloud is empty");
        if (!normals.empty() && normals.size() != positions.size())
            throw InputError("normals count does not match positions count");
        if (!gt_normals.empty() && gt_normals.size() != positions.size())
            throw InputError("gt_normals count does not match positions count");
    }

    /// Keeps only the listed points, in the given order.
    PointCloud subset(const std::vector<int>& indices) const {
        PointCloud out;
        out.positions.reserve(indices.size());
        for (int i : indices) out.positions.push_back(positions[i]);
        if (!normals.empty()) {
            out.normals.reserve(indices.size());
            for (int i : indices) out.normals.push_back(normals[i]);
        }
        if (!gt_normals.empty()) {
            out.gt_normals.reserve(indices.size());
            for (int i : indices) out.gt_normals.push_back(gt_normals[i]);
        }
        return out;
    }
};

}  // namespace orient
