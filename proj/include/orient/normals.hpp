#pragma once

#include <vector>

#include "orient/error.hpp"
#include "orient/kdtree.hpp"
#include "orient/parallel.hpp"
#include "orient/point_cloud.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct PcaNormals {
    std::vector<Vec3> normals;        // unit vectors, sign arbitrary
    std::vector<bool> degenerate;     // rank-deficient neighborhood (e.g. collinear)
};

/// Unsigned normal estimation: smallest-eigenvalue direction of the covariance
/// of each point's k nearest neighbors. Neighborhoods whose covariance has a
/// (near-)zero second eigenvalue carry no plane information; those points get
/// a deterministic vector orthogonal to the dominant direction and are flagged.
inline PcaNormals pca_normals(const PointCloud& cloud, int k = 10) {
    const int n = static_cast<int>(cloud.size());
    if (k < 3) throw InputError("pca_normals: k must be >= 3");
    if (k >= n) throw InputError("pca_normals: k >= point count (degenerate input)");

    KdTree tree(cloud.positions);
    PcaNormals out;
    out.normals.resize(n);
    out.degenerate.assign(n, false);

    parallel_for(n, [&](int i) {
        auto hits = tree.knn(cloud.positions[i], k, i);
        Vec3 mean(0, 0, 0);
        for (const auto& h : hits) mean += cloud.positions[h.index];
        mean /= static_cast<double>(hits.size());

        SymMat3 cov;
        for (const auto& h : hits) {
            const Vec3 d = cloud.positions[h.index] - mean;
            cov.xx += d.x * d.x;
            cov.xy += d.x * d.y;
            cov.xz += d.x * d.z;
            cov.yy += d.y * d.y;
            cov.yz += d.y * d.z;
            cov.zz += d.z * d.z;
        }

        const EigenSym3 eig = eigen_sym3(cov);
        // eigenvalues descending: [0] dominant spread, [2] normal direction
        const double scale = eig.values[0];
        const double rel = scale > 0.0 ? eig.values[1] / scale : 0.0;
        if (scale <= 0.0 || rel < 1e-12) {
            // Collinear (or coincident) neighborhood: no plane to speak of.
            out.degenerate[i] = true;
            out.normals[i] = scale > 0.0 ? any_orthogonal(eig.vectors[0]) : Vec3(0, 0, 1);
        } else {
            out.normals[i] = eig.vectors[2];
        }
    });
    return out;
}

}  // namespace orient
