#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "orient/error.hpp"
#include "orient/kdtree.hpp"
#include "orient/point_cloud.hpp"
#include "orient/raster.hpp"
#include "orient/segmentation.hpp"
#include "orient/vec3.hpp"

namespace orient {

/// Oriented-disc representation of a block: radius per point is 1.5x the
/// nearest-neighbor distance (capped at 5x the block mean) so coverage tracks
/// local sampling density.
inline RenderGeometry make_splats(const std::vector<Vec3>& positions,
                                  const std::vector<Vec3>& normals, double radius_factor = 1.5) {
    if (positions.size() != normals.size()) throw Error("make_splats: size mismatch");
    RenderGeometry geom;
    geom.splat_centers = positions;
    geom.splat_normals = normals;
    geom.splat_radii.assign(positions.size(), 0.0);
    if (positions.size() < 2) return geom;
    const KdTree tree(positions);
    double mean = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        geom.splat_radii[i] = std::sqrt(tree.nearest(positions[i], static_cast<int>(i)).dist2);
        mean += geom.splat_radii[i];
    }
    mean /= static_cast<double>(positions.size());
    for (double& r : geom.splat_radii) r = radius_factor * std::min(r, 5.0 * mean);
    return geom;
}

/// 12 viewpoints at the face centers of a regular dodecahedron around the
/// union (equivalently, icosahedron vertex directions), at 3x the union's
/// bounding radius, all looking at the union centroid.
inline std::vector<ViewConfig> dodecahedron_views(const std::vector<Vec3>& union_positions,
                                                  int resolution = 400) {
    if (union_positions.empty()) throw Error("dodecahedron_views: empty union");
    Vec3 centroid(0, 0, 0);
    for (const Vec3& p : union_positions) centroid += p;
    centroid /= static_cast<double>(union_positions.size());
    double r2 = 0.0;
    for (const Vec3& p : union_positions) r2 = std::max(r2, squared_distance(p, centroid));
    const double radius = std::sqrt(r2);
    if (radius < 1e-12) throw Error("dodecahedron_views: degenerate (coincident) union");

    const double phi = 1.6180339887498948482;
    const double dirs[12][3] = {
        {0, 1, phi},  {0, 1, -phi},  {0, -1, phi},  {0, -1, -phi},
        {1, phi, 0},  {1, -phi, 0},  {-1, phi, 0},  {-1, -phi, 0},
        {phi, 0, 1},  {-phi, 0, 1},  {phi, 0, -1},  {-phi, 0, -1},
    };
    std::vector<ViewConfig> views(12);
    for (int i = 0; i < 12; ++i) {
        const Vec3 d = Vec3(dirs[i][0], dirs[i][1], dirs[i][2]).normalized();
        views[i].viewpoint = centroid + d * (3.0 * radius);
        views[i].view_dir = -d;
        views[i].resolution = resolution;
    }
    return views;
}

inline std::vector<ViewConfig> dodecahedron_views(const Block& b1, const Block& b2,
                                                  const PointCloud& cloud, int resolution = 400) {
    std::vector<Vec3> pts;
    pts.reserve(b1.members.size() + b2.members.size());
    for (int i : b1.members) pts.push_back(cloud.positions[i]);
    for (int i : b2.members) pts.push_back(cloud.positions[i]);
    return dodecahedron_views(pts, resolution);
}

struct PixelRegion {
    std::vector<int> pixels;  // sorted buffer indices
};

struct SubRegion {
    std::vector<int> pixels;       // sorted buffer indices
    long long c1 = 0, c2 = 0, cb = 0;
    int sign = 0;
};

/// Flood fill over tagged pixels: 4-neighbors join when their depths differ by
/// at most eta. Regions appear in scan order of their first pixel.
inline std::vector<PixelRegion> connected_regions(const RasterBuffer& buf, double eta) {
    const int res = buf.resolution;
    std::vector<int> label(buf.tag.size(), -1);
    std::vector<PixelRegion> regions;
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(buf.tag.size()); ++start) {
        if (buf.tag[start] < 0 || label[start] >= 0) continue;
        const int id = static_cast<int>(regions.size());
        regions.emplace_back();
        stack.push_back(start);
        label[start] = id;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            regions[id].pixels.push_back(i);
            const int x = i % res, y = i / res;
            const int nbs[4] = {x > 0 ? i - 1 : -1, x + 1 < res ? i + 1 : -1,
                                y > 0 ? i - res : -1, y + 1 < res ? i + res : -1};
            for (int j : nbs) {
                if (j < 0 || buf.tag[j] < 0 || label[j] >= 0) continue;
                if (std::abs(buf.depth[i] - buf.depth[j]) <= eta) {
                    label[j] = id;
                    stack.push_back(j);
                }
            }
        }
        std::sort(regions[id].pixels.begin(), regions[id].pixels.end());
    }
    return regions;
}

/// Partition one region into maximal 4-connected same-sign components and
/// count each component's per-block and boundary pixels.
inline std::vector<SubRegion> split_view_aligned(const PixelRegion& region,
                                                 const RasterBuffer& buf) {
    const int res = buf.resolution;
    std::vector<SubRegion> subs;
    if (region.pixels.empty()) return subs;
    auto in_region = [&](int j) {
        return std::binary_search(region.pixels.begin(), region.pixels.end(), j);
    };
    std::vector<char> done(region.pixels.size(), 0);
    auto slot = [&](int j) {
        return static_cast<int>(std::lower_bound(region.pixels.begin(), region.pixels.end(), j) -
                                region.pixels.begin());
    };
    std::vector<int> stack;
    for (std::size_t s = 0; s < region.pixels.size(); ++s) {
        if (done[s]) continue;
        SubRegion sub;
        sub.sign = buf.sign[region.pixels[s]];
        stack.push_back(region.pixels[s]);
        done[s] = 1;
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            sub.pixels.push_back(i);
            if (buf.tag[i] == 0) ++sub.c1;
            if (buf.tag[i] == 1) ++sub.c2;
            if (buf.boundary[i]) ++sub.cb;
            const int x = i % res, y = i / res;
            const int nbs[4] = {x > 0 ? i - 1 : -1, x + 1 < res ? i + 1 : -1,
                                y > 0 ? i - res : -1, y + 1 < res ? i + res : -1};
            for (int j : nbs) {
                if (j < 0 || buf.sign[j] != sub.sign || !in_region(j)) continue;
                const int js = slot(j);
                if (done[js]) continue;
                done[js] = 1;
                stack.push_back(j);
            }
        }
        std::sort(sub.pixels.begin(), sub.pixels.end());
        subs.push_back(std::move(sub));
    }
    return subs;
}

/// I = C_B * C1 * C2: adjacency strength of one view-aligned sub-region.
/// Counts stay below 2^53, so the double product is exact.
inline double subregion_score(const SubRegion& s) {
    return static_cast<double>(s.cb) * static_cast<double>(s.c1) * static_cast<double>(s.c2);
}

struct ConsistencyScores {
    double alpha = 0.0;      // as-oriented configuration
    double alpha_bar = 0.0;  // with the second block flipped
};

/// Aggregate view-alignment over the 12 dodecahedral views. alpha_bar reuses
/// the same rasters with the second block's signs negated, so negating that
/// block's normals in the input swaps (alpha, alpha_bar) exactly.
inline ConsistencyScores pair_consistency(const RenderGeometry& g1, const RenderGeometry& g2,
                                          int resolution = 400, bool cull_partial = true) {
    std::vector<Vec3> union_pts;
    auto add = [&](const RenderGeometry& g) {
        if (g.is_mesh())
            union_pts.insert(union_pts.end(), g.mesh.vertices.begin(), g.mesh.vertices.end());
        else
            union_pts.insert(union_pts.end(), g.splat_centers.begin(), g.splat_centers.end());
    };
    add(g1);
    add(g2);
    const auto views = dodecahedron_views(union_pts, resolution);

    ConsistencyScores scores;
    for (const auto& view : views) {
        RasterBuffer buf = rasterize_pair(g1, g2, view, cull_partial);
        double eta = compute_eta(g1, g2, view);
        // A sheet exactly parallel to the image plane has zero span but its
        // stored depths still carry round-off; floor eta so such a sheet
        // cannot shatter into per-pixel regions.
        double zmax = 0.0;
        for (std::size_t i = 0; i < buf.tag.size(); ++i)
            if (buf.tag[i] >= 0) zmax = std::max(zmax, buf.depth[i]);
        eta = std::max(eta, 1e-11 * zmax);
        const auto regions = connected_regions(buf, eta);
        for (const auto& region : regions)
            for (const auto& sub : split_view_aligned(region, buf))
                scores.alpha += subregion_score(sub);
        for (std::size_t i = 0; i < buf.sign.size(); ++i)
            if (buf.tag[i] == 1) buf.sign[i] = static_cast<std::int8_t>(-buf.sign[i]);
        for (const auto& region : regions)
            for (const auto& sub : split_view_aligned(region, buf))
                scores.alpha_bar += subregion_score(sub);
    }
    return scores;
}

}  // namespace orient
