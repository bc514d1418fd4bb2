#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orient/error.hpp"
#include "orient/mesh.hpp"
#include "orient/point_cloud.hpp"
#include "orient/rng.hpp"
#include "orient/vec3.hpp"

namespace orient {

/// Height-field quadric z = (k1 x^2 + k2 y^2) / 2 sampled on a regular grid
/// over [-extent, extent]^2. k1*k2 > 0: elliptic paraboloid; < 0: hyperbolic
/// paraboloid; one zero: parabolic cylinder; both zero: plane.
struct QuadricSpec {
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double extent = 1.0;
    double spacing = 0.02;

    void validate() const {
        if (spacing <= 0) throw InputError("quadric: spacing must be positive");
        if (extent <= 0) throw InputError("quadric: extent must be positive");
    }
};

namespace detail {

inline int grid_count(double extent, double spacing) {
    return static_cast<int>(std::floor(2.0 * extent / spacing + 1e-9)) + 1;
}

/// Samples height(x, y) with analytic gradient; normal = (-zx, -zy, 1)/norm.
template <typename Height, typename Gradient>
PointCloud grid_cloud(double extent, double sweep_extent, double spacing, Height&& height,
                      Gradient&& gradient) {
    const int nx = grid_count(extent, spacing);
    const int ny = grid_count(sweep_extent, spacing);
    const double x0 = -0.5 * spacing * (nx - 1);
    const double y0 = -0.5 * spacing * (ny - 1);
    PointCloud cloud;
    cloud.positions.reserve(static_cast<std::size_t>(nx) * ny);
    cloud.gt_normals.reserve(cloud.positions.capacity());
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = x0 + i * spacing, y = y0 + j * spacing;
            cloud.positions.emplace_back(x, y, height(x, y));
            const auto [zx, zy] = gradient(x, y);
            cloud.gt_normals.push_back(Vec3(-zx, -zy, 1.0).normalized());
        }
    cloud.normals = cloud.gt_normals;
    return cloud;
}

/// Grid triangulation of the same samples; winding keeps face normals on the
/// +z (analytic) side.
template <typename Height>
TriangleMesh grid_mesh(double extent, double sweep_extent, double spacing, Height&& height) {
    const int nx = grid_count(extent, spacing);
    const int ny = grid_count(sweep_extent, spacing);
    const double x0 = -0.5 * spacing * (nx - 1);
    const double y0 = -0.5 * spacing * (ny - 1);
    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = x0 + i * spacing, y = y0 + j * spacing;
            mesh.vertices.emplace_back(x, y, height(x, y));
        }
    auto at = [nx](int i, int j) { return j * nx + i; };
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            mesh.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            mesh.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    mesh.compute_face_data();
    return mesh;
}

}  // namespace detail

inline PointCloud sample_quadric(const QuadricSpec& spec) {
    spec.validate();
    return detail::grid_cloud(
        spec.extent, spec.extent, spec.spacing,
        [&](double x, double y) { return 0.5 * (spec.kappa1 * x * x + spec.kappa2 * y * y); },
        [&](double x, double y) { return std::pair{spec.kappa1 * x, spec.kappa2 * y}; });
}

inline TriangleMesh quadric_mesh(const QuadricSpec& spec) {
    spec.validate();
    return detail::grid_mesh(spec.extent, spec.extent, spec.spacing, [&](double x, double y) {
        return 0.5 * (spec.kappa1 * x * x + spec.kappa2 * y * y);
    });
}

/// Cylindrical surface swept from the planar cubic z = amplitude * x^3 along
/// y; the y axis is a line of flat umbilics (the S-curve's inflection).
struct SCylinderSpec {
    double amplitude = 0.4;
    double extent = 1.0;   // x half-range of the profile curve
    double sweep = 1.0;    // y half-range of the sweep
    double spacing = 0.02;

    void validate() const {
        if (spacing <= 0) throw InputError("s_cylinder: spacing must be positive");
        if (extent <= 0 || sweep < 0) throw InputError("s_cylinder: bad extents");
    }
};

inline PointCloud sample_s_cylinder(const SCylinderSpec& spec) {
    spec.validate();
    return detail::grid_cloud(
        spec.extent, spec.sweep, spec.spacing,
        [&](double x, double) { return spec.amplitude * x * x * x; },
        [&](double x, double) { return std::pair{3.0 * spec.amplitude * x * x, 0.0}; });
}

inline TriangleMesh s_cylinder_mesh(const SCylinderSpec& spec) {
    spec.validate();
    return detail::grid_mesh(spec.extent, spec.sweep, spec.spacing,
                             [&](double x, double) { return spec.amplitude * x * x * x; });
}

/// Rectangular patch: origin + a*u + b*v for a, b in [0,1), constant normal.
struct PatchSpec {
    std::string name;
    Vec3 origin;
    Vec3 u, v;     // full edge vectors
    Vec3 normal;   // unit ground truth
};

struct SceneSpec {
    std::vector<PatchSpec> patches;
    int point_count = 50000;
    double noise_sigma = 0.0;     // magnitude stddev of positional noise
    std::uint64_t seed = 1;

    void validate() const {
        if (patches.empty()) throw InputError("scene: no patches");
        if (point_count < 1) throw InputError("scene: point_count must be >= 1");
        if (noise_sigma < 0) throw InputError("scene: negative noise sigma");
    }
};

/// Floor, three walls (one side open), and a table slab attached to the back
/// wall. Everything oriented toward the room interior; a non-watertight scene
/// fixture with the classic concave corners and one T-junction.
inline SceneSpec open_room_scene(int point_count = 50000, double noise_sigma = 0.0,
                                 std::uint64_t seed = 1) {
    SceneSpec spec;
    spec.point_count = point_count;
    spec.noise_sigma = noise_sigma;
    spec.seed = seed;
    spec.patches = {
        {"floor", {-2, -2, 0}, {4, 0, 0}, {0, 4, 0}, {0, 0, 1}},
        {"wall_left", {-2, -2, 0}, {0, 4, 0}, {0, 0, 2}, {1, 0, 0}},
        {"wall_right", {2, -2, 0}, {0, 4, 0}, {0, 0, 2}, {-1, 0, 0}},
        {"wall_back", {-2, -2, 0}, {4, 0, 0}, {0, 0, 2}, {0, 1, 0}},
        {"table", {-2, -0.6, 0.8}, {1.2, 0, 0}, {0, 1.2, 0}, {0, 0, 1}},
    };
    return spec;
}

/// Uniform area-weighted sampling of the patches; optional positional noise
/// (random direction, N(0, sigma) magnitude, mean displacement
/// sigma * sqrt(2/pi)). Ground-truth normals stay noise-free.
inline PointCloud build_scene(const SceneSpec& spec) {
    spec.validate();
    const std::size_t np = spec.patches.size();
    std::vector<double> area(np);
    double total = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        area[p] = cross(spec.patches[p].u, spec.patches[p].v).norm();
        if (area[p] <= 0) throw InputError("scene: degenerate patch " + spec.patches[p].name);
        total += area[p];
    }
    // Largest-remainder allocation of the point budget.
    std::vector<int> count(np);
    std::vector<std::pair<double, int>> frac(np);
    int assigned = 0;
    for (std::size_t p = 0; p < np; ++p) {
        const double share = spec.point_count * area[p] / total;
        count[p] = static_cast<int>(std::floor(share));
        assigned += count[p];
        frac[p] = {share - count[p], static_cast<int>(p)};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (int r = 0; r < spec.point_count - assigned; ++r) ++count[frac[r % np].second];

    PointCloud cloud;
    cloud.positions.reserve(spec.point_count);
    cloud.gt_normals.reserve(spec.point_count);
    for (std::size_t p = 0; p < np; ++p) {
        Rng rng = make_rng(mix_seed(spec.seed, 0x70617463u, p));
        for (int i = 0; i < count[p]; ++i) {
            const double a = uniform_real(rng), b = uniform_real(rng);
            cloud.positions.push_back(spec.patches[p].origin + spec.patches[p].u * a +
                                      spec.patches[p].v * b);
            cloud.gt_normals.push_back(spec.patches[p].normal.normalized());
        }
    }
    if (spec.noise_sigma > 0) {
        Rng rng = make_rng(mix_seed(spec.seed, 0x6e6f6973u));
        for (auto& pos : cloud.positions) {
            Vec3 dir;
            do {
                dir = Vec3(normal_draw(rng), normal_draw(rng), normal_draw(rng));
            } while (dir.norm() < 1e-9);
            pos += dir.normalized() * (spec.noise_sigma * normal_draw(rng));
        }
    }
    cloud.normals = cloud.gt_normals;
    return cloud;
}

}  // namespace orient
