#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "orient/error.hpp"
#include "orient/mesh.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct ViewConfig {
    Vec3 viewpoint;
    Vec3 view_dir;                      // unit, toward the scene
    int resolution = 400;
    double tan_half_fov = 0.42426406871192851;  // 1.2 / (2*sqrt(2)); fits a
                                                // sphere seen from 3x its radius

    void validate() const {
        if (resolution < 16) throw Error("view: resolution must be >= 16");
        if (!is_unit(view_dir)) throw Error("view: view_dir must be unit");
    }
};

/// One block's renderable surface: a triangle mesh when the refiner produced
/// one, else oriented circular splats (disc per point, radius per point).
struct RenderGeometry {
    TriangleMesh mesh;                // used when it has faces
    std::vector<Vec3> splat_centers;
    std::vector<Vec3> splat_normals;
    std::vector<double> splat_radii;

    bool is_mesh() const { return !mesh.faces.empty(); }
    bool empty() const { return mesh.faces.empty() && splat_centers.empty(); }
};

/// Per-pixel result of rasterizing a block pair from one view.
struct RasterBuffer {
    int resolution = 0;
    std::vector<std::int8_t> tag;       // -1 none, 0 first block, 1 second
    std::vector<double> depth;          // forward depth along view_dir; valid where tagged
    std::vector<std::int8_t> sign;      // sign(ray . n) of the winner
    std::vector<std::uint8_t> boundary; // 4-neighborhood touches both blocks

    int index(int x, int y) const { return y * resolution + x; }

    void reset(int res) {
        resolution = res;
        const std::size_t n = static_cast<std::size_t>(res) * res;
        tag.assign(n, -1);
        depth.assign(n, std::numeric_limits<double>::infinity());
        sign.assign(n, 0);
        boundary.assign(n, 0);
    }

    void compute_boundary() {
        boundary.assign(tag.size(), 0);
        const int res = resolution;
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                const int i = index(x, y);
                if (tag[i] < 0) continue;
                const std::int8_t other = static_cast<std::int8_t>(1 - tag[i]);
                if ((x > 0 && tag[index(x - 1, y)] == other) ||
                    (x + 1 < res && tag[index(x + 1, y)] == other) ||
                    (y > 0 && tag[index(x, y - 1)] == other) ||
                    (y + 1 < res && tag[index(x, y + 1)] == other))
                    boundary[i] = 1;
            }
    }
};

namespace detail {

/// Camera frame + projection helpers for one view. Pixel-center rays are
/// precomputed once; elements share them.
struct Camera {
    Vec3 eye, fwd, right, up;
    int res;
    double tan_half;
    std::vector<Vec3> rays;

    explicit Camera(const ViewConfig& view)
        : eye(view.viewpoint),
          fwd(view.view_dir),
          res(view.resolution),
          tan_half(view.tan_half_fov) {
        right = any_orthogonal(fwd);
        up = cross(fwd, right);
        rays.resize(static_cast<std::size_t>(res) * res);
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) rays[y * res + x] = pixel_ray(x, y);
    }

    // Screen position in pixel units; requires positive forward depth.
    bool project(const Vec3& p, double& px, double& py, double& z) const {
        const Vec3 d = p - eye;
        z = dot(d, fwd);
        if (z < 1e-9) return false;
        const double sx = dot(d, right) / (z * tan_half);
        const double sy = dot(d, up) / (z * tan_half);
        px = (sx + 1.0) * 0.5 * res;
        py = (sy + 1.0) * 0.5 * res;
        return true;
    }

    // World-space direction of the ray through pixel center (x, y); unit.
    Vec3 pixel_ray(int x, int y) const {
        const double sx = (2.0 * (x + 0.5) / res - 1.0) * tan_half;
        const double sy = (2.0 * (y + 0.5) / res - 1.0) * tan_half;
        return (fwd + right * sx + up * sy).normalized();
    }
};

/// Flattened renderable element: triangle or splat disc.
struct Element {
    bool is_tri = true;
    std::int8_t block = 0;
    Vec3 a, b, c;      // triangle vertices
    Vec3 center, n;    // disc center / plane normal (triangles: face normal)
    double radius = 0.0;
};

inline void collect_elements(const RenderGeometry& geom, std::int8_t block,
                             std::vector<Element>& out) {
    if (geom.is_mesh()) {
        for (std::size_t f = 0; f < geom.mesh.faces.size(); ++f) {
            if (geom.mesh.face_areas[f] <= 0.0) continue;
            Element e;
            e.is_tri = true;
            e.block = block;
            const auto& t = geom.mesh.faces[f];
            e.a = geom.mesh.vertices[t[0]];
            e.b = geom.mesh.vertices[t[1]];
            e.c = geom.mesh.vertices[t[2]];
            e.n = geom.mesh.face_normals[f];
            e.center = (e.a + e.b + e.c) / 3.0;
            out.push_back(e);
        }
    } else {
        for (std::size_t i = 0; i < geom.splat_centers.size(); ++i) {
            Element e;
            e.is_tri = false;
            e.block = block;
            e.center = geom.splat_centers[i];
            e.n = geom.splat_normals[i];
            e.radius = geom.splat_radii[i];
            out.push_back(e);
        }
    }
}

/// Scan-convert one element, invoking cb(pixel_index, forward_depth, ray_dot_n)
/// for every pixel whose center ray hits it. Depth is measured along view_dir
/// (not ray arclength) so it is comparable with compute_eta's per-element
/// spans: a sheet parallel to the image plane has constant depth across its
/// pixels. The z-test lives in the caller.
template <typename Callback>
void visit_element(const Camera& cam, const Element& e, Callback&& cb) {
    double x0 = 0, y0 = 0, z0 = 0, x1 = 0, y1 = 0, z1 = 0, x2 = 0, y2 = 0, z2 = 0;
    double min_px, max_px, min_py, max_py;
    if (e.is_tri) {
        if (!cam.project(e.a, x0, y0, z0) || !cam.project(e.b, x1, y1, z1) ||
            !cam.project(e.c, x2, y2, z2))
            return;  // behind the eye; cannot occur with exterior viewpoints
        min_px = std::min({x0, x1, x2});
        max_px = std::max({x0, x1, x2});
        min_py = std::min({y0, y1, y2});
        max_py = std::max({y0, y1, y2});
    } else {
        double cx, cy, cz;
        if (!cam.project(e.center, cx, cy, cz)) return;
        const double zn = std::max(cz - e.radius, 1e-9);
        const double pr = e.radius / (zn * cam.tan_half) * 0.5 * cam.res + 1.0;
        min_px = cx - pr;
        max_px = cx + pr;
        min_py = cy - pr;
        max_py = cy + pr;
    }

    const int xlo = std::max(0, static_cast<int>(std::floor(min_px)));
    const int xhi = std::min(cam.res - 1, static_cast<int>(std::ceil(max_px)));
    const int ylo = std::max(0, static_cast<int>(std::floor(min_py)));
    const int yhi = std::min(cam.res - 1, static_cast<int>(std::ceil(max_py)));
    if (xlo > xhi || ylo > yhi) return;

    // Precompute edge functions for triangles (screen space, CCW or CW).
    double e01x = 0, e01y = 0, e12x = 0, e12y = 0, e20x = 0, e20y = 0, area2 = 0;
    if (e.is_tri) {
        e01x = x1 - x0, e01y = y1 - y0;
        e12x = x2 - x1, e12y = y2 - y1;
        e20x = x0 - x2, e20y = y0 - y2;
        area2 = e01x * (y2 - y0) - e01y * (x2 - x0);
        if (std::abs(area2) < 1e-12) return;  // edge-on sliver
    }

    for (int y = ylo; y <= yhi; ++y) {
        for (int x = xlo; x <= xhi; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            if (e.is_tri) {
                const double w0 = e01x * (py - y0) - e01y * (px - x0);
                const double w1 = e12x * (py - y1) - e12y * (px - x1);
                const double w2 = e20x * (py - y2) - e20y * (px - x2);
                const bool inside = area2 > 0 ? (w0 >= 0 && w1 >= 0 && w2 >= 0)
                                              : (w0 <= 0 && w1 <= 0 && w2 <= 0);
                if (!inside) continue;
            }
            const Vec3& ray = cam.rays[y * cam.res + x];
            const double denom = dot(ray, e.n);
            if (std::abs(denom) < 1e-12) continue;  // ray grazes the plane
            const double t = dot(e.center - cam.eye, e.n) / denom;
            if (t <= 1e-9) continue;
            if (!e.is_tri) {
                const Vec3 q = cam.eye + ray * t;
                if (squared_distance(q, e.center) > e.radius * e.radius) continue;
            }
            cb(y * cam.res + x, t * dot(ray, cam.fwd), denom);
        }
    }
}

}  // namespace detail

/// Z-buffered projection of two blocks' geometry from one view. With
/// `cull_partial`, elements that are only partially visible (clipped by a
/// nearer element, never sampled, or seen edge-on everywhere) are removed and
/// the remainder re-rasterized, which opens a gap between surface sheets that
/// meet at fold silhouettes.
inline RasterBuffer rasterize_pair(const RenderGeometry& first, const RenderGeometry& second,
                                   const ViewConfig& view, bool cull_partial = true) {
    view.validate();
    const detail::Camera cam(view);
    std::vector<detail::Element> elems;
    detail::collect_elements(first, 0, elems);
    detail::collect_elements(second, 1, elems);

    RasterBuffer buf;
    buf.reset(view.resolution);
    std::vector<std::int32_t> winner(buf.tag.size(), -1);

    auto fill_pass = [&](const std::vector<std::uint8_t>* keep) {
        for (std::size_t id = 0; id < elems.size(); ++id) {
            if (keep && !(*keep)[id]) continue;
            detail::visit_element(cam, elems[id], [&](int i, double z, double denom) {
                if (z < buf.depth[i] ||
                    (z == buf.depth[i] && static_cast<std::int32_t>(id) < winner[i])) {
                    buf.depth[i] = z;
                    buf.tag[i] = elems[id].block;
                    buf.sign[i] = denom < 0 ? std::int8_t{1} : std::int8_t{-1};
                    winner[i] = static_cast<std::int32_t>(id);
                }
            });
        }
    };
    fill_pass(nullptr);

    if (cull_partial && !elems.empty()) {
        // An element survives only if nothing nearer clips any pixel it
        // covers; elements covering no pixel at all are dropped too. Elements
        // seen edge-on everywhere sit in the silhouette band of a fold; their
        // one or two pixels would bridge the front and back sheets, so they
        // count as partially visible as well.
        constexpr double graze = 0.1;  // |cos| of incidence below this is edge-on
        std::vector<std::uint8_t> keep(elems.size(), 0);
        for (std::size_t id = 0; id < elems.size(); ++id) {
            bool any = false, cut = false;
            double steepest = 0.0;
            detail::visit_element(cam, elems[id], [&](int i, double z, double denom) {
                any = true;
                steepest = std::max(steepest, std::abs(denom));
                if (buf.depth[i] < z - 1e-12) cut = true;
            });
            keep[id] = any && !cut && steepest >= graze;
        }
        buf.reset(view.resolution);
        std::fill(winner.begin(), winner.end(), -1);
        fill_pass(&keep);
    }
    buf.compute_boundary();
    return buf;
}

/// Depth-continuity threshold: the largest projected depth span of any single
/// element. Triangles: span over the three vertices' forward depths. Splats:
/// the disc's extent along the view axis, 2 r sin(theta).
inline double compute_eta(const RenderGeometry& first, const RenderGeometry& second,
                          const ViewConfig& view) {
    std::vector<detail::Element> elems;
    detail::collect_elements(first, 0, elems);
    detail::collect_elements(second, 1, elems);
    if (elems.empty()) throw Error("compute_eta: no geometry");
    double eta = 0.0;
    for (const auto& e : elems) {
        double span;
        if (e.is_tri) {
            const double za = dot(e.a - view.viewpoint, view.view_dir);
            const double zb = dot(e.b - view.viewpoint, view.view_dir);
            const double zc = dot(e.c - view.viewpoint, view.view_dir);
            span = std::max({za, zb, zc}) - std::min({za, zb, zc});
        } else {
            const double cosang = std::min(1.0, std::abs(dot(e.n, view.view_dir)));
            span = 2.0 * e.radius * std::sqrt(std::max(0.0, 1.0 - cosang * cosang));
        }
        eta = std::max(eta, span);
    }
    return eta;
}

}  // namespace orient
