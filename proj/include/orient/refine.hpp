#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <unistd.h>

#include "orient/error.hpp"
#include "orient/io.hpp"
#include "orient/kdtree.hpp"
#include "orient/mesh.hpp"
#include "orient/parallel.hpp"
#include "orient/process.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct RefineConfig {
    int max_iters = 20;
    int k_map = 10;                  // points receiving each face's contribution
    double convergence_tol = 0.5;    // mean normal change, degrees
    int trim_start_iter = -1;        // -1: last 3 iterations ("final stages")
    std::string reconstructor = "smoothing";  // "smoothing" | "external"
    std::string external_cmd;        // template with {input} and {output}
    double external_timeout_sec = 300.0;
    int external_max_concurrency = 2;
    double distance_factor = 3.0;    // trim threshold, in mean-spacing units
    int mesh_k = 10;                 // smoothing fan neighborhood size

    int trim_start() const {
        return trim_start_iter >= 0 ? trim_start_iter : std::max(0, max_iters - 3);
    }

    void validate() const {
        if (max_iters < 1) throw InputError("refine: max_iters must be >= 1");
        if (k_map < 1) throw InputError("refine: k_map must be >= 1");
        if (reconstructor != "smoothing" && reconstructor != "external")
            throw InputError("refine: unknown reconstructor '" + reconstructor + "'");
        if (reconstructor == "external" && external_cmd.empty())
            throw InputError("refine: external reconstructor needs --refine-cmd");
    }
};

/// Mesh-producing strategy: takes positions and current normals of one block.
using Reconstructor =
    std::function<TriangleMesh(const std::vector<Vec3>&, const std::vector<Vec3>&)>;

namespace detail {

/// Caps the number of concurrently running external reconstructor processes.
class ProcessGate {
public:
    static ProcessGate& instance() {
        static ProcessGate gate;
        return gate;
    }

    void acquire(int cap) {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return active_ < std::max(1, cap); });
        ++active_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int active_ = 0;
};

inline std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    for (std::size_t at = tmpl.find(key); at != std::string::npos; at = tmpl.find(key, at))
        tmpl.replace(at, key.size(), value), at += value.size();
    return tmpl;
}

inline std::uint64_t unique_file_tag() {
    static std::atomic<std::uint64_t> counter{0};
    return counter.fetch_add(1);
}

}  // namespace detail

/// Crust-style fan triangulation of kNN neighborhoods: each point spawns
/// triangles between angularly consecutive projected neighbors on its local
/// PCA plane, skipping gaps wider than 90 degrees (open-boundary sides).
/// Face winding follows the majority of the three current vertex normals,
/// so area-weighted averaging acts as a sign-majority smoother.
inline TriangleMesh smoothing_reconstruct(const std::vector<Vec3>& positions,
                                          const std::vector<Vec3>& normals, int mesh_k = 10) {
    const int n = static_cast<int>(positions.size());
    if (n == 0) throw Error("reconstruct: empty input");
    if (n < 3) throw Error("reconstruct: fewer than 3 points");
    const int k = std::min(mesh_k, n - 1);

    const KdTree tree(positions);
    struct Fan {
        std::vector<std::array<int, 3>> tris;
    };
    std::vector<Fan> fans(n);

    parallel_for(n, [&](int i) {
        auto hits = tree.knn(positions[i], k, i);
        Vec3 mean(0, 0, 0);
        for (const auto& h : hits) mean += positions[h.index];
        mean /= static_cast<double>(hits.size());
        SymMat3 cov;
        for (const auto& h : hits) {
            const Vec3 d = positions[h.index] - mean;
            cov.xx += d.x * d.x;
            cov.xy += d.x * d.y;
            cov.xz += d.x * d.z;
            cov.yy += d.y * d.y;
            cov.yz += d.y * d.z;
            cov.zz += d.z * d.z;
        }
        const EigenSym3 eig = eigen_sym3(cov);
        if (eig.values[0] <= 0.0 || eig.values[1] / eig.values[0] < 1e-12) return;  // collinear
        const Vec3 e0 = eig.vectors[0], e1 = eig.vectors[1];

        struct Ang {
            double angle;
            int index;
        };
        std::vector<Ang> ring;
        ring.reserve(hits.size());
        for (const auto& h : hits) {
            const Vec3 d = positions[h.index] - positions[i];
            const double u = dot(d, e0), v = dot(d, e1);
            if (u * u + v * v < 1e-300) continue;
            ring.push_back({std::atan2(v, u), h.index});
        }
        std::sort(ring.begin(), ring.end(), [](const Ang& a, const Ang& b) {
            return a.angle < b.angle || (a.angle == b.angle && a.index < b.index);
        });
        const double kMaxGap = 1.5707963267948966;  // 90 degrees
        for (std::size_t j = 0; ring.size() >= 2 && j < ring.size(); ++j) {
            const std::size_t j2 = (j + 1) % ring.size();
            double gap = ring[j2].angle - ring[j].angle;
            if (j2 == 0) gap += 6.283185307179586;
            if (gap > kMaxGap) continue;
            int a = ring[j].index, b = ring[j2].index;
            if (a == b) continue;
            const Vec3 fn = cross(positions[a] - positions[i], positions[b] - positions[i]);
            const double s = dot(fn, normals[i] + normals[a] + normals[b]);
            if (s < 0.0) std::swap(a, b);
            fans[i].tris.push_back({i, a, b});
        }
    });

    TriangleMesh mesh;
    mesh.vertices = positions;
    for (const auto& fan : fans)
        mesh.faces.insert(mesh.faces.end(), fan.tris.begin(), fan.tris.end());
    if (mesh.faces.empty()) throw Error("reconstruct: empty mesh (all neighborhoods degenerate)");
    mesh.compute_face_data();
    return mesh;
}

/// Invoke the configured external command on a temp point file and parse the
/// mesh it writes. Failure modes (nonzero exit, timeout, missing/garbled
/// output) surface as Error with captured diagnostics.
inline TriangleMesh external_reconstruct(const std::vector<Vec3>& positions,
                                         const std::vector<Vec3>& normals,
                                         const RefineConfig& cfg) {
    if (positions.empty()) throw Error("reconstruct: empty input");
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path();
    const std::string tag = std::to_string(getpid()) + "_" + std::to_string(detail::unique_file_tag());
    const fs::path in_path = dir / ("orient_rec_" + tag + "_in.ply");
    const fs::path out_path = dir / ("orient_rec_" + tag + "_out.ply");

    write_points_ply(in_path.string(), positions, normals);
    std::string cmd = cfg.external_cmd;
    if (cmd.find("{input}") == std::string::npos || cmd.find("{output}") == std::string::npos)
        throw Error("reconstruct: external command template must contain {input} and {output}");
    cmd = detail::substitute(cmd, "{input}", in_path.string());
    cmd = detail::substitute(cmd, "{output}", out_path.string());

    detail::ProcessGate::instance().acquire(cfg.external_max_concurrency);
    CommandResult res;
    try {
        res = run_command(cmd, cfg.external_timeout_sec);
    } catch (...) {
        detail::ProcessGate::instance().release();
        std::error_code ec;
        fs::remove(in_path, ec);
        throw;
    }
    detail::ProcessGate::instance().release();

    std::error_code ec;
    fs::remove(in_path, ec);
    auto cleanup_out = [&] { fs::remove(out_path, ec); };

    if (res.timed_out) {
        cleanup_out();
        throw Error("reconstruct: external command timed out after " +
                    std::to_string(cfg.external_timeout_sec) + "s: " + cmd);
    }
    if (res.exit_code != 0) {
        cleanup_out();
        throw Error("reconstruct: external command exited with status " +
                    std::to_string(res.exit_code) + "\n--- captured output ---\n" + res.output);
    }
    if (!fs::exists(out_path)) {
        throw Error("reconstruct: external command wrote no output file\n--- captured output ---\n" +
                    res.output);
    }
    TriangleMesh mesh;
    try {
        mesh = read_mesh_ply(out_path.string());
    } catch (const std::exception& e) {
        cleanup_out();
        throw Error(std::string("reconstruct: cannot parse external mesh: ") + e.what());
    }
    cleanup_out();
    if (mesh.empty()) throw Error("reconstruct: external command produced an empty mesh");
    return mesh;
}

/// Strategy dispatch for the iteration loop.
inline TriangleMesh reconstruct(const std::vector<Vec3>& positions, const std::vector<Vec3>& normals,
                                const RefineConfig& cfg) {
    cfg.validate();
    if (cfg.reconstructor == "external") return external_reconstruct(positions, normals, cfg);
    return smoothing_reconstruct(positions, normals, cfg.mesh_k);
}

struct FaceContribution {
    int face = -1;
    double area = 0.0;
    Vec3 normal;
};

/// Each face donates (area, normal) to its k_map nearest input points
/// (face-centroid distance). Per-point lists are in ascending face order.
inline std::vector<std::vector<FaceContribution>> map_faces_to_points(
    const TriangleMesh& mesh, const std::vector<Vec3>& positions, int k_map) {
    if (mesh.empty()) throw Error("map_faces_to_points: empty mesh");
    const KdTree tree(positions);
    const int nf = static_cast<int>(mesh.face_count());
    const int k = std::min<int>(k_map, static_cast<int>(positions.size()));

    std::vector<std::vector<int>> face_hits(nf);
    parallel_for(nf, [&](int f) {
        auto hits = tree.knn(mesh.face_centroid(f), k);
        face_hits[f].reserve(hits.size());
        for (const auto& h : hits) face_hits[f].push_back(h.index);
    });

    std::vector<std::vector<FaceContribution>> out(positions.size());
    for (int f = 0; f < nf; ++f)
        for (int p : face_hits[f])
            out[p].push_back({f, mesh.face_areas[f], mesh.face_normals[f]});
    return out;
}

struct NormalUpdate {
    std::vector<Vec3> normals;
    double mean_change_deg = 0.0;  // over points that actually moved
    int updated = 0;
};

/// Area-weighted face-normal average per point; zero-sum or contribution-less
/// points keep their previous normal and do not enter the mean change.
inline NormalUpdate update_normals(const std::vector<Vec3>& current,
                                   const std::vector<std::vector<FaceContribution>>& contributions) {
    if (current.size() != contributions.size())
        throw Error("update_normals: size mismatch");
    NormalUpdate out;
    out.normals = current;
    double total = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (contributions[i].empty()) continue;
        Vec3 sum(0, 0, 0);
        for (const auto& c : contributions[i]) sum += c.normal * c.area;
        const double len = sum.norm();
        if (len < 1e-300) continue;
        out.normals[i] = sum / len;
        total += angle_deg(current[i], out.normals[i]);
        ++out.updated;
    }
    if (out.updated > 0) out.mean_change_deg = total / out.updated;
    return out;
}

/// Mean nearest-neighbor distance; the trim threshold unit.
inline double mean_point_spacing(const std::vector<Vec3>& positions) {
    if (positions.size() < 2) return 0.0;
    const KdTree tree(positions);
    const int n = static_cast<int>(positions.size());
    std::vector<double> d(n);
    parallel_for(n, [&](int i) { d[i] = std::sqrt(tree.nearest(positions[i], i).dist2); });
    double sum = 0.0;
    for (double v : d) sum += v;
    return sum / n;
}

/// Peel boundary faces whose centroid strays farther than
/// distance_factor x mean spacing from the inputs, until a fixpoint.
inline TriangleMesh trim_boundary_faces(TriangleMesh mesh, const std::vector<Vec3>& positions,
                                        double distance_factor, double spacing = -1.0,
                                        bool* trimmed_empty = nullptr) {
    if (trimmed_empty) *trimmed_empty = false;
    if (mesh.empty()) return mesh;
    if (spacing < 0.0) spacing = mean_point_spacing(positions);
    const double limit = distance_factor * spacing;
    const double limit2 = limit * limit;
    const KdTree tree(positions);
    for (;;) {
        const auto boundary = mesh.boundary_faces();
        std::vector<char> keep(mesh.face_count(), 1);
        bool removed = false;
        for (std::size_t f = 0; f < mesh.face_count(); ++f) {
            if (!boundary[f]) continue;
            if (tree.nearest(mesh.face_centroid(static_cast<int>(f))).dist2 > limit2) {
                keep[f] = 0;
                removed = true;
            }
        }
        if (!removed) break;
        mesh.keep_faces(keep);
        if (mesh.empty()) {
            if (trimmed_empty) *trimmed_empty = true;
            break;
        }
    }
    return mesh;
}

struct RefineResult {
    std::vector<Vec3> normals;
    int iterations = 0;
    double last_change_deg = 0.0;
    bool degraded = false;   // reconstructor failed; normals are the inputs
    std::string warning;
};

/// The iterate-until-stable loop: reconstruct, trim near the end, map faces
/// back to points, average. Reconstructor failure is contained: the block
/// keeps its incoming normals and the pipeline moves on.
inline RefineResult refine_block(const std::vector<Vec3>& positions,
                                 const std::vector<Vec3>& initial_normals, const RefineConfig& cfg,
                                 const Reconstructor& custom = nullptr) {
    cfg.validate();
    if (positions.size() != initial_normals.size() || positions.empty())
        throw Error("refine_block: positions/normals mismatch or empty");

    RefineResult out;
    out.normals = initial_normals;
    const double spacing = mean_point_spacing(positions);

    for (int it = 0; it < cfg.max_iters; ++it) {
        TriangleMesh mesh;
        try {
            mesh = custom ? custom(positions, out.normals)
                          : reconstruct(positions, out.normals, cfg);
            if (mesh.empty()) throw Error("reconstruct: empty mesh");
        } catch (const Error& e) {
            out.normals = initial_normals;
            out.degraded = true;
            out.warning = e.what();
            return out;
        }
        if (it >= cfg.trim_start()) {
            bool emptied = false;
            mesh = trim_boundary_faces(std::move(mesh), positions, cfg.distance_factor, spacing,
                                       &emptied);
            if (emptied) {
                out.warning = "trim removed every face; stopping early";
                return out;
            }
        }
        const auto contributions = map_faces_to_points(mesh, positions, cfg.k_map);
        auto updated = update_normals(out.normals, contributions);
        out.normals = std::move(updated.normals);
        out.last_change_deg = updated.mean_change_deg;
        out.iterations = it + 1;
        if (updated.mean_change_deg < cfg.convergence_tol) break;
    }
    return out;
}

}  // namespace orient
