// The refinement loop treats surface reconstruction as a pluggable strategy.
// This sample refines one block with a hand-written Reconstructor instead of
// the built-in smoothing one, the same seam `external_cmd` uses to shell out
// to a Poisson binary.

#include <orient/orient.hpp>

#include <algorithm>
#include <cstdio>

int main() {
    using namespace orient;

    // A bumpy sheet with normals deliberately flipped on half the points.
    QuadricSpec spec;
    spec.kappa1 = 0.8;
    spec.kappa2 = -0.5;
    PointCloud sheet = sample_quadric(spec);
    for (std::size_t i = 0; i < sheet.size(); i += 2) sheet.normals[i] = -sheet.normals[i];

    // Reconstructor contract: positions + current normals in, triangle mesh
    // out. Here: the analytic triangulation, re-wound by the current normals'
    // majority so the loop has something to converge toward.
    Reconstructor analytic = [&](const std::vector<Vec3>& pos,
                                 const std::vector<Vec3>& normals) {
        (void)pos;
        TriangleMesh mesh = quadric_mesh(spec);
        int up = 0;
        for (const Vec3& n : normals) up += n.z > 0 ? 1 : -1;
        if (up < 0)
            for (auto& f : mesh.faces) std::swap(f[1], f[2]);
        mesh.compute_face_data();
        return mesh;
    };

    RefineConfig cfg;
    cfg.max_iters = 8;
    const RefineResult out = refine_block(sheet.positions, sheet.normals, cfg, analytic);

    // Per-block refinement fixes consistency, not the global sign (that is
    // the flip solver's job), so score against the closer of the two signs.
    int agree = 0;
    for (std::size_t i = 0; i < sheet.size(); ++i)
        agree += dot(out.normals[i], sheet.gt_normals[i]) > 0;
    const int n = static_cast<int>(sheet.size());
    std::printf("%d iterations, %d / %d normals on one consistent side (from %d)\n",
                out.iterations, std::max(agree, n - agree), n, n - n / 2);
    return 0;
}
