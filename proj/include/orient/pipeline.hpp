#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "orient/block_graph.hpp"
#include "orient/dipole.hpp"
#include "orient/error.hpp"
#include "orient/io.hpp"
#include "orient/knn_graph.hpp"
#include "orient/metrics.hpp"
#include "orient/normals.hpp"
#include "orient/parallel.hpp"
#include "orient/point_cloud.hpp"
#include "orient/refine.hpp"
#include "orient/segmentation.hpp"
#include "orient/vcr.hpp"

namespace orient {

struct PipelineConfig {
    std::string input_path;
    std::string out_dir = "orient_out";
    int block_count = 200;       // N
    int knn_k = 10;              // k of the kNN graph and PCA neighborhoods
    double dipole_c = 4.0;       // 2 is the noisy-input preset
    int passes = 5;              // M
    RefineConfig refine;
    int resolution = 400;
    int exact_limit = 28;
    int restarts = 32;
    std::uint64_t seed = 0;
    double splat_radius_factor = 1.5;
    bool cull_partial = true;

    void validate() const {
        if (block_count < 1) throw InputError("pipeline: block count must be >= 1");
        if (knn_k < 3) throw InputError("pipeline: knn k must be >= 3");
        if (resolution < 16) throw InputError("pipeline: resolution must be >= 16");
        refine.validate();
        DipoleParams d;
        d.c = dipole_c;
        d.passes = passes;
        d.validate();
    }
};

struct PipelineResult {
    PointCloud cloud;            // largest component, oriented in place
    Segmentation seg;
    BlockGraph graph;
    FlipAssignment flips;
    OrientationReport report;
    bool has_gt = false;
    double discarded_fraction = 0.0;
    std::vector<std::string> log;
    std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

namespace detail {

class StageClock {
public:
    explicit StageClock(PipelineResult& result) : result_(result) {}

    template <typename Fn>
    auto run(const std::string& name, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(name, start);
        } else {
            auto value = fn();
            record(name, start);
            return value;
        }
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result_.timings.emplace_back(name, sec);
    }

    PipelineResult& result_;
};

}  // namespace detail

/// End-to-end orientation of one cloud: segment, per-block dipole init and
/// refinement, pairwise view-consistency scoring, global flip solve, metrics.
/// GT normals in the input are used only for the report. Stage failures throw
/// Error with the stage name; per-block refine failures degrade instead.
inline PipelineResult run_pipeline(PointCloud input, const PipelineConfig& cfg) {
    cfg.validate();
    input.validate();
    PipelineResult result;
    detail::StageClock clock(result);

    // --- largest connected component ------------------------------------
    {
        if (cfg.knn_k >= static_cast<int>(input.size()))
            throw InputError("pipeline: fewer points than knn k");
        auto graph0 = clock.run("knn_graph",
                                [&] { return build_knn_graph(input, cfg.knn_k, true); });
        const auto comps = connected_components(graph0);
        if (comps.size() == 1) {
            result.cloud = std::move(input);
        } else {
            const double kept = static_cast<double>(comps[0].size()) / input.size();
            result.discarded_fraction = 1.0 - kept;
            for (std::size_t c = 1; c < comps.size(); ++c)
                if (comps[c].size() * 100 > input.size())
                    result.log.push_back("discarded secondary component of " +
                                         std::to_string(comps[c].size()) + " points");
            result.log.push_back("kept largest component: " + std::to_string(comps[0].size()) +
                                 " of " + std::to_string(input.size()) + " points");
            result.cloud = input.subset(comps[0]);
        }
    }
    PointCloud& cloud = result.cloud;
    result.has_gt = cloud.has_gt_normals();

    // Subsetting can only add mutual-kNN edges, so the kept component stays
    // connected, but the adjacency changes: rebuild.
    const KnnGraph graph = clock.run("knn_graph_rebuild", [&] {
        return build_knn_graph(cloud, cfg.knn_k, true);
    });

    const PcaNormals est = clock.run("pca_normals", [&] { return pca_normals(cloud, cfg.knn_k); });

    // --- segmentation -----------------------------------------------------
    result.seg = clock.run("segmentation", [&] {
        const int n_blocks = std::min<int>(cfg.block_count, static_cast<int>(cloud.size()));
        auto subsets = kd_partition(cloud, n_blocks);
        return grow_blocks(cloud, subsets, graph);
    });
    const Segmentation& seg = result.seg;
    const int nb = static_cast<int>(seg.blocks.size());
    result.log.push_back("segmented into " + std::to_string(nb) + " blocks");

    // --- per-block init + refine -----------------------------------------
    cloud.normals.assign(cloud.size(), Vec3(0, 0, 1));
    clock.run("block_orientation", [&] {
        std::vector<std::string> notes(nb);
        parallel_for(nb, [&](int b) {
            const Block& block = seg.blocks[b];
            DipoleParams params;
            params.c = cfg.dipole_c;
            params.passes = cfg.passes;
            params.seed = cfg.seed;
            BlockInit init;
            try {
                init = orient_block_initial(block, cloud, est, graph, params);
            } catch (const Error& e) {
                throw Error("block " + std::to_string(b) + " init: " + e.what());
            }
            if (init.all_degenerate)
                notes[b] = "block " + std::to_string(b) + ": all-degenerate PCA, normals kept";

            std::vector<Vec3> pos(block.members.size());
            for (std::size_t l = 0; l < block.members.size(); ++l)
                pos[l] = cloud.positions[block.members[l]];
            const RefineResult refined = refine_block(pos, init.normals, cfg.refine);
            if (refined.degraded)
                notes[b] = "block " + std::to_string(b) + " refine degraded: " + refined.warning;
            else if (!refined.warning.empty())
                notes[b] = "block " + std::to_string(b) + ": " + refined.warning;
            for (std::size_t l = 0; l < block.members.size(); ++l)
                cloud.normals[block.members[l]] = refined.normals[l];
        });
        for (const auto& note : notes)
            if (!note.empty()) result.log.push_back(note);
    });

    // --- pairwise consistency --------------------------------------------
    const auto edges = block_adjacency(seg, graph);
    result.graph.node_count = nb;
    result.graph.edges.resize(edges.size());
    clock.run("vcr_scoring", [&] {
        std::vector<RenderGeometry> geom(nb);
        parallel_for(nb, [&](int b) {
            std::vector<Vec3> pos(seg.blocks[b].members.size());
            std::vector<Vec3> nrm(seg.blocks[b].members.size());
            for (std::size_t l = 0; l < seg.blocks[b].members.size(); ++l) {
                pos[l] = cloud.positions[seg.blocks[b].members[l]];
                nrm[l] = cloud.normals[seg.blocks[b].members[l]];
            }
            geom[b] = make_splats(pos, nrm, cfg.splat_radius_factor);
        });
        parallel_for(static_cast<int>(edges.size()), [&](int k) {
            const auto [i, j] = edges[k];
            try {
                const ConsistencyScores s =
                    pair_consistency(geom[i], geom[j], cfg.resolution, cfg.cull_partial);
                result.graph.edges[k] = {i, j, s.alpha, s.alpha_bar};
            } catch (const Error& e) {
                throw Error("pair (" + std::to_string(i) + "," + std::to_string(j) +
                            ") scoring: " + e.what());
            }
        });
    });

    // --- global solve + apply ---------------------------------------------
    clock.run("flip_solve", [&] {
        result.flips =
            solve_flips(result.graph, cfg.exact_limit, cfg.restarts, cfg.seed, &result.log);
        apply_flips(cloud, seg, result.flips);
    });
    {
        int flipped = 0;
        for (auto b : result.flips.bits) flipped += b;
        result.log.push_back("flipped " + std::to_string(flipped) + " of " + std::to_string(nb) +
                             " blocks (objective " + std::to_string(result.flips.objective) + ")");
    }

    // --- metrics -----------------------------------------------------------
    if (result.has_gt) {
        clock.run("metrics", [&] {
            result.report = incorrect_ratio(cloud.normals, cloud.gt_normals, &seg);
        });
        result.log.push_back("incorrect ratio: " + std::to_string(result.report.incorrect_ratio) +
                             "%" + (result.report.flipped_gt ? " (gt flipped)" : ""));
    }
    return result;
}

/// File-level wrapper: normals found in the input file are treated as ground
/// truth for evaluation, never as the prediction seed.
inline PipelineResult run_pipeline_file(const PipelineConfig& cfg) {
    std::vector<std::string> warnings;
    PointCloud cloud = read_points(cfg.input_path, PointFormat::Auto, &warnings);
    if (cloud.has_normals()) {
        cloud.gt_normals = std::move(cloud.normals);
        cloud.normals.clear();
    }
    PipelineResult result = run_pipeline(std::move(cloud), cfg);
    result.log.insert(result.log.begin(), warnings.begin(), warnings.end());
    return result;
}

/// Run-directory artifacts: oriented cloud (colored when GT was present),
/// per-point block labels, the scored graph, and a key-value report.
inline void write_pipeline_artifacts(const PipelineResult& result, const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const fs::path dir(cfg.out_dir);

    write_oriented((dir / "oriented.ply").string(), result.cloud,
                   result.has_gt ? &result.report.correct : nullptr);
    write_labels((dir / "blocks.txt").string(), result.seg.labels(result.cloud.size()));
    dump_graph((dir / "graph.txt").string(), result.graph);

    std::ofstream rep(dir / "report.txt");
    if (!rep) throw Error("cannot write report in " + cfg.out_dir);
    rep << "points " << result.cloud.size() << "\n";
    rep << "blocks " << result.seg.blocks.size() << "\n";
    rep << "edges " << result.graph.edges.size() << "\n";
    rep << "discarded_fraction " << result.discarded_fraction << "\n";
    rep << "objective " << result.flips.objective << "\n";
    if (result.has_gt) {
        rep << "incorrect_ratio_percent " << result.report.incorrect_ratio << "\n";
        rep << "flipped_gt " << (result.report.flipped_gt ? 1 : 0) << "\n";
    }
    if (result.report.chamfer >= 0) rep << "chamfer " << result.report.chamfer << "\n";
    for (const auto& [stage, sec] : result.timings) rep << "time_" << stage << " " << sec << "\n";
    for (const auto& line : result.log) rep << "# " << line << "\n";
}

}  // namespace orient
