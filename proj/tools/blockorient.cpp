// blockorient: batch normal orientation for scene-scale point clouds.
//
// The full pipeline is `blockorient pipeline scan.ply`, but every stage is
// also exposed on its own (segment / orient-blocks / score / dump-graph /
// solve) so a run can be inspected or resumed half-way: dump-graph writes
// everything `solve --apply` needs to finish the job later.

#include <orient/orient.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace orient;

namespace {

struct ToolOpts {
    PipelineConfig cfg;
    bool no_cull = false;

    // solve
    std::string graph_path;
    std::string cloud_path;
    std::string labels_path;
    std::string apply_out;

    // eval
    std::string pred_path;
    std::string gt_path;

    // gen
    std::string scene = "room";
    std::string gen_out;
    int gen_count = 50000;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 1;
    double spacing = 0.02;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double amplitude = 0.4;
    double extent = 1.0;
    bool as_mesh = false;
};

void add_stage_flags(CLI::App* cmd, ToolOpts& o) {
    cmd->add_option("input", o.cfg.input_path, "Point cloud (ply/obj/xyz)")->required();
    cmd->add_option("--out-dir", o.cfg.out_dir, "Run directory for artifacts");
    cmd->add_option("--blocks", o.cfg.block_count, "Target block count N");
    cmd->add_option("--knn", o.cfg.knn_k, "kNN graph / PCA neighborhood size");
    cmd->add_option("--c", o.cfg.dipole_c, "Field falloff exponent (2 = noisy preset)");
    cmd->add_option("--passes", o.cfg.passes, "Greedy orientation passes M");
    cmd->add_option("--resolution", o.cfg.resolution, "Raster resolution per view");
    cmd->add_option("--seed", o.cfg.seed, "Run seed");
    cmd->add_option("--refine-cmd", o.cfg.refine.external_cmd,
                    "External reconstructor, template with {input} and {output}");
    cmd->add_option("--refine-iters", o.cfg.refine.max_iters, "Refinement iteration cap");
    cmd->add_option("--exact-limit", o.cfg.exact_limit,
                    "Largest component solved exactly; bigger ones use local search");
    cmd->add_option("--restarts", o.cfg.restarts, "Local-search restarts");
    cmd->add_flag("--no-cull", o.no_cull, "Keep partially occluded raster elements");
    cmd->set_config("--config", "", "Defaults file, one key=value per line");
}

// Stage prefix shared by the partial commands: load, keep the largest
// connected component, estimate normals, segment. Mirrors the pipeline's own
// stage order so partial artifacts match a full run with the same config.
struct StageData {
    PointCloud cloud;
    KnnGraph graph;
    PcaNormals est;
    Segmentation seg;
    std::vector<std::string> log;
};

StageData load_and_segment(const PipelineConfig& cfg) {
    cfg.validate();
    StageData d;
    PointCloud input = read_points(cfg.input_path, PointFormat::Auto, &d.log);
    if (input.has_normals()) {
        input.gt_normals = std::move(input.normals);
        input.normals.clear();
    }
    input.validate();
    if (cfg.knn_k >= static_cast<int>(input.size()))
        throw InputError("fewer points than knn k");

    const KnnGraph graph0 = build_knn_graph(input, cfg.knn_k, true);
    const auto comps = connected_components(graph0);
    if (comps.size() == 1) {
        d.cloud = std::move(input);
    } else {
        for (std::size_t c = 1; c < comps.size(); ++c)
            if (comps[c].size() * 100 > input.size())
                d.log.push_back("discarded secondary component of " +
                                std::to_string(comps[c].size()) + " points");
        d.log.push_back("kept largest component: " + std::to_string(comps[0].size()) + " of " +
                        std::to_string(input.size()) + " points");
        d.cloud = input.subset(comps[0]);
    }
    d.graph = build_knn_graph(d.cloud, cfg.knn_k, true);
    d.est = pca_normals(d.cloud, cfg.knn_k);

    const int n_blocks = std::min<int>(cfg.block_count, static_cast<int>(d.cloud.size()));
    d.seg = grow_blocks(d.cloud, kd_partition(d.cloud, n_blocks), d.graph);
    d.log.push_back("segmented into " + std::to_string(d.seg.blocks.size()) + " blocks");
    return d;
}

void orient_stage(StageData& d, const PipelineConfig& cfg) {
    const int nb = static_cast<int>(d.seg.blocks.size());
    d.cloud.normals.assign(d.cloud.size(), Vec3(0, 0, 1));
    std::vector<std::string> notes(nb);
    parallel_for(nb, [&](int b) {
        const Block& block = d.seg.blocks[b];
        DipoleParams params;
        params.c = cfg.dipole_c;
        params.passes = cfg.passes;
        params.seed = cfg.seed;
        const BlockInit init = orient_block_initial(block, d.cloud, d.est, d.graph, params);
        std::vector<Vec3> pos(block.members.size());
        for (std::size_t l = 0; l < block.members.size(); ++l)
            pos[l] = d.cloud.positions[block.members[l]];
        const RefineResult refined = refine_block(pos, init.normals, cfg.refine);
        if (refined.degraded)
            notes[b] = "block " + std::to_string(b) + " refine degraded: " + refined.warning;
        for (std::size_t l = 0; l < block.members.size(); ++l)
            d.cloud.normals[block.members[l]] = refined.normals[l];
    });
    for (const auto& note : notes)
        if (!note.empty()) d.log.push_back(note);
}

BlockGraph score_stage(const StageData& d, const PipelineConfig& cfg, bool cull_partial) {
    const int nb = static_cast<int>(d.seg.blocks.size());
    std::vector<RenderGeometry> geom(nb);
    parallel_for(nb, [&](int b) {
        std::vector<Vec3> pos, nrm;
        for (int g : d.seg.blocks[b].members) {
            pos.push_back(d.cloud.positions[g]);
            nrm.push_back(d.cloud.normals[g]);
        }
        geom[b] = make_splats(pos, nrm, cfg.splat_radius_factor);
    });
    const auto edges = block_adjacency(d.seg, d.graph);
    BlockGraph bg;
    bg.node_count = nb;
    bg.edges.resize(edges.size());
    parallel_for(static_cast<int>(edges.size()), [&](int k) {
        const auto [i, j] = edges[k];
        const ConsistencyScores s = pair_consistency(geom[i], geom[j], cfg.resolution, cull_partial);
        bg.edges[k] = {i, j, s.alpha, s.alpha_bar};
    });
    return bg;
}

Segmentation seg_from_labels(const std::string& path, std::size_t point_count) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open labels file " + path);
    std::vector<int> labels;
    for (int v; in >> v;) labels.push_back(v);
    if (labels.size() != point_count)
        throw InputError("labels file has " + std::to_string(labels.size()) + " entries for " +
                         std::to_string(point_count) + " points");
    Segmentation seg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) throw InputError("negative block label at line " + std::to_string(i + 1));
        if (labels[i] >= static_cast<int>(seg.blocks.size()))
            seg.blocks.resize(labels[i] + 1);
        seg.blocks[labels[i]].members.push_back(static_cast<int>(i));
    }
    for (std::size_t b = 0; b < seg.blocks.size(); ++b)
        seg.blocks[b].id = static_cast<int>(b);
    seg.target_count = static_cast<int>(seg.blocks.size());
    return seg;
}

void print_log(const std::vector<std::string>& log) {
    for (const auto& line : log) std::cout << line << "\n";
}

int cmd_pipeline(const ToolOpts& o) {
    PipelineConfig cfg = o.cfg;
    cfg.cull_partial = !o.no_cull;
    const PipelineResult res = run_pipeline_file(cfg);
    write_pipeline_artifacts(res, cfg);
    print_log(res.log);
    for (const auto& [stage, sec] : res.timings)
        std::printf("%-20s %8.2fs\n", stage.c_str(), sec);
    std::cout << "artifacts in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_segment(const ToolOpts& o) {
    const StageData d = load_and_segment(o.cfg);
    fs::create_directories(o.cfg.out_dir);
    write_labels((fs::path(o.cfg.out_dir) / "blocks.txt").string(),
                 d.seg.labels(d.cloud.size()));
    print_log(d.log);
    std::size_t smallest = d.cloud.size(), largest = 0;
    for (const Block& b : d.seg.blocks) {
        smallest = std::min(smallest, b.members.size());
        largest = std::max(largest, b.members.size());
    }
    std::cout << "block sizes " << smallest << ".." << largest << ", labels in " << o.cfg.out_dir
              << "/blocks.txt\n";
    return 0;
}

int cmd_orient_blocks(const ToolOpts& o) {
    StageData d = load_and_segment(o.cfg);
    orient_stage(d, o.cfg);
    fs::create_directories(o.cfg.out_dir);
    const fs::path dir(o.cfg.out_dir);
    write_oriented((dir / "oriented.ply").string(), d.cloud);
    write_labels((dir / "blocks.txt").string(), d.seg.labels(d.cloud.size()));
    print_log(d.log);
    std::cout << "per-block normals in " << o.cfg.out_dir
              << "/oriented.ply (no global consistency yet)\n";
    return 0;
}

int cmd_score(const ToolOpts& o, bool dump_only) {
    StageData d = load_and_segment(o.cfg);
    orient_stage(d, o.cfg);
    const BlockGraph bg = score_stage(d, o.cfg, !o.no_cull);
    print_log(d.log);
    if (dump_only) {
        fs::create_directories(o.cfg.out_dir);
        const fs::path dir(o.cfg.out_dir);
        write_oriented((dir / "oriented.ply").string(), d.cloud);
        write_labels((dir / "blocks.txt").string(), d.seg.labels(d.cloud.size()));
        dump_graph((dir / "graph.txt").string(), bg);
        std::cout << "graph (" << bg.node_count << " blocks, " << bg.edges.size()
                  << " edges) in " << o.cfg.out_dir << "; resume with `blockorient solve`\n";
    } else {
        std::printf("%5s %5s %14s %14s %10s %10s\n", "i", "j", "alpha", "alpha_bar", "w_same",
                    "w_diff");
        for (const GraphEdge& e : bg.edges)
            std::printf("%5d %5d %14.3f %14.3f %10.6f %10.6f\n", e.i, e.j, e.alpha, e.alpha_bar,
                        edge_weight(e.alpha, e.alpha_bar, bg.epsilon, true),
                        edge_weight(e.alpha, e.alpha_bar, bg.epsilon, false));
    }
    return 0;
}

int cmd_solve(const ToolOpts& o) {
    const BlockGraph bg = load_graph(o.graph_path);
    std::vector<std::string> log;
    const FlipAssignment flips =
        solve_flips(bg, o.cfg.exact_limit, o.cfg.restarts, o.cfg.seed, &log);
    print_log(log);
    int flipped = 0;
    for (auto b : flips.bits) flipped += b;
    std::printf("flipped %d of %d blocks, objective %.6f\n", flipped, bg.node_count,
                flips.objective);

    const bool apply = !o.cloud_path.empty();
    if (apply != !o.labels_path.empty())
        throw InputError("--apply-cloud and --apply-labels go together");
    if (apply) {
        PointCloud cloud = read_points(o.cloud_path);
        if (!cloud.has_normals()) throw InputError("cloud to apply flips to has no normals");
        const Segmentation seg = seg_from_labels(o.labels_path, cloud.size());
        if (static_cast<int>(seg.blocks.size()) != bg.node_count)
            throw InputError("labels name " + std::to_string(seg.blocks.size()) +
                             " blocks, graph has " + std::to_string(bg.node_count));
        apply_flips(cloud, seg, flips);
        write_oriented(o.apply_out, cloud);
        std::cout << "oriented cloud written to " << o.apply_out << "\n";
    }
    return 0;
}

int cmd_eval(const ToolOpts& o) {
    const PointCloud pred = read_points(o.pred_path);
    const PointCloud gt = read_points(o.gt_path);
    if (!pred.has_normals() || !gt.has_normals())
        throw InputError("both files need normals for evaluation");
    if (pred.size() != gt.size())
        throw InputError("point counts differ: " + std::to_string(pred.size()) + " vs " +
                         std::to_string(gt.size()));

    Segmentation seg;
    const bool per_block = !o.labels_path.empty();
    if (per_block) seg = seg_from_labels(o.labels_path, pred.size());
    const OrientationReport rep =
        incorrect_ratio(pred.normals, gt.normals, per_block ? &seg : nullptr);
    std::printf("incorrect ratio %.4f%%%s\n", rep.incorrect_ratio,
                rep.flipped_gt ? " (gt flipped)" : "");
    std::printf("chamfer distance %.6g\n", chamfer(pred.positions, gt.positions));
    if (per_block)
        for (std::size_t b = 0; b < rep.per_block_ratio.size(); ++b)
            std::printf("block %4zu  %.4f%%\n", b, rep.per_block_ratio[b]);
    return 0;
}

int cmd_gen(const ToolOpts& o) {
    PointCloud cloud;
    TriangleMesh mesh;
    if (o.scene == "room" || o.scene == "plane") {
        if (o.as_mesh) throw InputError("--mesh applies to quadric and s-cylinder only");
        SceneSpec spec;
        if (o.scene == "room") {
            spec = open_room_scene(o.gen_count, o.gen_noise, o.gen_seed);
        } else {
            spec.patches = {{"plane", {-2, -2, 0}, {4, 0, 0}, {0, 4, 0}, {0, 0, 1}}};
            spec.point_count = o.gen_count;
            spec.noise_sigma = o.gen_noise;
            spec.seed = o.gen_seed;
        }
        cloud = build_scene(spec);
    } else if (o.scene == "quadric") {
        QuadricSpec spec;
        spec.kappa1 = o.kappa1;
        spec.kappa2 = o.kappa2;
        spec.extent = o.extent;
        spec.spacing = o.spacing;
        if (o.as_mesh) mesh = quadric_mesh(spec);
        else cloud = sample_quadric(spec);
    } else if (o.scene == "s-cylinder") {
        SCylinderSpec spec;
        spec.amplitude = o.amplitude;
        spec.extent = o.extent;
        spec.spacing = o.spacing;
        if (o.as_mesh) mesh = s_cylinder_mesh(spec);
        else cloud = sample_s_cylinder(spec);
    } else {
        throw InputError("unknown scene '" + o.scene + "' (room|plane|quadric|s-cylinder)");
    }

    if (o.as_mesh) {
        write_mesh_ply(o.gen_out, mesh);
        std::cout << mesh.faces.size() << " faces written to " << o.gen_out << "\n";
    } else {
        if (fs::path(o.gen_out).extension() == ".xyz") write_points_xyz(o.gen_out, cloud);
        else write_oriented(o.gen_out, cloud);
        std::cout << cloud.size() << " points written to " << o.gen_out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orients unoriented point cloud normals block by block:\n"
                 "segment, per-block field+refine init, cross-block visibility\n"
                 "scoring, and a global 0-1 flip solve."};
    app.set_version_flag("--version", "blockorient 0.1.0");
    app.require_subcommand(1);

    ToolOpts o;
    CLI::App* pipeline = app.add_subcommand("pipeline", "Run every stage and write artifacts");
    add_stage_flags(pipeline, o);
    CLI::App* segment = app.add_subcommand("segment", "Segment into connected blocks");
    add_stage_flags(segment, o);
    CLI::App* orient_blocks =
        app.add_subcommand("orient-blocks", "Per-block orientation, no global consistency");
    add_stage_flags(orient_blocks, o);
    CLI::App* score = app.add_subcommand("score", "Print pairwise visibility consistency");
    add_stage_flags(score, o);
    CLI::App* dump = app.add_subcommand("dump-graph", "Write the block graph for later solving");
    add_stage_flags(dump, o);

    CLI::App* solve = app.add_subcommand("solve", "Solve flips from a graph dump");
    solve->add_option("graph", o.graph_path, "Graph dump from dump-graph")->required();
    solve->add_option("--apply-cloud", o.cloud_path, "oriented.ply to apply flips to");
    solve->add_option("--apply-labels", o.labels_path, "blocks.txt matching the cloud");
    solve->add_option("--out", o.apply_out, "Output for the flipped cloud")
        ->default_val("solved.ply");
    solve->add_option("--exact-limit", o.cfg.exact_limit, "Largest component solved exactly");
    solve->add_option("--restarts", o.cfg.restarts, "Local-search restarts");
    solve->add_option("--seed", o.cfg.seed, "Run seed");

    CLI::App* eval = app.add_subcommand("eval", "Compare predicted normals against ground truth");
    eval->add_option("prediction", o.pred_path, "Oriented cloud")->required();
    eval->add_option("truth", o.gt_path, "Same points with ground-truth normals")->required();
    eval->add_option("--labels", o.labels_path, "blocks.txt for per-block ratios");

    CLI::App* gen = app.add_subcommand("gen", "Generate synthetic benchmark geometry");
    gen->add_option("scene", o.scene, "room | plane | quadric | s-cylinder")->required();
    gen->add_option("output", o.gen_out, "Output path (.ply or .xyz)")->required();
    gen->add_option("--count", o.gen_count, "Points to sample (room/plane)");
    gen->add_option("--noise", o.gen_noise, "Positional noise sigma");
    gen->add_option("--seed", o.gen_seed, "Sampling seed");
    gen->add_option("--spacing", o.spacing, "Grid spacing (quadric/s-cylinder)");
    gen->add_option("--kappa1", o.kappa1, "Quadric curvature along x");
    gen->add_option("--kappa2", o.kappa2, "Quadric curvature along y");
    gen->add_option("--amplitude", o.amplitude, "S-cylinder profile amplitude");
    gen->add_option("--extent", o.extent, "Half-extent of the sampled patch");
    gen->add_flag("--mesh", o.as_mesh, "Write the triangulated surface instead of points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!o.cfg.refine.external_cmd.empty()) o.cfg.refine.reconstructor = "external";
        if (app.got_subcommand(pipeline)) return cmd_pipeline(o);
        if (app.got_subcommand(segment)) return cmd_segment(o);
        if (app.got_subcommand(orient_blocks)) return cmd_orient_blocks(o);
        if (app.got_subcommand(score)) return cmd_score(o, false);
        if (app.got_subcommand(dump)) return cmd_score(o, true);
        if (app.got_subcommand(solve)) return cmd_solve(o);
        if (app.got_subcommand(eval)) return cmd_eval(o);
        if (app.got_subcommand(gen)) return cmd_gen(o);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
