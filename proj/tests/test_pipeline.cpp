#include <orient/io.hpp>
#include <orient/pipeline.hpp>
#include <orient/synth.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace orient;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() : dir(fs::temp_directory_path() / "orient_pipeline_test") {
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SceneSpec plane_spec(int count, std::uint64_t seed) {
    SceneSpec spec;
    spec.patches.push_back({"plane", {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    spec.point_count = count;
    spec.seed = seed;
    return spec;
}

// Floor plus a back wall, normals on the concave side, sharing the y = 1 fold.
SceneSpec dihedral_spec(int count, std::uint64_t seed) {
    SceneSpec spec;
    spec.patches.push_back({"floor", {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    spec.patches.push_back({"wall", {0, 1, 0}, {1, 0, 0}, {0, 0, 1}, {0, -1, 0}});
    spec.point_count = count;
    spec.seed = seed;
    return spec;
}

PipelineConfig small_config(int blocks, int resolution) {
    PipelineConfig cfg;
    cfg.block_count = blocks;
    cfg.resolution = resolution;
    cfg.refine.max_iters = 6;
    return cfg;
}

bool log_mentions(const PipelineResult& result, const std::string& needle) {
    for (const auto& line : result.log)
        if (line.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("config defaults and validation") {
    const PipelineConfig cfg;
    CHECK(cfg.out_dir == "orient_out");
    CHECK(cfg.block_count == 200);
    CHECK(cfg.knn_k == 10);
    CHECK(cfg.dipole_c == 4.0);
    CHECK(cfg.passes == 5);
    CHECK(cfg.resolution == 400);
    CHECK(cfg.exact_limit == 28);
    CHECK(cfg.restarts == 32);
    CHECK(cfg.seed == 0);
    CHECK(cfg.splat_radius_factor == 1.5);
    CHECK(cfg.cull_partial);
    CHECK(cfg.refine.max_iters == 20);
    CHECK_NOTHROW(cfg.validate());

    PipelineConfig bad = cfg;
    bad.block_count = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.knn_k = 2;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cfg;
    bad.resolution = 8;
    CHECK_THROWS_AS(bad.validate(), InputError);

    // More neighbors requested than points exist.
    PointCloud tiny = build_scene(plane_spec(5, 1));
    CHECK_THROWS_AS(run_pipeline(tiny, cfg), InputError);
}

TEST_CASE("flat plane comes out consistently oriented") {
    const PointCloud scene = build_scene(plane_spec(2000, 7));
    const PipelineResult result = run_pipeline(scene, small_config(6, 128));

    REQUIRE(result.has_gt);
    CHECK(result.report.incorrect_ratio <= 0.5);
    CHECK(result.discarded_fraction == 0.0);
    CHECK(result.cloud.size() == 2000);
    CHECK(result.seg.blocks.size() >= 2);
    CHECK(result.graph.node_count == static_cast<int>(result.seg.blocks.size()));
    CHECK_FALSE(result.graph.edges.empty());
    CHECK(result.flips.bits.size() == result.seg.blocks.size());
    CHECK(log_mentions(result, "segmented into"));
    CHECK(log_mentions(result, "incorrect ratio"));

    // Every stage shows up in the timing table.
    std::vector<std::string> stages;
    for (const auto& [name, sec] : result.timings) {
        stages.push_back(name);
        CHECK(sec >= 0.0);
    }
    for (const char* want : {"segmentation", "block_orientation", "vcr_scoring", "flip_solve"})
        CHECK(std::find(stages.begin(), stages.end(), want) != stages.end());
}

TEST_CASE("folded sheet crosses the crease without flips") {
    const PointCloud scene = build_scene(dihedral_spec(3000, 11));
    const PipelineResult result = run_pipeline(scene, small_config(8, 160));
    REQUIRE(result.has_gt);
    CHECK(result.report.incorrect_ratio <= 5.0);
    // Orientation is reported per block too.
    CHECK(result.report.per_block_ratio.size() == result.seg.blocks.size());
}

TEST_CASE("input without ground truth still orients, report omits the ratio") {
    PointCloud scene = build_scene(plane_spec(1500, 3));
    scene.normals.clear();
    scene.gt_normals.clear();
    PipelineConfig cfg = small_config(4, 100);
    const PipelineResult result = run_pipeline(scene, cfg);

    CHECK_FALSE(result.has_gt);
    CHECK(result.report.correct.empty());
    REQUIRE(result.cloud.has_normals());
    for (const Vec3& n : result.cloud.normals) CHECK(n.norm() == Approx(1.0).margin(1e-9));

    TempDir tmp;
    cfg.out_dir = tmp.path("no_gt");
    write_pipeline_artifacts(result, cfg);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "oriented.ply"));
    const std::string report = slurp((fs::path(cfg.out_dir) / "report.txt").string());
    CHECK(report.find("points 1500") != std::string::npos);
    CHECK(report.find("incorrect_ratio_percent") == std::string::npos);
    // No correctness labels means no color channel in the cloud.
    const std::string ply = slurp((fs::path(cfg.out_dir) / "oriented.ply").string());
    CHECK(ply.find("property uchar red") == std::string::npos);
}

TEST_CASE("distant island is discarded, the rest is processed") {
    SceneSpec spec;
    spec.patches.push_back({"main", {0, 0, 0}, {2, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    spec.patches.push_back({"island", {100, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    spec.point_count = 1000;
    spec.seed = 5;
    const PointCloud scene = build_scene(spec);

    const PipelineResult result = run_pipeline(scene, small_config(5, 100));
    CHECK(result.cloud.size() < 1000);
    CHECK(result.cloud.size() >= 600);
    CHECK(result.discarded_fraction ==
          Approx(1.0 - result.cloud.size() / 1000.0).margin(1e-12));
    for (const Vec3& p : result.cloud.positions) CHECK(p.x < 50.0);
    CHECK(log_mentions(result, "kept largest component"));
    CHECK(log_mentions(result, "discarded secondary component"));
    CHECK(result.report.incorrect_ratio <= 1.0);
}

TEST_CASE("identical input and seed give identical artifacts") {
    const SceneSpec spec = plane_spec(1200, 21);
    const PipelineConfig base = small_config(4, 100);

    TempDir tmp;
    std::vector<std::string> dirs;
    std::vector<PipelineResult> results;
    for (int run = 0; run < 2; ++run) {
        PipelineConfig cfg = base;
        cfg.out_dir = tmp.path("run" + std::to_string(run));
        const PointCloud scene = build_scene(spec);
        results.push_back(run_pipeline(scene, cfg));
        write_pipeline_artifacts(results.back(), cfg);
        dirs.push_back(cfg.out_dir);
    }

    // report.txt contains wall-clock timings; everything else must match bytes.
    for (const char* name : {"oriented.ply", "blocks.txt", "graph.txt"}) {
        const std::string a = slurp((fs::path(dirs[0]) / name).string());
        const std::string b = slurp((fs::path(dirs[1]) / name).string());
        REQUIRE_FALSE(a.empty());
        CHECK(a == b);
    }
    CHECK(results[0].flips.bits == results[1].flips.bits);
    CHECK(results[0].report.incorrect_ratio == results[1].report.incorrect_ratio);
    REQUIRE(results[0].cloud.size() == results[1].cloud.size());
    for (std::size_t i = 0; i < results[0].cloud.size(); ++i)
        CHECK((results[0].cloud.normals[i] - results[1].cloud.normals[i]).norm() == 0.0);
}

TEST_CASE("file input: stored normals become the evaluation reference") {
    TempDir tmp;
    const PointCloud scene = build_scene(plane_spec(1500, 9));
    const std::string input = tmp.path("plane.xyz");
    write_points_xyz(input, scene);

    PipelineConfig cfg = small_config(4, 100);
    cfg.input_path = input;
    cfg.out_dir = tmp.path("run");
    const PipelineResult result = run_pipeline_file(cfg);
    REQUIRE(result.has_gt);
    CHECK(result.report.incorrect_ratio <= 0.5);

    write_pipeline_artifacts(result, cfg);
    const std::string report = slurp((fs::path(cfg.out_dir) / "report.txt").string());
    CHECK(report.find("incorrect_ratio_percent") != std::string::npos);
    const std::string ply = slurp((fs::path(cfg.out_dir) / "oriented.ply").string());
    CHECK(ply.find("property uchar red") != std::string::npos);

    // blocks.txt carries one label per point.
    std::istringstream labels(slurp((fs::path(cfg.out_dir) / "blocks.txt").string()));
    std::size_t lines = 0;
    for (std::string line; std::getline(labels, line);) ++lines;
    CHECK(lines == result.cloud.size());

    // The scored graph reloads to the same edges.
    const BlockGraph graph = load_graph((fs::path(cfg.out_dir) / "graph.txt").string());
    REQUIRE(graph.edges.size() == result.graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        CHECK(graph.edges[e].i == result.graph.edges[e].i);
        CHECK(graph.edges[e].alpha == result.graph.edges[e].alpha);
        CHECK(graph.edges[e].alpha_bar == result.graph.edges[e].alpha_bar);
    }
}
