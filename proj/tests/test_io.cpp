#include <orient/io.hpp>
#include <orient/rng.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace orient;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() : dir(fs::temp_directory_path() / "orient_io_test") { fs::create_directories(dir); }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("xyz point files") {
    TempDir tmp;

    SECTION("three bare points") {
        const auto p = tmp.file("pts.xyz", "0 0 0\n1 2 2\n3 4 5\n");
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.positions.size() == 3);
        CHECK_FALSE(cloud.has_normals());
        CHECK(cloud.positions[1].y == 2.0);
        CHECK(cloud.positions[2].z == 5.0);
    }

    SECTION("six columns load normals, renormalized") {
        const auto p = tmp.file("pts.xyz", "0 0 0 0 0 2\n1 1 1 3 4 0\n");
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.has_normals());
        CHECK((cloud.normals[0] - Vec3(0, 0, 1)).norm() < 1e-15);
        CHECK((cloud.normals[1] - Vec3(0.6, 0.8, 0)).norm() < 1e-15);
    }

    SECTION("comments and blank lines are fine") {
        const auto p = tmp.file("pts.xyz", "# header\n\n1 2 3\n  \n# mid\n4 5 6\n");
        CHECK(read_points(p).positions.size() == 2);
    }

    SECTION("structured parse failures") {
        CHECK_THROWS_AS(read_points(tmp.path("missing.xyz")), InputError);
        const auto bad = tmp.file("bad.xyz", "1 2 3\nfoo bar\n");
        CHECK_THROWS_WITH(read_points(bad), Catch::Matchers::ContainsSubstring(":2:"));
        const auto four = tmp.file("four.xyz", "1 2 3 4\n");
        CHECK_THROWS_WITH(read_points(four), Catch::Matchers::ContainsSubstring("got 4"));
        const auto empty = tmp.file("empty.xyz", "# nothing\n");
        CHECK_THROWS_AS(read_points(empty), InputError);
    }

    SECTION("mixed normal presence drops normals with a warning") {
        for (const char* body : {"1 2 3 0 0 1\n4 5 6\n", "1 2 3\n4 5 6 0 0 1\n"}) {
            const auto p = tmp.file("mixed.xyz", body);
            std::vector<std::string> warnings;
            const PointCloud cloud = read_points(p, PointFormat::Auto, &warnings);
            CHECK(cloud.positions.size() == 2);
            CHECK_FALSE(cloud.has_normals());
            REQUIRE_FALSE(warnings.empty());
            CHECK(warnings[0].find("mixed normal presence") != std::string::npos);
        }
    }

    SECTION("round trip through write_points_xyz") {
        PointCloud cloud;
        Rng rng = make_rng(4);
        for (int i = 0; i < 20; ++i) {
            cloud.positions.push_back(
                {uniform_real(rng) * 10 - 5, uniform_real(rng), uniform_real(rng)});
            Vec3 n(normal_draw(rng), normal_draw(rng), normal_draw(rng));
            cloud.normals.push_back(n.normalized());
        }
        const auto p = tmp.path("round.xyz");
        write_points_xyz(p, cloud);
        const PointCloud back = read_points(p);
        REQUIRE(back.positions.size() == cloud.positions.size());
        for (std::size_t i = 0; i < cloud.positions.size(); ++i) {
            CHECK((back.positions[i] - cloud.positions[i]).norm() < 1e-7);
            CHECK((back.normals[i] - cloud.normals[i]).norm() < 1e-7);
        }
    }

    SECTION("extension and magic detection") {
        const auto pts = tmp.file("cloud.pts", "1 2 3\n");
        CHECK(read_points(pts).positions.size() == 1);
        // No helpful extension, but the PLY magic wins.
        const auto p = tmp.file("mystery",
                                "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
                                "property float y\nproperty float z\nend_header\n7 8 9\n");
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.positions.size() == 1);
        CHECK(cloud.positions[0].x == 7.0);
    }
}

TEST_CASE("ascii ply point files") {
    TempDir tmp;

    SECTION("normals renormalized, unrelated properties skipped") {
        const auto p = tmp.file("n.ply",
                                "ply\nformat ascii 1.0\ncomment scanned\n"
                                "element vertex 2\n"
                                "property double x\nproperty double y\nproperty double z\n"
                                "property double confidence\n"
                                "property double nx\nproperty double ny\nproperty double nz\n"
                                "end_header\n"
                                "1 2 3 0.5 0 0 5\n4 5 6 0.9 2 0 0\n");
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.positions.size() == 2);
        REQUIRE(cloud.has_normals());
        CHECK((cloud.normals[0] - Vec3(0, 0, 1)).norm() < 1e-15);
        CHECK((cloud.normals[1] - Vec3(1, 0, 0)).norm() < 1e-15);
        CHECK(cloud.positions[1].x == 4.0);
    }

    SECTION("vertices of a mesh file load as points, faces skipped") {
        TriangleMesh mesh;
        mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
        mesh.faces = {{0, 1, 2}};
        mesh.compute_face_data();
        const auto p = tmp.path("tri.ply");
        write_mesh_ply(p, mesh);
        const PointCloud cloud = read_points(p);
        CHECK(cloud.positions.size() == 3);
        CHECK_FALSE(cloud.has_normals());
    }

    SECTION("header failures") {
        CHECK_THROWS_WITH(read_points(tmp.file("m.ply", "not ply\n")),
                          Catch::Matchers::ContainsSubstring("magic"));
        CHECK_THROWS_WITH(
            read_points(tmp.file("b.ply", "ply\nformat binary_big_endian 1.0\nend_header\n")),
            Catch::Matchers::ContainsSubstring("unsupported"));
        CHECK_THROWS_WITH(read_points(tmp.file("k.ply", "ply\nformat ascii 1.0\nbogus\n")),
                          Catch::Matchers::ContainsSubstring("unknown header keyword"));
        CHECK_THROWS_AS(read_points(tmp.file("t.ply", "ply\nformat ascii 1.0\nelement vertex 1\n")),
                        InputError);  // header never ends
        CHECK_THROWS_WITH(
            read_points(tmp.file(
                "noxyz.ply",
                "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n")),
            Catch::Matchers::ContainsSubstring("lacks x/y/z"));
    }

    SECTION("truncated ascii body") {
        const auto p = tmp.file("short.ply",
                                "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                "property float y\nproperty float z\nend_header\n1 2 3\n4 5\n");
        CHECK_THROWS_WITH(read_points(p), Catch::Matchers::ContainsSubstring("truncated"));
    }
}

TEST_CASE("binary little-endian ply") {
    TempDir tmp;
    std::string body =
        "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n";
    const float vals[6] = {1.5f, 2.5f, -3.25f, 0.5f, 0.25f, 8.0f};
    body.append(reinterpret_cast<const char*>(vals), sizeof vals);

    SECTION("reads exact float payloads") {
        const auto p = tmp.file("bin.ply", body);
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.positions.size() == 2);
        CHECK(cloud.positions[0].x == 1.5);
        CHECK(cloud.positions[0].z == -3.25);
        CHECK(cloud.positions[1].y == 0.25);
    }

    SECTION("truncation points at the broken byte offset") {
        const auto p = tmp.file("cut.ply", body.substr(0, body.size() - 5));
        CHECK_THROWS_WITH(read_points(p),
                          Catch::Matchers::ContainsSubstring("truncated binary PLY at byte offset"));
    }
}

TEST_CASE("obj point files") {
    TempDir tmp;

    SECTION("vertices with matching normals") {
        const auto p = tmp.file("m.obj",
                                "# comment\nv 0 0 0\nv 1 0 0\nvn 0 0 2\nvn 0 3 0\nf 1 2 1\n");
        const PointCloud cloud = read_points(p);
        REQUIRE(cloud.positions.size() == 2);
        REQUIRE(cloud.has_normals());
        CHECK((cloud.normals[0] - Vec3(0, 0, 1)).norm() < 1e-15);
        CHECK((cloud.normals[1] - Vec3(0, 1, 0)).norm() < 1e-15);
    }

    SECTION("count mismatch drops normals with a warning") {
        const auto p = tmp.file("mm.obj", "v 0 0 0\nv 1 0 0\nvn 0 0 1\n");
        std::vector<std::string> warnings;
        const PointCloud cloud = read_points(p, PointFormat::Auto, &warnings);
        CHECK_FALSE(cloud.has_normals());
        REQUIRE_FALSE(warnings.empty());
        CHECK(warnings[0].find("mismatch") != std::string::npos);
    }

    SECTION("failures") {
        CHECK_THROWS_WITH(read_points(tmp.file("bad.obj", "v 0 0 0\nv 1 oops 0\n")),
                          Catch::Matchers::ContainsSubstring(":2:"));
        CHECK_THROWS_AS(read_points(tmp.file("e.obj", "# nothing here\n")), InputError);
    }
}

TEST_CASE("write_oriented emits normals and optional correctness colors") {
    TempDir tmp;
    PointCloud cloud;
    cloud.positions = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    cloud.normals = {{0, 0, 1}, {0, 0, -1}, {1, 0, 0}};

    SECTION("plain round trip") {
        const auto p = tmp.path("out.ply");
        write_oriented(p, cloud);
        const PointCloud back = read_points(p);
        REQUIRE(back.positions.size() == 3);
        REQUIRE(back.has_normals());
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK((back.positions[i] - cloud.positions[i]).norm() < 1e-7);
            CHECK((back.normals[i] - cloud.normals[i]).norm() < 1e-7);
        }
    }

    SECTION("blue for correct, red for incorrect") {
        const auto p = tmp.path("colored.ply");
        const std::vector<std::uint8_t> correct = {1, 0, 1};
        write_oriented(p, cloud, &correct);
        const std::string text = slurp(p);
        CHECK(text.find("property uchar red") != std::string::npos);
        CHECK(text.find("property uchar blue") != std::string::npos);
        CHECK(text.find(" 0 0 255") != std::string::npos);
        CHECK(text.find(" 255 0 0") != std::string::npos);
        // Still loadable as an oriented cloud.
        const PointCloud back = read_points(p);
        CHECK(back.has_normals());
    }

    SECTION("failures") {
        PointCloud bare;
        bare.positions = cloud.positions;
        CHECK_THROWS_AS(write_oriented(tmp.path("x.ply"), bare), Error);
        const std::vector<std::uint8_t> wrong = {1};
        CHECK_THROWS_AS(write_oriented(tmp.path("x.ply"), cloud, &wrong), Error);
    }
}

TEST_CASE("mesh ply round trip and fan triangulation") {
    TempDir tmp;

    SECTION("round trip") {
        TriangleMesh mesh;
        mesh.vertices = {{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}};
        mesh.faces = {{0, 1, 2}, {0, 2, 3}};
        mesh.compute_face_data();
        const auto p = tmp.path("quad.ply");
        write_mesh_ply(p, mesh);
        const TriangleMesh back = read_mesh_ply(p);
        REQUIRE(back.vertices.size() == 4);
        REQUIRE(back.faces.size() == 2);
        CHECK(back.faces == mesh.faces);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK((back.vertices[i] - mesh.vertices[i]).norm() == 0.0);
        CHECK(back.face_normals[0].z == Approx(1.0));
    }

    SECTION("quad faces are fan-triangulated") {
        const auto p = tmp.file("fan.ply",
                                "ply\nformat ascii 1.0\nelement vertex 4\n"
                                "property float x\nproperty float y\nproperty float z\n"
                                "element face 1\nproperty list uchar int vertex_indices\n"
                                "end_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
        const TriangleMesh mesh = read_mesh_ply(p);
        REQUIRE(mesh.faces.size() == 2);
        CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
        CHECK(mesh.faces[1] == std::array<int, 3>{0, 2, 3});
    }

    SECTION("degenerate face list") {
        const auto p = tmp.file("bad.ply",
                                "ply\nformat ascii 1.0\nelement vertex 3\n"
                                "property float x\nproperty float y\nproperty float z\n"
                                "element face 1\nproperty list uchar int vertex_indices\n"
                                "end_header\n0 0 0\n1 0 0\n1 1 0\n2 0 1\n");
        CHECK_THROWS_WITH(read_mesh_ply(p), Catch::Matchers::ContainsSubstring("fewer than 3"));
    }

    SECTION("out-of-range face index is caught by validation") {
        const auto p = tmp.file("oob.ply",
                                "ply\nformat ascii 1.0\nelement vertex 3\n"
                                "property float x\nproperty float y\nproperty float z\n"
                                "element face 1\nproperty list uchar int vertex_indices\n"
                                "end_header\n0 0 0\n1 0 0\n1 1 0\n3 0 1 7\n");
        CHECK_THROWS_AS(read_mesh_ply(p), Error);
    }
}

TEST_CASE("write_labels emits one integer per line") {
    TempDir tmp;
    const auto p = tmp.path("labels.txt");
    write_labels(p, {0, 2, 1});
    CHECK(slurp(p) == "0\n2\n1\n");
}
