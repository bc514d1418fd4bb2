#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "orient/error.hpp"
#include "orient/vec3.hpp"

namespace orient {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec3> face_normals;   // unit for non-degenerate faces, else zero
    std::vector<double> face_areas;

    std::size_t face_count() const { return faces.size(); }
    bool empty() const { return faces.empty(); }

    Vec3 face_centroid(int f) const {
        const auto& t = faces[f];
        return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
    }

    /// Fill face_normals / face_areas from the winding. Degenerate faces get
    /// zero normal and zero area.
    void compute_face_data() {
        face_normals.resize(faces.size());
        face_areas.resize(faces.size());
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const auto& t = faces[f];
            const Vec3 c = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
            const double len = c.norm();
            face_areas[f] = 0.5 * len;
            face_normals[f] = len > 1e-300 ? c / len : Vec3(0, 0, 0);
        }
    }

    void validate() const {
        const int nv = static_cast<int>(vertices.size());
        for (const auto& t : faces)
            for (int v : t)
                if (v < 0 || v >= nv) throw Error("mesh: face vertex index out of range");
        if (!face_normals.empty() && face_normals.size() != faces.size())
            throw Error("mesh: face data size mismatch");
    }

    /// Faces owning at least one edge that no other face shares.
    std::vector<char> boundary_faces() const {
        std::map<std::pair<int, int>, int> edge_count;
        auto key = [](int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); };
        for (const auto& t : faces)
            for (int e = 0; e < 3; ++e) ++edge_count[key(t[e], t[(e + 1) % 3])];
        std::vector<char> boundary(faces.size(), 0);
        for (std::size_t f = 0; f < faces.size(); ++f)
            for (int e = 0; e < 3; ++e)
                if (edge_count[key(faces[f][e], faces[f][(e + 1) % 3])] == 1) {
                    boundary[f] = 1;
                    break;
                }
        return boundary;
    }

    /// Keep the faces whose flag is set; vertices are left untouched.
    void keep_faces(const std::vector<char>& keep) {
        std::vector<std::array<int, 3>> nf;
        std::vector<Vec3> nn;
        std::vector<double> na;
        for (std::size_t f = 0; f < faces.size(); ++f) {
            if (!keep[f]) continue;
            nf.push_back(faces[f]);
            if (!face_normals.empty()) nn.push_back(face_normals[f]);
            if (!face_areas.empty()) na.push_back(face_areas[f]);
        }
        faces = std::move(nf);
        face_normals = std::move(nn);
        face_areas = std::move(na);
    }
};

}  // namespace orient
