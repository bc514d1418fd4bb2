#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "orient/error.hpp"
#include "orient/mesh.hpp"
#include "orient/point_cloud.hpp"

namespace orient {

enum class PointFormat { Auto, Ply, Obj, Xyz };

namespace detail {

inline std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --- PLY ---------------------------------------------------------------

enum PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline int ply_type_size(int t) {
    static const int sizes[] = {1, 1, 2, 2, 4, 4, 4, 8};
    return sizes[t];
}

inline int ply_type_from(const std::string& s, const std::string& path) {
    if (s == "char" || s == "int8") return kInt8;
    if (s == "uchar" || s == "uint8") return kUint8;
    if (s == "short" || s == "int16") return kInt16;
    if (s == "ushort" || s == "uint16") return kUint16;
    if (s == "int" || s == "int32") return kInt32;
    if (s == "uint" || s == "uint32") return kUint32;
    if (s == "float" || s == "float32") return kFloat32;
    if (s == "double" || s == "float64") return kFloat64;
    throw InputError(path + ": unknown PLY property type '" + s + "'");
}

struct PlyProperty {
    std::string name;
    int type = kFloat32;
    bool is_list = false;
    int count_type = kUint8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
    std::size_t body_offset = 0;  // into the raw file bytes
    std::size_t header_lines = 0;
};

inline PlyHeader parse_ply_header(const std::string& raw, const std::string& path) {
    PlyHeader h;
    std::size_t pos = 0, line_no = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= raw.size()) throw InputError(path + ": unexpected end of PLY header");
        const auto nl = raw.find('\n', pos);
        std::string line = raw.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? raw.size() : nl + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        return line;
    };
    if (next_line() != "ply") throw InputError(path + ": not a PLY file (missing magic)");
    bool have_format = false;
    for (;;) {
        const std::string line = next_line();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word == "obj_info" || word.empty()) continue;
        if (word == "format") {
            std::string kind, version;
            ls >> kind >> version;
            if (kind == "ascii")
                h.binary = false;
            else if (kind == "binary_little_endian")
                h.binary = true;
            else
                throw InputError(path + ":" + std::to_string(line_no) + ": unsupported PLY format '" +
                                 kind + "'");
            have_format = true;
        } else if (word == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            if (ls.fail())
                throw InputError(path + ":" + std::to_string(line_no) + ": malformed element line");
            h.elements.push_back(e);
        } else if (word == "property") {
            if (h.elements.empty())
                throw InputError(path + ":" + std::to_string(line_no) + ": property before element");
            PlyProperty p;
            std::string t;
            ls >> t;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                p.is_list = true;
                p.count_type = ply_type_from(ct, path);
                p.type = ply_type_from(it, path);
            } else {
                p.type = ply_type_from(t, path);
                ls >> p.name;
            }
            if (ls.fail() || p.name.empty())
                throw InputError(path + ":" + std::to_string(line_no) + ": malformed property line");
            h.elements.back().props.push_back(p);
        } else if (word == "end_header") {
            break;
        } else {
            throw InputError(path + ":" + std::to_string(line_no) + ": unknown header keyword '" +
                             word + "'");
        }
    }
    if (!have_format) throw InputError(path + ": PLY header missing format line");
    h.body_offset = pos;
    h.header_lines = line_no;
    return h;
}

/// Cursor over the PLY body, hiding ascii-vs-binary and endianness.
class PlyCursor {
public:
    PlyCursor(const std::string& raw, const PlyHeader& h, const std::string& path)
        : raw_(raw), path_(path), binary_(h.binary), pos_(h.body_offset), line_(h.header_lines) {}

    double value(int type) {
        return binary_ ? binary_value(type) : ascii_value();
    }

    std::size_t list_count(int type) {
        const double v = value(type);
        if (v < 0) throw InputError(path_ + ": negative PLY list count");
        return static_cast<std::size_t>(v);
    }

private:
    double ascii_value() {
        while (pos_ < raw_.size() && std::isspace(static_cast<unsigned char>(raw_[pos_]))) {
            if (raw_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ >= raw_.size())
            throw InputError(path_ + ":" + std::to_string(line_ + 1) + ": truncated PLY body");
        const char* begin = raw_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin)
            throw InputError(path_ + ":" + std::to_string(line_ + 1) + ": malformed PLY value");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    double binary_value(int type) {
        const std::size_t sz = static_cast<std::size_t>(ply_type_size(type));
        if (pos_ + sz > raw_.size())
            throw InputError(path_ + ": truncated binary PLY at byte offset " + std::to_string(pos_));
        const char* p = raw_.data() + pos_;
        pos_ += sz;
        // Little-endian host assumed (x86/arm64); bytes copied as-is.
        switch (type) {
            case kInt8: return static_cast<double>(static_cast<std::int8_t>(*p));
            case kUint8: return static_cast<double>(static_cast<std::uint8_t>(*p));
            case kInt16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
            case kUint16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
            case kInt32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
            case kUint32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
            case kFloat32: { float v; std::memcpy(&v, p, 4); return v; }
            default: { double v; std::memcpy(&v, p, 8); return v; }
        }
    }

    const std::string& raw_;
    const std::string& path_;
    bool binary_;
    std::size_t pos_;
    std::size_t line_;
};

}  // namespace detail

inline PointFormat detect_format(const std::string& path, const std::string& head) {
    const std::string ext = detail::lower_ext(path);
    if (ext == "ply") return PointFormat::Ply;
    if (ext == "obj") return PointFormat::Obj;
    if (ext == "xyz" || ext == "txt" || ext == "pts") return PointFormat::Xyz;
    if (head.rfind("ply", 0) == 0) return PointFormat::Ply;
    return PointFormat::Xyz;
}

/// Positions plus optional normals from PLY (ascii / binary little-endian),
/// OBJ, or whitespace XYZ. Normals are renormalized on load; per-file mixed
/// presence (some records with, some without) drops normals with a warning.
inline PointCloud read_points(const std::string& path, PointFormat format = PointFormat::Auto,
                              std::vector<std::string>* warnings = nullptr) {
    const std::string raw = detail::read_file(path);
    if (format == PointFormat::Auto) format = detect_format(path, raw.substr(0, 8));
    PointCloud cloud;
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(path + ": " + msg);
    };

    if (format == PointFormat::Ply) {
        const auto header = detail::parse_ply_header(raw, path);
        detail::PlyCursor cur(raw, header, path);
        for (const auto& elem : header.elements) {
            const bool is_vertex = elem.name == "vertex";
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
            for (std::size_t p = 0; p < elem.props.size(); ++p) {
                const auto& name = elem.props[p].name;
                if (name == "x") ix = static_cast<int>(p);
                else if (name == "y") iy = static_cast<int>(p);
                else if (name == "z") iz = static_cast<int>(p);
                else if (name == "nx") inx = static_cast<int>(p);
                else if (name == "ny") iny = static_cast<int>(p);
                else if (name == "nz") inz = static_cast<int>(p);
            }
            if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
                throw InputError(path + ": PLY vertex element lacks x/y/z");
            const bool has_n = inx >= 0 && iny >= 0 && inz >= 0;
            std::vector<double> record(elem.props.size());
            for (std::size_t i = 0; i < elem.count; ++i) {
                for (std::size_t p = 0; p < elem.props.size(); ++p) {
                    if (elem.props[p].is_list) {
                        const std::size_t cnt = cur.list_count(elem.props[p].count_type);
                        for (std::size_t j = 0; j < cnt; ++j) cur.value(elem.props[p].type);
                        record[p] = 0.0;
                    } else {
                        record[p] = cur.value(elem.props[p].type);
                    }
                }
                if (is_vertex) {
                    cloud.positions.emplace_back(record[ix], record[iy], record[iz]);
                    if (has_n) cloud.normals.emplace_back(record[inx], record[iny], record[inz]);
                }
            }
        }
        if (cloud.positions.empty()) throw InputError(path + ": PLY contains no vertices");
    } else if (format == PointFormat::Obj) {
        std::istringstream in(raw);
        std::string line;
        std::size_t line_no = 0;
        std::vector<Vec3> vn;
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "v" || tag == "vn") {
                double a, b, c;
                ls >> a >> b >> c;
                if (ls.fail())
                    throw InputError(path + ":" + std::to_string(line_no) + ": malformed " + tag +
                                     " line");
                if (tag == "v")
                    cloud.positions.emplace_back(a, b, c);
                else
                    vn.emplace_back(a, b, c);
            }
        }
        if (cloud.positions.empty()) throw InputError(path + ": OBJ contains no vertices");
        if (!vn.empty()) {
            if (vn.size() == cloud.positions.size())
                cloud.normals = std::move(vn);
            else
                warn("vertex/normal count mismatch; normals dropped");
        }
    } else {
        std::istringstream in(raw);
        std::string line;
        std::size_t line_no = 0;
        int width = 0;  // 3 or 6, fixed by the first data line
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ls(line);
            double v[6];
            int got = 0;
            while (got < 6 && (ls >> v[got])) ++got;
            if (got == 0) {
                // allow blank lines and #-comments
                std::string head;
                std::istringstream(line) >> head;
                if (head.empty() || head[0] == '#') continue;
                throw InputError(path + ":" + std::to_string(line_no) + ": malformed XYZ line");
            }
            if (got != 3 && got != 6)
                throw InputError(path + ":" + std::to_string(line_no) +
                                 ": expected 3 or 6 columns, got " + std::to_string(got));
            if (width == 0) width = got;
            if (got != width) {
                if (width == 6) {
                    warn("mixed normal presence; normals dropped");
                    cloud.normals.clear();
                    width = 3;
                } else {
                    warn("mixed normal presence; normals dropped");
                }
            }
            cloud.positions.emplace_back(v[0], v[1], v[2]);
            if (width == 6 && got == 6) cloud.normals.emplace_back(v[3], v[4], v[5]);
        }
        if (cloud.positions.empty()) throw InputError(path + ": no points parsed");
        if (!cloud.normals.empty() && cloud.normals.size() != cloud.positions.size()) {
            warn("mixed normal presence; normals dropped");
            cloud.normals.clear();
        }
    }

    for (auto& n : cloud.normals) {
        const double len = n.norm();
        if (len > 1e-300) n /= len;
    }
    return cloud;
}

/// Oriented output: ascii PLY with normals; when per-point correctness labels
/// are given, vertices are colored blue (correct) / red (incorrect).
inline void write_oriented(const std::string& path, const PointCloud& cloud,
                           const std::vector<std::uint8_t>* correct = nullptr) {
    if (!cloud.has_normals()) throw Error("write_oriented: cloud has no normals");
    if (correct && correct->size() != cloud.size())
        throw Error("write_oriented: label count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_oriented: cannot open " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nproperty double nx\n"
           "property double ny\nproperty double nz\n";
    if (correct)
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";
    char buf[256];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        const Vec3& n = cloud.normals[i];
        std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g", p.x, p.y, p.z, n.x, n.y,
                      n.z);
        out << buf;
        if (correct) out << ((*correct)[i] ? " 0 0 255" : " 255 0 0");
        out << '\n';
    }
    if (!out) throw Error("write_oriented: write failed for " + path);
}

/// Point file for the external reconstructor: ascii PLY with float64 normals.
inline void write_points_ply(const std::string& path, const std::vector<Vec3>& positions,
                             const std::vector<Vec3>& normals) {
    PointCloud c;
    c.positions = positions;
    c.normals = normals;
    write_oriented(path, c);
}

/// XYZ writer (positions, optional normals), used by `gen` and debug dumps.
inline void write_points_xyz(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_points_xyz: cannot open " + path);
    char buf[256];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.positions[i];
        if (cloud.has_normals()) {
            const Vec3& n = cloud.normals[i];
            std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g\n", p.x, p.y, p.z, n.x,
                          n.y, n.z);
        } else {
            std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
        }
        out << buf;
    }
    if (!out) throw Error("write_points_xyz: write failed for " + path);
}

/// Triangle mesh from a PLY file (the external reconstructor contract).
inline TriangleMesh read_mesh_ply(const std::string& path) {
    const std::string raw = detail::read_file(path);
    const auto header = detail::parse_ply_header(raw, path);
    detail::PlyCursor cur(raw, header, path);
    TriangleMesh mesh;
    for (const auto& elem : header.elements) {
        const bool is_vertex = elem.name == "vertex";
        const bool is_face = elem.name == "face";
        int ix = -1, iy = -1, iz = -1, ilist = -1;
        for (std::size_t p = 0; p < elem.props.size(); ++p) {
            const auto& name = elem.props[p].name;
            if (name == "x") ix = static_cast<int>(p);
            else if (name == "y") iy = static_cast<int>(p);
            else if (name == "z") iz = static_cast<int>(p);
            else if (elem.props[p].is_list && (name == "vertex_indices" || name == "vertex_index"))
                ilist = static_cast<int>(p);
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
            throw InputError(path + ": PLY vertex element lacks x/y/z");
        if (is_face && ilist < 0)
            throw InputError(path + ": PLY face element lacks vertex_indices");
        std::vector<double> record(elem.props.size());
        std::vector<int> poly;
        for (std::size_t i = 0; i < elem.count; ++i) {
            poly.clear();
            for (std::size_t p = 0; p < elem.props.size(); ++p) {
                if (elem.props[p].is_list) {
                    const std::size_t cnt = cur.list_count(elem.props[p].count_type);
                    for (std::size_t j = 0; j < cnt; ++j) {
                        const double v = cur.value(elem.props[p].type);
                        if (is_face && static_cast<int>(p) == ilist)
                            poly.push_back(static_cast<int>(v));
                    }
                } else {
                    record[p] = cur.value(elem.props[p].type);
                }
            }
            if (is_vertex) mesh.vertices.emplace_back(record[ix], record[iy], record[iz]);
            if (is_face) {
                if (poly.size() < 3)
                    throw InputError(path + ": PLY face with fewer than 3 vertices");
                for (std::size_t t = 1; t + 1 < poly.size(); ++t)  // fan-triangulate
                    mesh.faces.push_back({poly[0], poly[t], poly[t + 1]});
            }
        }
    }
    mesh.validate();
    mesh.compute_face_data();
    return mesh;
}

inline void write_mesh_ply(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_mesh_ply: cannot open " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nelement face "
        << mesh.faces.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    if (!out) throw Error("write_mesh_ply: write failed for " + path);
}

/// One integer label per line (block ids, correctness flags, ...).
inline void write_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_labels: cannot open " + path);
    for (int v : labels) out << v << '\n';
    if (!out) throw Error("write_labels: write failed for " + path);
}

}  // namespace orient
