#include "craniomorph/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "craniomorph/error.hpp"

namespace craniomorph {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
    throw FormatError(path + ":" + std::to_string(line) + ": " + what);
}

// OBJ face tokens come as i, i/t, i//n or i/t/n; only the vertex index matters.
int parse_obj_index(const std::string& tok, int nv, const std::string& path, int line) {
    size_t slash = tok.find('/');
    std::string head = (slash == std::string::npos) ? tok : tok.substr(0, slash);
    int idx = 0;
    try {
        idx = std::stoi(head);
    } catch (...) {
        fail(path, line, "bad face index '" + tok + "'");
    }
    if (idx < 0) idx = nv + idx + 1;  // negative indices count from the end
    if (idx < 1 || idx > nv) fail(path, line, "face index " + head + " out of range (have " +
                                              std::to_string(nv) + " vertices)");
    return idx - 1;
}

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    TriMesh m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) fail(path, lineno, "vertex needs 3 coordinates");
            m.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) idx.push_back(parse_obj_index(tok, m.n_vertices(), path, lineno));
            if (idx.size() < 3) fail(path, lineno, "face needs at least 3 indices");
            // fan-triangulate polygons
            for (size_t k = 1; k + 1 < idx.size(); ++k)
                m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
        // all other records ignored
    }
    return m;
}

struct PlyProperty {
    std::string type;       // scalar type, or list count type
    std::string list_type;  // element type when list
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    long count = 0;
    std::vector<PlyProperty> props;
};

size_t ply_type_size(const std::string& t, const std::string& path, int line) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64" || t == "int64" || t == "uint64") return 8;
    fail(path, line, "unknown PLY type '" + t + "'");
}

double read_binary_scalar(std::istream& in, const std::string& type, const std::string& path) {
    unsigned char buf[8];
    size_t n = ply_type_size(type, path, 0);
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    if (!in) throw FormatError(path + ": truncated binary payload");
    auto le = [&](auto value) {
        std::memcpy(&value, buf, sizeof(value));
        return value;
    };
    if (type == "char" || type == "int8") return static_cast<double>(le(std::int8_t{}));
    if (type == "uchar" || type == "uint8") return static_cast<double>(le(std::uint8_t{}));
    if (type == "short" || type == "int16") return static_cast<double>(le(std::int16_t{}));
    if (type == "ushort" || type == "uint16") return static_cast<double>(le(std::uint16_t{}));
    if (type == "int" || type == "int32") return static_cast<double>(le(std::int32_t{}));
    if (type == "uint" || type == "uint32") return static_cast<double>(le(std::uint32_t{}));
    if (type == "int64") return static_cast<double>(le(std::int64_t{}));
    if (type == "uint64") return static_cast<double>(le(std::uint64_t{}));
    if (type == "float" || type == "float32") return static_cast<double>(le(float{}));
    return le(double{});
}

TriMesh load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    int lineno = 0;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) fail(path, lineno, "unexpected end of header");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };
    if (next_line() != "ply") fail(path, lineno, "missing 'ply' magic");
    bool binary = false;
    std::vector<PlyElement> elements;
    while (true) {
        std::istringstream ss(next_line());
        std::string tag;
        ss >> tag;
        if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii")
                binary = false;
            else if (fmt == "binary_little_endian")
                binary = true;
            else
                fail(path, lineno, "unsupported PLY format '" + fmt + "'");
        } else if (tag == "element") {
            PlyElement e;
            if (!(ss >> e.name >> e.count)) fail(path, lineno, "bad element record");
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) fail(path, lineno, "property before element");
            PlyProperty p;
            std::string t;
            ss >> t;
            if (t == "list") {
                p.is_list = true;
                if (!(ss >> p.type >> p.list_type >> p.name))
                    fail(path, lineno, "bad list property");
            } else {
                p.type = t;
                if (!(ss >> p.name)) fail(path, lineno, "bad property");
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        } else {
            fail(path, lineno, "unknown header record '" + tag + "'");
        }
    }

    TriMesh m;
    auto read_ascii_scalar = [&](std::istringstream& ss) -> double {
        double v;
        if (!(ss >> v)) fail(path, lineno, "short data row");
        return v;
    };
    for (const auto& e : elements) {
        bool is_vertex = (e.name == "vertex");
        bool is_face = (e.name == "face");
        for (long i = 0; i < e.count; ++i) {
            std::istringstream ss;
            if (!binary) {
                ss.str(next_line());
            }
            Eigen::Vector3d v = Eigen::Vector3d::Zero();
            std::vector<int> face;
            for (const auto& p : e.props) {
                if (p.is_list) {
                    long cnt = static_cast<long>(binary ? read_binary_scalar(in, p.type, path)
                                                        : read_ascii_scalar(ss));
                    std::vector<double> vals(static_cast<size_t>(cnt));
                    for (auto& x : vals)
                        x = binary ? read_binary_scalar(in, p.list_type, path)
                                   : read_ascii_scalar(ss);
                    if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
                        face.assign(vals.size(), 0);
                        for (size_t k = 0; k < vals.size(); ++k)
                            face[k] = static_cast<int>(vals[k]);
                    }
                } else {
                    double x = binary ? read_binary_scalar(in, p.type, path)
                                      : read_ascii_scalar(ss);
                    if (is_vertex) {
                        if (p.name == "x") v.x() = x;
                        else if (p.name == "y") v.y() = x;
                        else if (p.name == "z") v.z() = x;
                    }
                }
            }
            if (is_vertex) m.vertices.push_back(v);
            if (is_face) {
                if (face.size() < 3) fail(path, lineno, "face with fewer than 3 indices");
                for (size_t k = 1; k + 1 < face.size(); ++k)
                    m.triangles.push_back({face[0], face[k], face[k + 1]});
            }
        }
    }
    return m;
}

}  // namespace

MeshFormat mesh_format_from_path(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = (dot == std::string::npos) ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == "obj") return MeshFormat::OBJ;
    if (ext == "ply") return MeshFormat::PLY;
    throw UsageError("cannot infer mesh format from '" + path + "' (use .obj or .ply)");
}

TriMesh load_mesh(const std::string& path, MeshFormat format, int* dropped) {
    TriMesh m = (format == MeshFormat::OBJ) ? load_obj(path) : load_ply(path);
    int d = validate_and_repair(m);
    if (dropped) *dropped = d;
    return m;
}

TriMesh load_mesh(const std::string& path, int* dropped) {
    return load_mesh(path, mesh_format_from_path(path), dropped);
}

void save_obj(const std::string& path, const TriMesh& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    for (const auto& v : m.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : m.triangles)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) throw IoError("write failure on " + path);
}

void save_ply(const std::string& path, const TriMesh& m, const std::vector<double>& quality) {
    if (!quality.empty() && quality.size() != m.vertices.size())
        throw DomainError("quality field size does not match vertex count");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(17);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << m.n_vertices() << '\n';
    out << "property double x\nproperty double y\nproperty double z\n";
    if (!quality.empty()) out << "property double quality\n";
    out << "element face " << m.n_triangles() << '\n';
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (int i = 0; i < m.n_vertices(); ++i) {
        const auto& v = m.vertices[i];
        out << v.x() << ' ' << v.y() << ' ' << v.z();
        if (!quality.empty()) out << ' ' << quality[i];
        out << '\n';
    }
    for (const auto& f : m.triangles)
        out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    if (!out) throw IoError("write failure on " + path);
}

void save_mesh(const std::string& path, const TriMesh& m) {
    if (mesh_format_from_path(path) == MeshFormat::OBJ)
        save_obj(path, m);
    else
        save_ply(path, m);
}

}  // namespace craniomorph
