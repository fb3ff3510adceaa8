#include "l2m/mesh.hpp"
#include "l2m/topology.hpp"
#include "l2m/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace l2m {
namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line, const std::string& msg) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

std::string lower_ext(const std::filesystem::path& path) {
    std::string e = path.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e;
}

struct MeshBuilder {
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::array<int, 3>> faces;
    std::vector<DroppedFace> dropped;

    // Fan-triangulates a polygon given as 0-based indices. Degenerate
    // triangles (repeated index) are dropped and recorded.
    void add_polygon(const std::vector<int>& poly, int line,
                     const std::filesystem::path& path) {
        if (poly.size() < 3)
            parse_fail(path, line, "face with fewer than 3 vertices cannot be triangulated");
        for (size_t i = 1; i + 1 < poly.size(); ++i) {
            std::array<int, 3> tri{poly[0], poly[i], poly[i + 1]};
            for (int idx : tri)
                if (idx < 0 || idx >= static_cast<int>(verts.size()))
                    parse_fail(path, line, "face index " + std::to_string(idx + 1) + " out of range");
            if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
                dropped.push_back({line, tri});
            else
                faces.push_back(tri);
        }
    }

    Mesh finish(const std::filesystem::path& path) {
        if (verts.empty() || faces.empty())
            throw DataError(path.string() + ": empty mesh (no vertices or no faces)");
        Mesh m;
        m.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
        for (size_t i = 0; i < verts.size(); ++i) m.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
        m.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
        for (size_t i = 0; i < faces.size(); ++i)
            for (int j = 0; j < 3; ++j) m.faces(static_cast<Eigen::Index>(i), j) = faces[i][j];
        m.dropped_faces = std::move(dropped);
        return m;
    }
};

Mesh load_obj(const std::filesystem::path& path, std::istream& in) {
    MeshBuilder b;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ls >> p.x() >> p.y() >> p.z()))
                parse_fail(path, lineno, "vertex line needs 3 coordinates");
            b.verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                // token forms: i, i/t, i//n, i/t/n
                std::string head = tok.substr(0, tok.find('/'));
                int idx = 0;
                auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
                if (ec != std::errc() || p != head.data() + head.size())
                    parse_fail(path, lineno, "bad face index '" + tok + "'");
                if (idx < 0) idx = static_cast<int>(b.verts.size()) + idx; // OBJ relative index
                else idx -= 1;                                            // 1-based -> 0-based
                poly.push_back(idx);
            }
            b.add_polygon(poly, lineno, path);
        }
        // vn, vt, o, g, s, usemtl, mtllib: ignored
    }
    return b.finish(path);
}

// Pulls the next whitespace-separated token, skipping comment lines.
bool next_token(std::istream& in, std::string& tok, int& lineno) {
    char c;
    tok.clear();
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            ++lineno;
            continue;
        }
        if (c == '\n') { ++lineno; continue; }
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        tok.push_back(c);
        while (in.get(c)) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == '#') {
                in.unget();
                break;
            }
            tok.push_back(c);
        }
        return true;
    }
    return false;
}

Mesh load_off(const std::filesystem::path& path, std::istream& in) {
    int lineno = 1;
    std::string tok;
    if (!next_token(in, tok, lineno) || tok != "OFF")
        parse_fail(path, lineno, "missing OFF header");

    auto want_int = [&](const char* what) {
        if (!next_token(in, tok, lineno)) parse_fail(path, lineno, std::string("expected ") + what);
        try { return std::stoi(tok); }
        catch (...) { parse_fail(path, lineno, std::string("bad ") + what + " '" + tok + "'"); }
    };
    auto want_real = [&](const char* what) {
        if (!next_token(in, tok, lineno)) parse_fail(path, lineno, std::string("expected ") + what);
        try { return std::stod(tok); }
        catch (...) { parse_fail(path, lineno, std::string("bad ") + what + " '" + tok + "'"); }
    };

    const int nv = want_int("vertex count");
    const int nf = want_int("face count");
    (void)want_int("edge count");

    MeshBuilder b;
    b.verts.reserve(static_cast<size_t>(std::max(nv, 0)));
    for (int i = 0; i < nv; ++i) {
        Eigen::Vector3d p;
        p.x() = want_real("coordinate");
        p.y() = want_real("coordinate");
        p.z() = want_real("coordinate");
        b.verts.push_back(p);
    }
    for (int i = 0; i < nf; ++i) {
        const int arity = want_int("face arity");
        std::vector<int> poly(static_cast<size_t>(std::max(arity, 0)));
        for (int j = 0; j < arity; ++j) poly[static_cast<size_t>(j)] = want_int("face index");
        b.add_polygon(poly, lineno, path);
    }
    return b.finish(path);
}

} // namespace

Mesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mesh file: " + path.string());
    const std::string ext = lower_ext(path);
    if (ext == ".obj") return load_obj(path, in);
    if (ext == ".off") return load_off(path, in);
    throw DataError("unsupported mesh extension '" + ext + "' (expected .obj or .off): " + path.string());
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write mesh file: " + path.string());
    char buf[96];
    const std::string ext = lower_ext(path);
    if (ext == ".obj") {
        for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
            std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", mesh.vertices(i, 0),
                          mesh.vertices(i, 1), mesh.vertices(i, 2));
            out << buf;
        }
        for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
            out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
                << mesh.faces(f, 2) + 1 << '\n';
    } else if (ext == ".off") {
        out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.face_count() << " 0\n";
        for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", mesh.vertices(i, 0),
                          mesh.vertices(i, 1), mesh.vertices(i, 2));
            out << buf;
        }
        for (Eigen::Index f = 0; f < mesh.face_count(); ++f)
            out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' ' << mesh.faces(f, 2)
                << '\n';
    } else {
        throw DataError("unsupported mesh extension '" + ext + "' for save: " + path.string());
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Mesh normalize_to_unit_cube(const Mesh& mesh) {
    if (mesh.vertex_count() < 1) throw DataError("normalize: mesh has no vertices");
    const Eigen::RowVector3d lo = mesh.vertices.colwise().minCoeff();
    const Eigen::RowVector3d hi = mesh.vertices.colwise().maxCoeff();
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 1e-30))
        throw NumericalError("normalize: zero extent (all vertices coincident)");
    const Eigen::RowVector3d center = 0.5 * (lo + hi);
    Mesh out = mesh;
    out.vertices = (mesh.vertices.rowwise() - center) / extent;
    return out;
}

ValidationReport validate(const Mesh& mesh) {
    ValidationReport rep;
    const Eigen::Index nv = mesh.vertex_count();
    const Eigen::Index nf = mesh.face_count();

    for (const DroppedFace& d : mesh.dropped_faces) rep.degenerate_index_faces.push_back(d.line);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const int a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
        if (a == b || b == c || a == c) rep.degenerate_index_faces.push_back(static_cast<int>(f));
    }

    // area threshold relative to the squared bounding-box scale
    const Eigen::RowVector3d lo = nv ? Eigen::RowVector3d(mesh.vertices.colwise().minCoeff())
                                     : Eigen::RowVector3d::Zero();
    const Eigen::RowVector3d hi = nv ? Eigen::RowVector3d(mesh.vertices.colwise().maxCoeff())
                                     : Eigen::RowVector3d::Zero();
    const double scale = std::max((hi - lo).maxCoeff(), 1.0);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
        const Eigen::Vector3d u = Eigen::Vector3d(mesh.vertices.row(mesh.faces(f, 1))) - a;
        const Eigen::Vector3d v = Eigen::Vector3d(mesh.vertices.row(mesh.faces(f, 2))) - a;
        if (0.5 * u.cross(v).norm() < 1e-12 * scale * scale)
            rep.zero_area_faces.push_back(static_cast<int>(f));
    }

    std::map<std::array<int, 3>, int> seen;
    for (Eigen::Index f = 0; f < nf; ++f) {
        std::array<int, 3> key{mesh.faces(f, 0), mesh.faces(f, 1), mesh.faces(f, 2)};
        std::sort(key.begin(), key.end());
        auto [it, inserted] = seen.emplace(key, static_cast<int>(f));
        if (!inserted) rep.duplicate_faces.push_back(static_cast<int>(f));
    }

    std::vector<bool> referenced(static_cast<size_t>(nv), false);
    for (Eigen::Index f = 0; f < nf; ++f)
        for (int j = 0; j < 3; ++j) referenced[static_cast<size_t>(mesh.faces(f, j))] = true;
    for (Eigen::Index i = 0; i < nv; ++i)
        if (!referenced[static_cast<size_t>(i)]) rep.unreferenced_vertices.push_back(static_cast<int>(i));

    const MeshTopology topo = build_topology(mesh);
    rep.non_manifold_edges = topo.non_manifold_edge_count();
    rep.non_manifold_vertices = topo.non_manifold_vertex_count();
    rep.boundary_edges = topo.boundary_edge_count();
    return rep;
}

} // namespace l2m
