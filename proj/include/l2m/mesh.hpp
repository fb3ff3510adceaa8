#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace l2m {

// A face that was read from a file but dropped because it repeats a vertex
// index. Kept on the mesh so validation can still report it.
struct DroppedFace {
    int line = 0;                 // 1-based line in the source file (0 if unknown)
    std::array<int, 3> indices{}; // 0-based indices as they appeared
};

// Triangle mesh: |V|x3 vertex coordinates and |F|x3 0-based index triples.
// Faces never repeat a vertex index; index-degenerate faces are dropped at
// load and recorded in dropped_faces. Immutable by convention after
// construction; all operations return new meshes.
struct Mesh {
    Eigen::MatrixX3d vertices;
    Eigen::Matrix<int, Eigen::Dynamic, 3> faces;
    std::vector<DroppedFace> dropped_faces;

    Eigen::Index vertex_count() const { return vertices.rows(); }
    Eigen::Index face_count() const { return faces.rows(); }
};

struct ValidationReport {
    std::vector<int> degenerate_index_faces; // face ids (or source lines for dropped ones)
    std::vector<int> zero_area_faces;        // area below 1e-12 (unit-cube scale)
    std::vector<int> duplicate_faces;        // later face repeating an earlier vertex set
    std::vector<int> unreferenced_vertices;
    int non_manifold_edges = 0;
    int non_manifold_vertices = 0;
    int boundary_edges = 0;

    bool clean() const {
        return degenerate_index_faces.empty() && zero_area_faces.empty() &&
               duplicate_faces.empty() && unreferenced_vertices.empty() &&
               non_manifold_edges == 0 && non_manifold_vertices == 0;
    }
};

// Reads an OBJ (v/f records; vn/vt ignored) or ASCII OFF file. Polygonal
// faces are fan-triangulated. 1-based OBJ indices are converted to 0-based.
// Throws DataError on parse problems (message carries the line number),
// non-triangulatable faces, or an empty mesh.
Mesh load_mesh(const std::filesystem::path& path);

// Writes OBJ or OFF depending on the extension. Coordinates are printed with
// enough digits that load(save(m)) reproduces them exactly.
void save_mesh(const Mesh& mesh, const std::filesystem::path& path);

// Translates and uniformly scales so the bounding box is centered at the
// origin with longest side 1. Throws NumericalError when all vertices
// coincide.
Mesh normalize_to_unit_cube(const Mesh& mesh);

struct MeshTopology; // topology.hpp

ValidationReport validate(const Mesh& mesh);

} // namespace l2m
