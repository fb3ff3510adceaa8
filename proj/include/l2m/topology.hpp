#pragma once

#include "l2m/mesh.hpp"

#include <vector>

namespace l2m {

enum class EdgeKind : std::uint8_t {
    Boundary,        // exactly 1 incident face
    InteriorManifold, // exactly 2
    NonManifold,     // 3 or more
};

struct Edge {
    int v0 = 0; // v0 < v1
    int v1 = 0;
    std::vector<int> faces; // incident faces, ascending
    EdgeKind kind = EdgeKind::Boundary;
};

// Derived incidence structures. All lists are sorted ascending so identical
// input bytes produce identical orderings.
struct MeshTopology {
    std::vector<Edge> edges;                       // sorted by (v0, v1)
    std::vector<std::vector<int>> vertex_neighbors; // 1-ring vertex sets
    std::vector<std::vector<int>> vertex_faces;     // VF adjacency
    std::vector<bool> vertex_manifold;              // disk-like neighborhood
    std::vector<bool> vertex_boundary;              // touches a boundary edge

    // edge lookup table: (v0,v1) with v0<v1 -> index into edges
    int find_edge(int a, int b) const;

    int non_manifold_edge_count() const;
    int boundary_edge_count() const;
    int non_manifold_vertex_count() const;
};

// Builds complete edge/vertex/face incidence. Non-manifoldness is flagged,
// never rejected.
MeshTopology build_topology(const Mesh& mesh);

} // namespace l2m
