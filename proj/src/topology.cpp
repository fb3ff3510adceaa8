#include "l2m/topology.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace l2m {

int MeshTopology::find_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{a, b},
                               [](const Edge& e, const std::pair<int, int>& key) {
                                   return std::pair{e.v0, e.v1} < key;
                               });
    if (it == edges.end() || it->v0 != a || it->v1 != b) return -1;
    return static_cast<int>(it - edges.begin());
}

int MeshTopology::non_manifold_edge_count() const {
    return static_cast<int>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) {
        return e.kind == EdgeKind::NonManifold;
    }));
}

int MeshTopology::boundary_edge_count() const {
    return static_cast<int>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) {
        return e.kind == EdgeKind::Boundary;
    }));
}

int MeshTopology::non_manifold_vertex_count() const {
    return static_cast<int>(std::count(vertex_manifold.begin(), vertex_manifold.end(), false));
}

MeshTopology build_topology(const Mesh& mesh) {
    const size_t nv = static_cast<size_t>(mesh.vertex_count());
    const Eigen::Index nf = mesh.face_count();
    MeshTopology topo;

    std::map<std::pair<int, int>, std::vector<int>> edge_faces; // keyed (min,max)
    for (Eigen::Index f = 0; f < nf; ++f) {
        for (int j = 0; j < 3; ++j) {
            int a = mesh.faces(f, j), b = mesh.faces(f, (j + 1) % 3);
            if (a > b) std::swap(a, b);
            edge_faces[{a, b}].push_back(static_cast<int>(f));
        }
    }

    topo.edges.reserve(edge_faces.size());
    for (auto& [key, faces] : edge_faces) {
        Edge e;
        e.v0 = key.first;
        e.v1 = key.second;
        std::sort(faces.begin(), faces.end());
        e.faces = std::move(faces);
        e.kind = e.faces.size() == 1   ? EdgeKind::Boundary
                 : e.faces.size() == 2 ? EdgeKind::InteriorManifold
                                       : EdgeKind::NonManifold;
        topo.edges.push_back(std::move(e));
    }

    topo.vertex_neighbors.assign(nv, {});
    topo.vertex_faces.assign(nv, {});
    topo.vertex_boundary.assign(nv, false);
    for (const Edge& e : topo.edges) {
        topo.vertex_neighbors[static_cast<size_t>(e.v0)].push_back(e.v1);
        topo.vertex_neighbors[static_cast<size_t>(e.v1)].push_back(e.v0);
        if (e.kind == EdgeKind::Boundary) {
            topo.vertex_boundary[static_cast<size_t>(e.v0)] = true;
            topo.vertex_boundary[static_cast<size_t>(e.v1)] = true;
        }
    }
    for (auto& nbrs : topo.vertex_neighbors) std::sort(nbrs.begin(), nbrs.end());
    for (Eigen::Index f = 0; f < nf; ++f)
        for (int j = 0; j < 3; ++j)
            topo.vertex_faces[static_cast<size_t>(mesh.faces(f, j))].push_back(static_cast<int>(f));

    // A vertex is manifold when its incident faces form a single fan: every
    // incident edge has at most 2 faces and the faces are connected through
    // shared edges at the vertex, with 0 (closed) or 2 (open) boundary edges.
    // Isolated vertices are vacuously manifold; validate() reports them as
    // unreferenced instead.
    topo.vertex_manifold.assign(nv, true);
    for (size_t v = 0; v < nv; ++v) {
        const auto& inc = topo.vertex_faces[v];
        if (inc.empty()) continue;
        bool bad_edge = false;
        int boundary_at_v = 0;
        std::map<std::pair<int, int>, std::vector<int>> local; // edge at v -> local face ids
        for (size_t li = 0; li < inc.size(); ++li) {
            const Eigen::Index f = inc[li];
            for (int j = 0; j < 3; ++j) {
                int a = mesh.faces(f, j), b = mesh.faces(f, (j + 1) % 3);
                if (a != static_cast<int>(v) && b != static_cast<int>(v)) continue;
                if (a > b) std::swap(a, b);
                local[{a, b}].push_back(static_cast<int>(li));
            }
        }
        // union-find over incident faces, merged across shared manifold edges
        std::vector<int> parent(inc.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            return x;
        };
        for (const auto& [key, fl] : local) {
            if (fl.size() == 1) ++boundary_at_v;
            if (fl.size() > 2) bad_edge = true;
            for (size_t i = 1; i < fl.size(); ++i)
                parent[static_cast<size_t>(find(fl[i]))] = find(fl[0]);
        }
        int components = 0;
        for (size_t i = 0; i < inc.size(); ++i)
            if (find(static_cast<int>(i)) == static_cast<int>(i)) ++components;
        if (bad_edge || components > 1 || (boundary_at_v != 0 && boundary_at_v != 2))
            topo.vertex_manifold[v] = false;
    }
    return topo;
}

} // namespace l2m
