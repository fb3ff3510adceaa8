#include "l2m/laplacian.hpp"
#include "l2m/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace l2m {

bool SparseSymMatrix::is_symmetric(double tol) const {
    Eigen::SparseMatrix<double, Eigen::RowMajor> diff = m_ - Eigen::SparseMatrix<double, Eigen::RowMajor>(m_.transpose());
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(diff, k); it; ++it)
            if (std::abs(it.value()) > tol) return false;
    return true;
}

Eigen::VectorXd SparseSymMatrix::row_sums() const {
    return m_ * Eigen::VectorXd::Ones(m_.cols());
}

std::vector<std::pair<int, int>> AdjacencyData::edge_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < neighbors.size(); ++i)
        for (int j : neighbors[i])
            if (static_cast<int>(i) < j) out.emplace_back(static_cast<int>(i), j);
    return out;
}

namespace {

constexpr double kCotClamp = 1e4;

// cot of the angle at corner p between edges (q-p) and (r-p), clamped.
double clamped_cot(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Eigen::Vector3d& r) {
    const Eigen::Vector3d u = q - p, v = r - p;
    const double cross = u.cross(v).norm();
    const double dot = u.dot(v);
    if (cross <= 0.0) return dot >= 0.0 ? kCotClamp : -kCotClamp;
    return std::clamp(dot / cross, -kCotClamp, kCotClamp);
}

} // namespace

SparseSymMatrix cotangent_laplacian(const Mesh& mesh, const MeshTopology& topo) {
    (void)topo; // accumulation is purely per triangle; no edge classification needed
    const Eigen::Index n = mesh.vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.face_count()) * 12);

    for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
        const int i = mesh.faces(f, 0), j = mesh.faces(f, 1), k = mesh.faces(f, 2);
        const Eigen::Vector3d a = mesh.vertices.row(i);
        const Eigen::Vector3d b = mesh.vertices.row(j);
        const Eigen::Vector3d c = mesh.vertices.row(k);
        const double cot_a = clamped_cot(a, b, c); // opposite edge (j,k)
        const double cot_b = clamped_cot(b, c, a); // opposite edge (k,i)
        const double cot_c = clamped_cot(c, a, b); // opposite edge (i,j)

        auto add_edge = [&](int u, int v, double cot) {
            const double w = 0.5 * cot;
            trip.emplace_back(u, v, -w);
            trip.emplace_back(v, u, -w);
            trip.emplace_back(u, u, w);
            trip.emplace_back(v, v, w);
        };
        add_edge(j, k, cot_a);
        add_edge(k, i, cot_b);
        add_edge(i, j, cot_c);
    }

    Eigen::SparseMatrix<double, Eigen::RowMajor> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    return SparseSymMatrix(std::move(L));
}

AdjacencyData vertex_adjacency(const MeshTopology& topo) {
    AdjacencyData adj;
    adj.neighbors = topo.vertex_neighbors;
    adj.ring_counts.resize(static_cast<Eigen::Index>(adj.neighbors.size()));
    for (size_t i = 0; i < adj.neighbors.size(); ++i)
        adj.ring_counts[static_cast<Eigen::Index>(i)] = static_cast<int>(adj.neighbors[i].size());
    return adj;
}

void export_triplets(const SparseSymMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write triplet file: " + path.string());
    out << m.size() << ' ' << m.nonzeros() << '\n';
    char buf[64];
    const auto& mat = m.matrix();
    for (int r = 0; r < mat.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(mat, r); it; ++it) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", static_cast<int>(it.row()),
                          static_cast<int>(it.col()), it.value());
            out << buf;
        }
}

} // namespace l2m
