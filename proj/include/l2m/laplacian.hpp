#pragma once

#include "l2m/mesh.hpp"
#include "l2m/topology.hpp"

#include <Eigen/Sparse>
#include <filesystem>
#include <vector>

namespace l2m {

// Sparse symmetric matrix in compressed row storage. Thin wrapper around a
// row-major Eigen sparse matrix; symmetry is a construction invariant,
// checked by is_symmetric().
class SparseSymMatrix {
public:
    SparseSymMatrix() = default;
    explicit SparseSymMatrix(Eigen::SparseMatrix<double, Eigen::RowMajor> m) : m_(std::move(m)) {
        m_.makeCompressed();
    }

    Eigen::Index size() const { return m_.rows(); }
    Eigen::Index nonzeros() const { return m_.nonZeros(); }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>& matrix() const { return m_; }

    const Eigen::SparseMatrix<double, Eigen::RowMajor>::StorageIndex* row_offsets() const {
        return m_.outerIndexPtr();
    }
    const Eigen::SparseMatrix<double, Eigen::RowMajor>::StorageIndex* col_indices() const {
        return m_.innerIndexPtr();
    }
    const double* values() const { return m_.valuePtr(); }

    Eigen::VectorXd operator*(const Eigen::VectorXd& x) const { return m_ * x; }
    Eigen::MatrixXd operator*(const Eigen::MatrixXd& x) const { return m_ * x; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m_); }

    bool is_symmetric(double tol = 1e-12) const;
    Eigen::VectorXd row_sums() const;

private:
    Eigen::SparseMatrix<double, Eigen::RowMajor> m_;
};

// Vertex adjacency A (symmetric, zero diagonal) stored as sorted neighbor
// lists, plus the 1-ring neighbor counts.
struct AdjacencyData {
    std::vector<std::vector<int>> neighbors; // ascending per vertex
    Eigen::VectorXi ring_counts;             // ring_counts[i] == neighbors[i].size()

    Eigen::Index size() const { return ring_counts.size(); }
    // undirected edge list (i < j), lexicographic
    std::vector<std::pair<int, int>> edge_pairs() const;
};

// Cotangent stiffness matrix: off-diagonal entries are -(sum of cotangents
// of the angles opposite the edge)/2 accumulated per triangle, diagonal is
// minus the off-diagonal row sum. Cotangents are clamped to [-1e4, 1e4] so
// near-degenerate triangles stay bounded. No mass-matrix weighting: the
// eigenvectors must be orthonormal under the plain dot product for the
// reconstruction and pooling identities to hold exactly.
SparseSymMatrix cotangent_laplacian(const Mesh& mesh, const MeshTopology& topo);

AdjacencyData vertex_adjacency(const MeshTopology& topo);

// Debug dump: header "n nnz", then one "i j value" line per stored entry.
void export_triplets(const SparseSymMatrix& m, const std::filesystem::path& path);

} // namespace l2m
