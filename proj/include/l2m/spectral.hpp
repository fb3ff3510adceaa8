#pragma once

#include "l2m/laplacian.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace l2m {

// The k smallest eigenpairs of a Laplacian: eigenvalues ascending and
// non-negative, eigenvector columns orthonormal under the plain dot product.
// provenance names the source matrix (mesh hash) so tensors cannot be mixed
// across bases from different Laplacians.
struct EigenBasis {
    Eigen::VectorXd eigenvalues; // ascending, clamped at 0
    Eigen::MatrixXd vectors;     // n x k, columns
    std::string provenance;

    Eigen::Index n() const { return vectors.rows(); }
    Eigen::Index k() const { return vectors.cols(); }

    // number of leading eigenvalues that are numerically zero; equals the
    // number of connected components of the mesh
    int near_zero_count(double rel_tol = 1e-8) const;
};

// A k x d feature matrix living in Laplacian space, tagged with the basis it
// was produced against.
struct SpectralTensor {
    Eigen::Index resolution = 0; // row count
    Eigen::MatrixXd data;
    std::string provenance;
};

enum class EigSolver : std::uint8_t {
    Auto,    // dense when n <= 2000, otherwise Lanczos
    Dense,
    Lanczos, // shift-invert Lanczos with full reorthogonalization
};

struct EigOptions {
    EigSolver solver = EigSolver::Auto;
    double tol = 1e-10;       // Lanczos residual tolerance
    std::uint64_t seed = 0x5eed5eedULL;
    std::string provenance = "anonymous";
};

// Computes the k smallest eigenpairs. Deterministic: the dense path is a
// direct solve, the Lanczos path starts from a seeded vector, and every
// eigenvector's sign is fixed so its largest-magnitude component (first such
// index on ties) is positive. Throws NumericalError if the iterative solver
// misses the tolerance within the iteration budget.
EigenBasis smallest_eigenpairs(const SparseSymMatrix& L, Eigen::Index k,
                               const EigOptions& opts = {});

// First k_prime eigenpairs of an existing basis; shares provenance.
EigenBasis prefix_basis(const EigenBasis& basis, Eigen::Index k_prime);

// Laplacian-space projection: E^T G, shape k x d.
SpectralTensor project(const EigenBasis& basis, const Eigen::MatrixXd& features);

// Back to the vertex domain: E S, shape n x d.
Eigen::MatrixXd reconstruct(const EigenBasis& basis, const SpectralTensor& s);

// Resolution transfer (E_j^T E_i) S between two bases of the same Laplacian.
// For nested prefix bases this is exact row truncation (k_j < k_i) or
// zero-padding (k_j > k_i); the explicit product is kept as the general path.
SpectralTensor pool_transfer(const EigenBasis& basis_i, const EigenBasis& basis_j,
                             const SpectralTensor& flow);
SpectralTensor unpool_transfer(const EigenBasis& basis_i, const EigenBasis& basis_j,
                               const SpectralTensor& flow);

// Default spectral resolution for a mesh with n vertices.
Eigen::Index default_k0(Eigen::Index n);

} // namespace l2m
