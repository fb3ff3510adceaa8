#pragma once

#include "l2m/laplacian.hpp"
#include "l2m/nn/tensor.hpp"
#include "l2m/errors.hpp"

#include <vector>

namespace l2m {

struct LossConfig {
    double sigma = 0.0;  // distance-kernel bandwidth; must be > 0 when the adjacency term is used
    double omega = 1.0;  // adjacency-loss weight; 0 disables the term entirely
    bool gaussian_squared = false; // exp(-d^2 / 2 sigma^2) instead of exp(-d / 2 sigma)

    void check() const {
        if (!(sigma > 0.0)) throw NumericalError("LossConfig: sigma must be positive");
        if (omega < 0.0) throw NumericalError("LossConfig: omega must be non-negative");
    }
};

// Row-stochastic per-vertex class probabilities.
struct Prediction {
    Eigen::MatrixXd probabilities; // n x C

    void check(double tol = 1e-6) const {
        for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
            const double s = probabilities.row(i).sum();
            if (std::abs(s - 1.0) > tol)
                throw NumericalError("Prediction: row " + std::to_string(i) +
                                     " sums to " + std::to_string(s));
        }
    }
};

// -(1/n) sum_i log P(i, y_i)
template <typename T>
nn::Tensor<T> cross_entropy(const nn::Tensor<T>& p, const std::vector<int>& labels) {
    for (int y : labels)
        if (y < 0 || y >= p.cols())
            throw DataError("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(p.cols()) + ")");
    return nn::mul_scalar(nn::mean_all(nn::log_clamped(nn::gather_label_column(p, labels))), T(-1));
}

// Per-edge weights of the adjacency penalty. Each undirected edge (i,j)
// contributes Omega_ij * |Y_i - Y_j| to both endpoints' ring averages, so its
// coefficient folds in 1/Phi_i + 1/Phi_j and the 1/n average. Vertices with
// no neighbors are excluded from the count.
struct AdjacencyWeights {
    std::vector<std::pair<int, int>> edges;
    std::vector<double> coefficients;
};

inline AdjacencyWeights adjacency_weights(const Eigen::MatrixX3d& vertices,
                                          const AdjacencyData& adjacency, double sigma,
                                          bool gaussian_squared = false) {
    if (!(sigma > 0.0)) throw NumericalError("adjacency_loss: sigma must be positive");
    AdjacencyWeights w;
    Eigen::Index participating = 0;
    for (Eigen::Index i = 0; i < adjacency.size(); ++i)
        if (adjacency.ring_counts[i] > 0) ++participating;
    if (participating == 0) return w;
    for (const auto& [i, j] : adjacency.edge_pairs()) {
        const double d = (vertices.row(i) - vertices.row(j)).norm();
        const double omega = gaussian_squared ? std::exp(-d * d / (2.0 * sigma * sigma))
                                              : std::exp(-d / (2.0 * sigma));
        const double c = omega *
                         (1.0 / adjacency.ring_counts[i] + 1.0 / adjacency.ring_counts[j]) /
                         static_cast<double>(participating);
        w.edges.emplace_back(i, j);
        w.coefficients.push_back(c);
    }
    return w;
}

// Adjacency loss: predictive values Y_i = P(i, y_i) of 1-ring neighbors are
// pulled together, weighted by exp(-distance / 2 sigma) and averaged over
// ring sizes and vertices. Evaluated sparsely over the edge list only.
template <typename T>
nn::Tensor<T> adjacency_loss(const nn::Tensor<T>& p, const std::vector<int>& labels,
                             const Eigen::MatrixX3d& vertices, const AdjacencyData& adjacency,
                             double sigma, bool gaussian_squared = false) {
    const AdjacencyWeights w = adjacency_weights(vertices, adjacency, sigma, gaussian_squared);
    nn::Tensor<T> y = nn::gather_label_column(p, labels);
    std::vector<T> coeffs(w.coefficients.size());
    for (size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = static_cast<T>(w.coefficients[i]);
    return nn::edge_abs_penalty(y, w.edges, coeffs);
}

// L = L_CE + omega * L_adj. omega == 0 returns the cross-entropy tensor
// itself (bitwise identical, no adjacency work).
template <typename T>
nn::Tensor<T> combined_loss(const nn::Tensor<T>& p, const std::vector<int>& labels,
                            const Eigen::MatrixX3d& vertices, const AdjacencyData& adjacency,
                            const LossConfig& cfg) {
    nn::Tensor<T> ce = cross_entropy(p, labels);
    if (cfg.omega == 0.0) return ce;
    cfg.check();
    nn::Tensor<T> adj =
        adjacency_loss(p, labels, vertices, adjacency, cfg.sigma, cfg.gaussian_squared);
    return nn::add_scaled(ce, adj, T(1), static_cast<T>(cfg.omega));
}

} // namespace l2m
