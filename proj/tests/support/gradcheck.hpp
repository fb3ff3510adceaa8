#pragma once

// Central finite-difference gradient checking against the autodiff engine,
// in double precision.

#include "l2m/nn/tensor.hpp"

#include <functional>
#include <random>
#include <vector>

namespace gradcheck {

// Max relative error between analytic and finite-difference gradients over
// every entry of every parameter. build() must rebuild the scalar loss graph
// from the current parameter values.
//
// Entries whose analytic and numeric gradients are both below an absolute
// floor are compared absolutely (relative error is meaningless in roundoff
// noise). Entries that miss the tolerance are re-measured at smaller step
// sizes: straddling an activation kink inflates the central difference by
// O(h) and vanishes under refinement, while a genuine backward bug stays put.
inline double max_rel_error(const std::function<l2m::nn::Tensor<double>()>& build,
                            std::vector<l2m::nn::Tensor<double>>& params, double h = 1e-4) {
    constexpr double kZeroFloor = 1e-7;
    for (auto& p : params) p.zero_grad();
    l2m::nn::backward(build());
    std::vector<Eigen::MatrixXd> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& value = params[pi].value_mut();
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value(i);
            auto central = [&](double step) {
                value(i) = saved + step;
                const double up = build().value()(0, 0);
                value(i) = saved - step;
                const double down = build().value()(0, 0);
                value(i) = saved;
                return (up - down) / (2.0 * step);
            };
            const double ad = analytic[pi](i);
            double entry_err = std::numeric_limits<double>::infinity();
            for (double step : {h, h / 10.0, h / 100.0}) {
                const double fd = central(step);
                const double denom = std::max(std::abs(fd), std::abs(ad));
                const double err = denom < kZeroFloor
                                       ? (std::abs(fd - ad) < kZeroFloor ? 0.0 : 1.0)
                                       : std::abs(fd - ad) / denom;
                entry_err = std::min(entry_err, err);
                if (entry_err < 1e-6) break; // no need to refine further
            }
            worst = std::max(worst, entry_err);
        }
    }
    return worst;
}

// Deterministic pseudo-random matrix for test fixtures.
inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                                     double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
    return m;
}

} // namespace gradcheck
