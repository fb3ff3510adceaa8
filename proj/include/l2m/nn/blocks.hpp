#pragma once

#include "l2m/nn/tensor.hpp"

#include <random>
#include <string>

namespace l2m::nn {

// Parameter init: Xavier-style normal draws generated in double so float and
// double instantiations of the same seed share values.
template <typename T>
Tensor<T> init_weight(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(rows + cols)));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = g(rng);
    return Tensor<T>::variable(w.template cast<T>());
}

template <typename T>
Tensor<T> init_zeros(Eigen::Index rows, Eigen::Index cols) {
    return Tensor<T>::variable(Mat<T>::Zero(rows, cols));
}

template <typename T>
Tensor<T> init_ones(Eigen::Index rows, Eigen::Index cols) {
    return Tensor<T>::variable(Mat<T>::Ones(rows, cols));
}

using ParamNames = std::vector<std::string>;

// Per-row affine map x*W + b: a 1x1 convolution over the channel axis.
// Works on any row count, so parameter count never depends on k or n.
template <typename T>
struct Conv1x1 {
    Tensor<T> weight; // c_in x c_out
    Tensor<T> bias;   // 1 x c_out

    static Conv1x1 init(Eigen::Index c_in, Eigen::Index c_out, std::mt19937_64& rng) {
        return {init_weight<T>(c_in, c_out, rng), init_zeros<T>(1, c_out)};
    }
    Tensor<T> operator()(const Tensor<T>& x) const {
        return add_row_broadcast(matmul(x, weight), bias);
    }
    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".W", weight);
        f(prefix + ".b", bias);
    }
};

template <typename T>
struct ChannelNorm {
    Tensor<T> gamma; // 1 x c
    Tensor<T> beta;  // 1 x c

    static ChannelNorm init(Eigen::Index c) { return {init_ones<T>(1, c), init_zeros<T>(1, c)}; }
    Tensor<T> operator()(const Tensor<T>& x) const { return channel_norm(x, gamma, beta); }
    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".gamma", gamma);
        f(prefix + ".beta", beta);
    }
};

struct SEResNetConfig {
    int channels = 0;
    int reduction = 4;
    bool use_norm = true; // per-channel standardization inside the branch

    int hidden() const { return std::max(1, channels / std::max(1, reduction)); }
};

// Residual block with a squeeze-and-excitation gate:
//   f(x) = norm(conv(elu(norm(conv(x)))))
//   gate = sigmoid(W2 elu(W1 mean_rows(f) + b1) + b2), one value per channel
//   y    = x + gate (.) f(x)
template <typename T>
struct SEResNetBlock {
    SEResNetConfig cfg;
    Conv1x1<T> conv1, conv2;
    ChannelNorm<T> norm1, norm2;
    Tensor<T> gate_w1, gate_b1; // c x h, 1 x h
    Tensor<T> gate_w2, gate_b2; // h x c, 1 x c

    static SEResNetBlock init(const SEResNetConfig& cfg, std::mt19937_64& rng) {
        SEResNetBlock b;
        b.cfg = cfg;
        const Eigen::Index c = cfg.channels, h = cfg.hidden();
        b.conv1 = Conv1x1<T>::init(c, c, rng);
        b.conv2 = Conv1x1<T>::init(c, c, rng);
        b.norm1 = ChannelNorm<T>::init(c);
        b.norm2 = ChannelNorm<T>::init(c);
        b.gate_w1 = init_weight<T>(c, h, rng);
        b.gate_b1 = init_zeros<T>(1, h);
        b.gate_w2 = init_weight<T>(h, c, rng);
        b.gate_b2 = init_zeros<T>(1, c);
        return b;
    }

    Tensor<T> operator()(const Tensor<T>& x) const {
        Tensor<T> f = conv1(x);
        if (cfg.use_norm) f = norm1(f);
        f = conv2(elu(f));
        if (cfg.use_norm) f = norm2(f);
        Tensor<T> squeeze = mean_rows(f);
        Tensor<T> hidden = elu(add_row_broadcast(matmul(squeeze, gate_w1), gate_b1));
        Tensor<T> gate = sigmoid(add_row_broadcast(matmul(hidden, gate_w2), gate_b2));
        return add(x, mul_row_broadcast(f, gate));
    }

    // gate activations for inspection (tests assert they stay in (0,1))
    Tensor<T> gate_values(const Tensor<T>& x) const {
        Tensor<T> f = conv1(x);
        if (cfg.use_norm) f = norm1(f);
        f = conv2(elu(f));
        if (cfg.use_norm) f = norm2(f);
        Tensor<T> hidden = elu(add_row_broadcast(matmul(mean_rows(f), gate_w1), gate_b1));
        return sigmoid(add_row_broadcast(matmul(hidden, gate_w2), gate_b2));
    }

    template <typename F>
    void visit(const std::string& prefix, F&& f) {
        conv1.visit(prefix + ".conv1", f);
        conv2.visit(prefix + ".conv2", f);
        if (cfg.use_norm) {
            norm1.visit(prefix + ".norm1", f);
            norm2.visit(prefix + ".norm2", f);
        }
        f(prefix + ".gate.W1", gate_w1);
        f(prefix + ".gate.b1", gate_b1);
        f(prefix + ".gate.W2", gate_w2);
        f(prefix + ".gate.b2", gate_b2);
    }
};

} // namespace l2m::nn
