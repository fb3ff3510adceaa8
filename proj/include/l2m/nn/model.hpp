#pragma once

#include "l2m/nn/blocks.hpp"

#include <array>
#include <map>
#include <stdexcept>

namespace l2m::nn {

enum class Task : std::uint8_t { Classification, Segmentation };

struct ModelConfig {
    Task task = Task::Classification;
    std::array<Eigen::Index, 3> k_pyramid{256, 64, 16};
    std::array<int, 3> widths{64, 128, 256}; // per pyramid stage
    int classes = 2;
    int se_reduction = 4;
    int blocks_per_stage = 2;
    int input_channels = 39;
    std::uint64_t seed = 1;

    void check() const {
        if (!(k_pyramid[0] > k_pyramid[1] && k_pyramid[1] > k_pyramid[2] && k_pyramid[2] >= 1))
            throw std::invalid_argument("ModelConfig: k pyramid must satisfy k0 > k1 > k2 >= 1");
        if (classes < 2) throw std::invalid_argument("ModelConfig: need at least 2 classes");
    }
};

// Shared multi-resolution encoder: each resolution gets conv1x1 to its stage
// width plus SE-ResNet blocks; lower resolutions merge in the pooled flow
// from above via concatenation and a connecting conv1x1. Pooling between
// nested prefix bases is exact row truncation and carries no parameters.
template <typename T>
struct Encoder {
    ModelConfig cfg;
    std::array<Conv1x1<T>, 3> in_proj;
    std::array<std::vector<SEResNetBlock<T>>, 3> blocks;
    Conv1x1<T> merge1; // (w1 + w0) -> w1
    Conv1x1<T> merge2; // (w2 + w1) -> w2

    static Encoder init(const ModelConfig& cfg, std::mt19937_64& rng) {
        Encoder e;
        e.cfg = cfg;
        for (int s = 0; s < 3; ++s) {
            e.in_proj[s] = Conv1x1<T>::init(cfg.input_channels, cfg.widths[s], rng);
            for (int b = 0; b < cfg.blocks_per_stage; ++b)
                e.blocks[s].push_back(
                    SEResNetBlock<T>::init({cfg.widths[s], cfg.se_reduction, true}, rng));
        }
        e.merge1 = Conv1x1<T>::init(cfg.widths[1] + cfg.widths[0], cfg.widths[1], rng);
        e.merge2 = Conv1x1<T>::init(cfg.widths[2] + cfg.widths[1], cfg.widths[2], rng);
        return e;
    }

    struct Flows {
        Tensor<T> e0; // k0 x w0
        Tensor<T> t1; // k1 x w1
        Tensor<T> t2; // k2 x w2
    };

    Flows operator()(const std::array<Tensor<T>, 3>& feats) const {
        for (int s = 0; s < 3; ++s) {
            if (feats[s].rows() != cfg.k_pyramid[s] || feats[s].cols() != cfg.input_channels)
                throw std::invalid_argument("encoder: input " + std::to_string(s) +
                                            " does not match the configured pyramid");
        }
        auto stage = [&](int s, const Tensor<T>& x) {
            Tensor<T> h = in_proj[s](x);
            for (const auto& b : blocks[s]) h = b(h);
            return h;
        };
        Flows f;
        f.e0 = stage(0, feats[0]);
        Tensor<T> e1 = stage(1, feats[1]);
        Tensor<T> e2 = stage(2, feats[2]);
        f.t1 = merge1(concat_cols(e1, take_rows(f.e0, cfg.k_pyramid[1])));
        f.t2 = merge2(concat_cols(e2, take_rows(f.t1, cfg.k_pyramid[2])));
        return f;
    }

    template <typename F>
    void visit(F&& f) {
        for (int s = 0; s < 3; ++s) {
            const std::string p = "enc" + std::to_string(s);
            in_proj[s].visit(p + ".in", f);
            for (size_t b = 0; b < blocks[s].size(); ++b)
                blocks[s][b].visit(p + ".block" + std::to_string(b), f);
        }
        merge1.visit("enc.merge1", f);
        merge2.visit("enc.merge2", f);
    }
};

template <typename T>
struct ClassifierModel {
    ModelConfig cfg;
    Encoder<T> encoder;
    Tensor<T> head_w1, head_b1; // w2 x w2
    Tensor<T> head_w2, head_b2; // w2 x C

    static ClassifierModel init(const ModelConfig& cfg) {
        cfg.check();
        std::mt19937_64 rng(cfg.seed);
        ClassifierModel m;
        m.cfg = cfg;
        m.encoder = Encoder<T>::init(cfg, rng);
        const Eigen::Index w2 = cfg.widths[2];
        m.head_w1 = init_weight<T>(w2, w2, rng);
        m.head_b1 = init_zeros<T>(1, w2);
        m.head_w2 = init_weight<T>(w2, cfg.classes, rng);
        m.head_b2 = init_zeros<T>(1, cfg.classes);
        return m;
    }

    // feats: spectral tensors at k0, k1, k2 (each k_i x 39). Returns 1 x C logits.
    Tensor<T> forward(const std::array<Tensor<T>, 3>& feats) const {
        auto fl = encoder(feats);
        Tensor<T> g = mean_rows(fl.t2);
        Tensor<T> h = elu(add_row_broadcast(matmul(g, head_w1), head_b1));
        return add_row_broadcast(matmul(h, head_w2), head_b2);
    }

    template <typename F>
    void visit(F&& f) {
        encoder.visit(f);
        f("head.W1", head_w1);
        f("head.b1", head_b1);
        f("head.W2", head_w2);
        f("head.b2", head_b2);
    }
};

template <typename T>
struct SegmenterModel {
    ModelConfig cfg;
    Encoder<T> encoder;
    Conv1x1<T> dec1_proj; // (w2 + w1) -> w1
    Conv1x1<T> dec0_proj; // (w1 + w0) -> w0
    std::vector<SEResNetBlock<T>> dec1_blocks, dec0_blocks;
    Conv1x1<T> out_proj; // w0 -> C, applied after vertex-domain recovery

    static SegmenterModel init(const ModelConfig& cfg) {
        cfg.check();
        std::mt19937_64 rng(cfg.seed);
        SegmenterModel m;
        m.cfg = cfg;
        m.encoder = Encoder<T>::init(cfg, rng);
        m.dec1_proj = Conv1x1<T>::init(cfg.widths[2] + cfg.widths[1], cfg.widths[1], rng);
        for (int b = 0; b < cfg.blocks_per_stage; ++b)
            m.dec1_blocks.push_back(SEResNetBlock<T>::init({cfg.widths[1], cfg.se_reduction, true}, rng));
        m.dec0_proj = Conv1x1<T>::init(cfg.widths[1] + cfg.widths[0], cfg.widths[0], rng);
        for (int b = 0; b < cfg.blocks_per_stage; ++b)
            m.dec0_blocks.push_back(SEResNetBlock<T>::init({cfg.widths[0], cfg.se_reduction, true}, rng));
        m.out_proj = Conv1x1<T>::init(cfg.widths[0], cfg.classes, rng);
        return m;
    }

    // Decoder mirrors the encoder with zero-pad unpooling and U-Net style
    // skip concatenations; the final k0 flow returns to the vertex domain
    // through the eigenbasis (n x k0, zero-padded columns past the actual
    // basis size) before the per-vertex class conv and row softmax.
    Tensor<T> forward(const std::array<Tensor<T>, 3>& feats, const Tensor<T>& basis_k0) const {
        if (basis_k0.cols() != cfg.k_pyramid[0])
            throw std::invalid_argument("segmenter: basis columns must equal k0");
        auto fl = encoder(feats);
        Tensor<T> d1 = dec1_proj(concat_cols(pad_rows(fl.t2, cfg.k_pyramid[1]), fl.t1));
        for (const auto& b : dec1_blocks) d1 = b(d1);
        Tensor<T> d0 = dec0_proj(concat_cols(pad_rows(d1, cfg.k_pyramid[0]), fl.e0));
        for (const auto& b : dec0_blocks) d0 = b(d0);
        Tensor<T> vertex = matmul(basis_k0, d0); // n x w0
        return softmax_rows(out_proj(vertex));
    }

    template <typename F>
    void visit(F&& f) {
        encoder.visit(f);
        dec1_proj.visit("dec1.in", f);
        for (size_t b = 0; b < dec1_blocks.size(); ++b)
            dec1_blocks[b].visit("dec1.block" + std::to_string(b), f);
        dec0_proj.visit("dec0.in", f);
        for (size_t b = 0; b < dec0_blocks.size(); ++b)
            dec0_blocks[b].visit("dec0.block" + std::to_string(b), f);
        out_proj.visit("out", f);
    }
};

// flat parameter access helpers

template <typename T, typename Model>
std::vector<Tensor<T>> parameters(Model& m) {
    std::vector<Tensor<T>> out;
    m.visit([&](const std::string&, Tensor<T>& t) { out.push_back(t); });
    return out;
}

template <typename T, typename Model>
std::vector<std::pair<std::string, Tensor<T>>> named_parameters(Model& m) {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    m.visit([&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, t); });
    return out;
}

template <typename T, typename Model>
Eigen::Index parameter_count(Model& m) {
    Eigen::Index c = 0;
    m.visit([&](const std::string&, Tensor<T>& t) { c += t.rows() * t.cols(); });
    return c;
}

} // namespace l2m::nn
