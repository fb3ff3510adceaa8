#pragma once

#include "l2m/nn/tensor.hpp"

namespace l2m::nn {

template <typename T>
struct AdamState {
    std::vector<Mat<T>> m, v;
    long step = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    template <typename Tensors>
    static AdamState init(const Tensors& params) {
        AdamState st;
        st.m.reserve(params.size());
        st.v.reserve(params.size());
        for (const auto& p : params) {
            st.m.push_back(Mat<T>::Zero(p.rows(), p.cols()));
            st.v.push_back(Mat<T>::Zero(p.rows(), p.cols()));
        }
        return st;
    }
};

// One bias-corrected Adam update, reading each parameter's accumulated
// gradient in place.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, T lr) {
    if (params.size() != state.m.size())
        throw std::invalid_argument("adam_step: state was initialized for a different parameter set");
    ++state.step;
    const T bc1 = T(1) - std::pow(state.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(state.beta2, static_cast<T>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        const Mat<T>& g = params[i].grad();
        state.m[i] = state.beta1 * state.m[i] + (T(1) - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (T(1) - state.beta2) * g.cwiseProduct(g);
        const Mat<T> m_hat = state.m[i] / bc1;
        const Mat<T> v_hat = state.v[i] / bc2;
        params[i].value_mut().array() -=
            lr * m_hat.array() / (v_hat.array().sqrt() + state.eps);
    }
}

} // namespace l2m::nn
