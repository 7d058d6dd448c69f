#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "depthhead/nn.hpp"

namespace depthhead {

// Adam with bias correction. Only the learning rate is tuned for this
// system; the remaining constants are the optimizer's standard defaults.
template <typename T>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<LayerParams<T>> m;  // first-moment accumulators, one per layer
    std::vector<LayerParams<T>> v;  // second-moment accumulators

    static AdamState for_network(const Network<T>& net, double lr = 1e-4) {
        AdamState st;
        st.lr = lr;
        for (const auto& p : net.params()) {
            LayerParams<T> zm, zv;
            if (!p.empty()) {
                zm.w = Tensor<T>(p.w.shape);
                zm.b = Tensor<T>(p.b.shape);
                zv.w = Tensor<T>(p.w.shape);
                zv.b = Tensor<T>(p.b.shape);
            }
            st.m.push_back(std::move(zm));
            st.v.push_back(std::move(zv));
        }
        return st;
    }
};

namespace detail {

template <typename T>
void adam_update(std::vector<T>& param, const std::vector<T>& grad, std::vector<T>& m,
                 std::vector<T>& v, const AdamState<T>& st) {
    const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        if (!std::isfinite(g))
            throw std::runtime_error("adam_step: non-finite gradient (training failure)");
        const double mi = st.beta1 * m[i] + (1.0 - st.beta1) * g;
        const double vi = st.beta2 * v[i] + (1.0 - st.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double m_hat = mi / c1;
        const double v_hat = vi / c2;
        param[i] = static_cast<T>(param[i] - st.lr * m_hat / (std::sqrt(v_hat) + st.eps));
    }
}

}  // namespace detail

// One bias-corrected update of every network parameter in place.
template <typename T>
void adam_step(Network<T>& net, const std::vector<LayerParams<T>>& grads, AdamState<T>& state) {
    auto& params = net.params();
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: gradient/state layout mismatch");
    ++state.t;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].empty()) continue;
        if (grads[i].w.shape != params[i].w.shape || grads[i].b.shape != params[i].b.shape)
            throw std::invalid_argument("adam_step: gradient shape mismatch");
        detail::adam_update(params[i].w.v, grads[i].w.v, state.m[i].w.v, state.v[i].w.v, state);
        detail::adam_update(params[i].b.v, grads[i].b.v, state.m[i].b.v, state.v[i].b.v, state);
    }
}

}  // namespace depthhead
