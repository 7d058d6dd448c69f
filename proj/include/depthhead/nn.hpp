#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthhead/gemm.hpp"
#include "depthhead/parallel.hpp"
#include "depthhead/rng.hpp"
#include "depthhead/tensor.hpp"

namespace depthhead {

enum class LayerKind : std::uint32_t {
    Conv = 1,      // valid convolution, square kernel
    MaxPool = 2,   // square window, stride = window, floor on odd sizes
    Tanh = 3,
    Flatten = 4,
    Dense = 5,
    Softmax = 6,
};

struct LayerDesc {
    LayerKind kind;
    int in_ch = 0, out_ch = 0, kernel = 0;  // Conv
    int pool = 0;                           // MaxPool
    int in_dim = 0, out_dim = 0;            // Dense

    static LayerDesc conv(int in_ch, int out_ch, int kernel) {
        LayerDesc d{LayerKind::Conv};
        d.in_ch = in_ch;
        d.out_ch = out_ch;
        d.kernel = kernel;
        return d;
    }
    static LayerDesc max_pool(int size) {
        LayerDesc d{LayerKind::MaxPool};
        d.pool = size;
        return d;
    }
    static LayerDesc tanh() { return LayerDesc{LayerKind::Tanh}; }
    static LayerDesc flatten() { return LayerDesc{LayerKind::Flatten}; }
    static LayerDesc dense(int in_dim, int out_dim) {
        LayerDesc d{LayerKind::Dense};
        d.in_dim = in_dim;
        d.out_dim = out_dim;
        return d;
    }
    static LayerDesc softmax() { return LayerDesc{LayerKind::Softmax}; }
};

template <typename T>
struct LayerParams {
    Tensor<T> w;
    Tensor<T> b;
    bool empty() const { return w.v.empty() && b.v.empty(); }
};

// Activation extents at layer boundaries. Vectors are modeled as c with
// h = w = 1 once flattened.
struct Extent {
    int c = 0, h = 0, w = 0;
    std::size_t count() const {
        return static_cast<std::size_t>(c) * h * w;
    }
};

namespace detail {

// ---- per-sample layer kernels (shared by inference and training paths) ----
//
// Activations are kept in HWC order and conv weights as [k*k*c][filters].
// Every conv product then runs with the small weight-sized matrix as the hot
// operand and a wide contiguous inner loop, which the compiler vectorizes
// without needing to reassociate any reduction (results stay deterministic).

// in: [h*w][c] -> colT: [oh*ow][k*k*c]
template <typename T>
void im2col(const T* in, int c, int h, int w, int k, T* colT) {
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    const std::size_t kk = static_cast<std::size_t>(k) * k * c;
    const std::size_t run = static_cast<std::size_t>(k) * c;  // one kernel row
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* row = colT + (static_cast<std::size_t>(oy) * ow + ox) * kk;
            for (int ky = 0; ky < k; ++ky) {
                const T* src = in + (static_cast<std::size_t>(oy + ky) * w + ox) * c;
                std::copy(src, src + run, row + ky * run);
            }
        }
    }
}

// colT: [oh*ow][k*k*c] scatter-added back to [h*w][c]
template <typename T>
void col2im_add(const T* colT, int c, int h, int w, int k, T* in_grad) {
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    const std::size_t kk = static_cast<std::size_t>(k) * k * c;
    const std::size_t run = static_cast<std::size_t>(k) * c;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const T* row = colT + (static_cast<std::size_t>(oy) * ow + ox) * kk;
            for (int ky = 0; ky < k; ++ky) {
                T* dst = in_grad + (static_cast<std::size_t>(oy + ky) * w + ox) * c;
                const T* src = row + ky * run;
                for (std::size_t i = 0; i < run; ++i) dst[i] += src[i];
            }
        }
    }
}

template <typename T>
void conv_forward_sample(const T* in, const Extent& ie, const LayerDesc& d, const T* w,
                         const T* b, T* col_scratch, T* out) {
    const int k = d.kernel;
    const int oh = ie.h - k + 1;
    const int ow = ie.w - k + 1;
    const int kk = d.in_ch * k * k;
    const int hw = oh * ow;
    im2col(in, ie.c, ie.h, ie.w, k, col_scratch);
    for (int i = 0; i < hw; ++i) {
        T* row = out + static_cast<std::size_t>(i) * d.out_ch;
        for (int f = 0; f < d.out_ch; ++f) row[f] = b[f];
    }
    // out[hw][f] += colT[hw][kk] * w[kk][f]
    gemm_nn(col_scratch, w, out, hw, kk, d.out_ch);
}

template <typename T>
void pool_forward_sample(const T* in, const Extent& ie, int p, T* out, int* argmax) {
    const int oh = ie.h / p;
    const int ow = ie.w / p;
    const int c = ie.c;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* orow = out + (static_cast<std::size_t>(oy) * ow + ox) * c;
            int* arow = argmax ? argmax + (static_cast<std::size_t>(oy) * ow + ox) * c : nullptr;
            for (int ci = 0; ci < c; ++ci) {
                int best = (oy * p * ie.w + ox * p) * c + ci;
                T best_v = in[best];
                for (int dy = 0; dy < p; ++dy) {
                    for (int dx = 0; dx < p; ++dx) {
                        const int idx = ((oy * p + dy) * ie.w + ox * p + dx) * c + ci;
                        if (in[idx] > best_v) {  // first max wins ties
                            best_v = in[idx];
                            best = idx;
                        }
                    }
                }
                orow[ci] = best_v;
                if (arow) arow[ci] = best;
            }
        }
    }
}

template <typename T>
void dense_forward_sample(const T* in, const LayerDesc& d, const T* w, const T* b, T* out) {
    for (int o = 0; o < d.out_dim; ++o) {
        const T* wrow = w + static_cast<std::size_t>(o) * d.in_dim;
        T acc = b[o];
        for (int i = 0; i < d.in_dim; ++i) acc += wrow[i] * in[i];
        out[o] = acc;
    }
}

template <typename T>
void softmax_sample(const T* logits, int n, T* probs) {
    T m = logits[0];
    for (int i = 1; i < n; ++i) m = std::max(m, logits[i]);
    T sum{0};
    for (int i = 0; i < n; ++i) {
        probs[i] = std::exp(logits[i] - m);
        sum += probs[i];
    }
    for (int i = 0; i < n; ++i) probs[i] /= sum;
}

}  // namespace detail

// Feed-forward network over single-channel square inputs. Parameters and
// layer order are fixed at construction; forward_cached/backward/adam share
// the instance and are meant for one training thread, while const forward
// is safe to call concurrently.
template <typename T>
class Network {
public:
    Network(int in_h, int in_w, int in_c, std::vector<LayerDesc> layers)
        : in_extent_{in_c, in_h, in_w}, layers_(std::move(layers)) {
        if (in_h <= 0 || in_w <= 0 || in_c <= 0)
            throw std::invalid_argument("Network: bad input shape");
        if (layers_.empty()) throw std::invalid_argument("Network: no layers");
        Extent e = in_extent_;
        for (const LayerDesc& d : layers_) {
            extents_.push_back(e);
            LayerParams<T> p;
            switch (d.kind) {
                case LayerKind::Conv: {
                    if (d.in_ch != e.c)
                        throw std::invalid_argument("Network: conv channel mismatch");
                    if (d.kernel < 1 || d.kernel > e.h || d.kernel > e.w)
                        throw std::invalid_argument("Network: conv kernel exceeds input");
                    p.w = Tensor<T>({d.kernel, d.kernel, d.in_ch, d.out_ch});
                    p.b = Tensor<T>({d.out_ch});
                    e = {d.out_ch, e.h - d.kernel + 1, e.w - d.kernel + 1};
                    break;
                }
                case LayerKind::MaxPool: {
                    if (d.pool < 1 || e.h < d.pool || e.w < d.pool)
                        throw std::invalid_argument("Network: pool window exceeds input");
                    e = {e.c, e.h / d.pool, e.w / d.pool};
                    break;
                }
                case LayerKind::Tanh:
                    break;
                case LayerKind::Flatten:
                    e = {static_cast<int>(e.count()), 1, 1};
                    break;
                case LayerKind::Dense: {
                    if (e.h != 1 || e.w != 1 || d.in_dim != e.c)
                        throw std::invalid_argument("Network: dense input mismatch (flatten first)");
                    p.w = Tensor<T>({d.out_dim, d.in_dim});
                    p.b = Tensor<T>({d.out_dim});
                    e = {d.out_dim, 1, 1};
                    break;
                }
                case LayerKind::Softmax:
                    if (e.h != 1 || e.w != 1)
                        throw std::invalid_argument("Network: softmax expects a vector");
                    break;
                default:
                    throw std::invalid_argument("Network: unknown layer kind");
            }
            params_.push_back(std::move(p));
        }
        out_extent_ = e;
        extents_.push_back(e);
    }

    int input_h() const { return in_extent_.h; }
    int input_w() const { return in_extent_.w; }
    int input_c() const { return in_extent_.c; }
    int output_dim() const { return static_cast<int>(out_extent_.count()); }
    const std::vector<LayerDesc>& layers() const { return layers_; }
    std::vector<LayerParams<T>>& params() { return params_; }
    const std::vector<LayerParams<T>>& params() const { return params_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.w.size() + p.b.size();
        return n;
    }

    // Uniform [-s, s] with s = sqrt(6 / (fan_in + fan_out)); biases zero.
    void init_weights(std::uint32_t seed) {
        std::mt19937 rng(seed);
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (params_[i].empty()) continue;
            const LayerDesc& d = layers_[i];
            double fan_in, fan_out;
            if (d.kind == LayerKind::Conv) {
                fan_in = static_cast<double>(d.in_ch) * d.kernel * d.kernel;
                fan_out = static_cast<double>(d.out_ch) * d.kernel * d.kernel;
            } else {
                fan_in = d.in_dim;
                fan_out = d.out_dim;
            }
            const double s = std::sqrt(6.0 / (fan_in + fan_out));
            for (T& x : params_[i].w.v) x = static_cast<T>(uniform_real(rng, -s, s));
            for (T& x : params_[i].b.v) x = T{0};
        }
    }

    // Inference: batch {N, c, h, w} -> probabilities {N, out_dim}. Samples
    // are processed independently, so batching never changes a result.
    Tensor<T> forward(const Tensor<T>& batch) const {
        const int n = check_batch(batch);
        Tensor<T> probs({n, output_dim()});
        std::size_t scratch = 0, col_max = 0;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            scratch = std::max(scratch, extents_[i].count());
            if (layers_[i].kind == LayerKind::Conv) col_max = std::max(col_max, col_size(i));
        }
        scratch = std::max(scratch, extents_.back().count());
        const std::size_t in_count = in_extent_.count();
        parallel_ranges(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            std::vector<T> ping(scratch), pong(scratch), col(col_max);
            for (std::size_t s = begin; s < end; ++s) {
                const T* x = batch.data() + s * in_count;
                std::copy(x, x + in_count, ping.data());
                T* cur = ping.data();
                T* nxt = pong.data();
                for (std::size_t i = 0; i < layers_.size(); ++i) {
                    run_layer(i, cur, nxt, col.data(), nullptr);
                    if (layer_out_of_place(layers_[i].kind)) std::swap(cur, nxt);
                }
                std::copy(cur, cur + output_dim(), probs.data() + s * output_dim());
            }
        });
        return probs;
    }

    // Training-path forward: keeps every layer activation for backward.
    // Cache buffers are recycled between calls of the same batch size.
    const Tensor<T>& forward_cached(const Tensor<T>& batch) {
        const int n = check_batch(batch);
        if (batch_n_ != n) {
            acts_.assign(layers_.size(), Tensor<T>());
            argmax_.assign(layers_.size(), {});
            for (std::size_t i = 0; i < layers_.size(); ++i) {
                const auto oc = out_count(i);
                acts_[i] = Tensor<T>({n, static_cast<int>(oc)});
                if (layers_[i].kind == LayerKind::MaxPool)
                    argmax_[i].resize(static_cast<std::size_t>(n) * oc);
            }
        }
        batch_n_ = n;
        input_ = batch;
        std::size_t col_max = 0;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            if (layers_[i].kind == LayerKind::Conv) col_max = std::max(col_max, col_size(i));
        parallel_ranges(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            std::vector<T> col(col_max);
            for (std::size_t s = begin; s < end; ++s) {
                for (std::size_t i = 0; i < layers_.size(); ++i) {
                    const T* in = (i == 0) ? batch.data() + s * in_extent_.count()
                                           : acts_[i - 1].data() + s * out_count(i - 1);
                    T* out = acts_[i].data() + s * out_count(i);
                    int* am = argmax_[i].empty() ? nullptr : argmax_[i].data() + s * out_count(i);
                    run_layer_cached(i, in, out, col.data(), am);
                }
            }
        });
        return acts_.back();
    }

    // Gradients of the mean cross-entropy loss for the batch last seen by
    // forward_cached. The final layer must be Softmax; the softmax/loss pair
    // is differentiated in closed form.
    std::vector<LayerParams<T>> backward(const std::vector<int>& labels) {
        if (batch_n_ == 0 || acts_.empty())
            throw std::logic_error("Network::backward called before forward_cached");
        if (labels.size() != static_cast<std::size_t>(batch_n_))
            throw std::invalid_argument("Network::backward: label count mismatch");
        if (layers_.back().kind != LayerKind::Softmax)
            throw std::logic_error("Network::backward requires a softmax output layer");
        const int n = batch_n_;
        const int classes = output_dim();

        std::vector<LayerParams<T>> grads(layers_.size());
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (!params_[i].empty()) {
                grads[i].w = Tensor<T>(params_[i].w.shape);
                grads[i].b = Tensor<T>(params_[i].b.shape);
            }
        }

        // delta: gradient w.r.t. the current layer's output, batch-major.
        Tensor<T> delta({n, classes});
        const Tensor<T>& probs = acts_.back();
        for (int s = 0; s < n; ++s) {
            if (labels[s] < 0 || labels[s] >= classes)
                throw std::invalid_argument("Network::backward: label out of range");
            for (int c = 0; c < classes; ++c) {
                const T p = probs.v[static_cast<std::size_t>(s) * classes + c];
                delta.v[static_cast<std::size_t>(s) * classes + c] =
                    (p - (labels[s] == c ? T{1} : T{0})) / static_cast<T>(n);
            }
        }

        for (std::size_t li = layers_.size() - 1; li + 1 > 0; --li) {
            const LayerDesc& d = layers_[li];
            if (d.kind == LayerKind::Softmax) {
                if (li != layers_.size() - 1)
                    throw std::logic_error("Network::backward: softmax must be the output layer");
                continue;  // folded into delta above
            }
            const std::size_t in_c = (li == 0) ? in_extent_.count() : out_count(li - 1);
            const std::size_t oc = out_count(li);
            const bool need_dx = li > 0;
            Tensor<T> din;
            if (need_dx) din = Tensor<T>({n, static_cast<int>(in_c)});

            switch (d.kind) {
                case LayerKind::Conv: {
                    backward_conv(li, delta, din, grads[li], need_dx);
                    break;
                }
                case LayerKind::Dense: {
                    backward_dense(li, delta, din, grads[li], need_dx);
                    break;
                }
                case LayerKind::Tanh: {
                    if (!need_dx) break;
                    const Tensor<T>& a = acts_[li];
                    parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
                        const T* dy = delta.data() + s * oc;
                        const T* av = a.data() + s * oc;
                        T* dx = din.data() + s * oc;
                        for (std::size_t i = 0; i < oc; ++i)
                            dx[i] = dy[i] * (T{1} - av[i] * av[i]);
                    });
                    break;
                }
                case LayerKind::MaxPool: {
                    if (!need_dx) break;
                    parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
                        const T* dy = delta.data() + s * oc;
                        const int* am = argmax_[li].data() + s * oc;
                        T* dx = din.data() + s * in_c;
                        for (std::size_t i = 0; i < oc; ++i) dx[am[i]] += dy[i];
                    });
                    break;
                }
                case LayerKind::Flatten: {
                    if (!need_dx) break;
                    din.v = delta.v;  // same memory layout
                    break;
                }
                default:
                    throw std::logic_error("Network::backward: unexpected layer");
            }
            if (need_dx) delta = std::move(din);
        }
        return grads;
    }

    // Post-forward_cached introspection (training diagnostics, tests).
    const Tensor<T>& cached_activation(std::size_t layer) const {
        if (batch_n_ == 0) throw std::logic_error("Network: no cached activations");
        return acts_.at(layer);
    }
    Extent boundary_extent(std::size_t boundary) const { return extents_.at(boundary); }

    bool has_cache() const { return batch_n_ > 0; }
    void drop_cache() {
        batch_n_ = 0;
        input_ = {};
        acts_.clear();
        argmax_.clear();
    }

private:
    static bool layer_out_of_place(LayerKind k) {
        return k != LayerKind::Tanh && k != LayerKind::Softmax && k != LayerKind::Flatten;
    }

    int check_batch(const Tensor<T>& batch) const {
        if (batch.shape.empty() || batch.size() % in_extent_.count() != 0)
            throw std::invalid_argument("Network: batch does not match input shape");
        const std::size_t n = batch.size() / in_extent_.count();
        if (batch.shape[0] != static_cast<int>(n))
            throw std::invalid_argument("Network: batch shape mismatch");
        return static_cast<int>(n);
    }

    std::size_t out_count(std::size_t li) const { return extents_[li + 1].count(); }

    std::size_t col_size(std::size_t li) const {
        const Extent& e = extents_[li];
        const LayerDesc& d = layers_[li];
        const int oh = e.h - d.kernel + 1;
        const int ow = e.w - d.kernel + 1;
        return static_cast<std::size_t>(d.in_ch) * d.kernel * d.kernel * oh * ow;
    }

    // Inference layer dispatch. Tanh/softmax/flatten run in place on `cur`.
    void run_layer(std::size_t i, T* cur, T* nxt, T* col, int* argmax) const {
        const LayerDesc& d = layers_[i];
        const Extent& ie = extents_[i];
        switch (d.kind) {
            case LayerKind::Conv:
                detail::conv_forward_sample(cur, ie, d, params_[i].w.data(), params_[i].b.data(),
                                            col, nxt);
                break;
            case LayerKind::MaxPool:
                detail::pool_forward_sample(cur, ie, d.pool, nxt, argmax);
                break;
            case LayerKind::Tanh:
                for (std::size_t j = 0; j < ie.count(); ++j) cur[j] = std::tanh(cur[j]);
                break;
            case LayerKind::Flatten:
                break;
            case LayerKind::Dense:
                detail::dense_forward_sample(cur, d, params_[i].w.data(), params_[i].b.data(), nxt);
                break;
            case LayerKind::Softmax:
                detail::softmax_sample(cur, static_cast<int>(ie.count()), cur);
                break;
        }
    }

    // Training layer dispatch: always out-of-place into the activation cache.
    void run_layer_cached(std::size_t i, const T* in, T* out, T* col, int* argmax) {
        const LayerDesc& d = layers_[i];
        const Extent& ie = extents_[i];
        switch (d.kind) {
            case LayerKind::Conv:
                detail::conv_forward_sample(in, ie, d, params_[i].w.data(), params_[i].b.data(),
                                            col, out);
                break;
            case LayerKind::MaxPool:
                detail::pool_forward_sample(in, ie, d.pool, out, argmax);
                break;
            case LayerKind::Tanh:
                for (std::size_t j = 0; j < ie.count(); ++j) out[j] = std::tanh(in[j]);
                break;
            case LayerKind::Flatten:
                std::copy(in, in + ie.count(), out);
                break;
            case LayerKind::Dense:
                detail::dense_forward_sample(in, d, params_[i].w.data(), params_[i].b.data(), out);
                break;
            case LayerKind::Softmax:
                detail::softmax_sample(in, static_cast<int>(ie.count()), out);
                break;
        }
    }

    void backward_conv(std::size_t li, const Tensor<T>& delta, Tensor<T>& din,
                       LayerParams<T>& grad, bool need_dx) {
        const LayerDesc& d = layers_[li];
        const Extent& ie = extents_[li];
        const int n = batch_n_;
        const int k = d.kernel;
        const int oh = ie.h - k + 1;
        const int ow = ie.w - k + 1;
        const int hw = oh * ow;
        const int kk = d.in_ch * k * k;
        const std::size_t wsz = grad.w.size();

        // Per-sample partial weight gradients keep the final reduction in a
        // fixed sample order regardless of thread count.
        std::vector<T> dw_partial(static_cast<std::size_t>(n) * wsz);
        std::vector<T> db_partial(static_cast<std::size_t>(n) * d.out_ch);
        const std::size_t in_c = (li == 0) ? in_extent_.count() : out_count(li - 1);
        const T* prev = (li == 0) ? input_.data() : acts_[li - 1].data();

        // w is [kk][f]; the input-gradient product wants [f][kk]
        std::vector<T> w_t;
        if (need_dx) {
            w_t.resize(wsz);
            const T* w = params_[li].w.data();
            for (int p = 0; p < kk; ++p)
                for (int f = 0; f < d.out_ch; ++f)
                    w_t[static_cast<std::size_t>(f) * kk + p] =
                        w[static_cast<std::size_t>(p) * d.out_ch + f];
        }

        parallel_ranges(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
            std::vector<T> col(col_size(li));
            std::vector<T> dcol(need_dx ? col.size() : 0);
            for (std::size_t s = begin; s < end; ++s) {
                const T* x = prev + s * in_c;
                const T* dy = delta.data() + s * static_cast<std::size_t>(d.out_ch) * hw;
                detail::im2col(x, ie.c, ie.h, ie.w, k, col.data());
                // dW[kk][f] += colT[hw][kk]^T * dy[hw][f]
                gemm_tn(col.data(), dy, dw_partial.data() + s * wsz, kk, hw, d.out_ch);
                T* db = db_partial.data() + s * d.out_ch;
                for (int i = 0; i < hw; ++i) {
                    const T* row = dy + static_cast<std::size_t>(i) * d.out_ch;
                    for (int f = 0; f < d.out_ch; ++f) db[f] += row[f];
                }
                if (need_dx) {
                    std::fill(dcol.begin(), dcol.end(), T{0});
                    // dcolT[hw][kk] = dy[hw][f] * w_t[f][kk]
                    gemm_nn(dy, w_t.data(), dcol.data(), hw, d.out_ch, kk);
                    T* dx = din.data() + s * in_c;
                    std::fill(dx, dx + in_c, T{0});
                    detail::col2im_add(dcol.data(), ie.c, ie.h, ie.w, k, dx);
                }
            }
        });
        for (int s = 0; s < n; ++s) {
            const T* dw = dw_partial.data() + static_cast<std::size_t>(s) * wsz;
            for (std::size_t i = 0; i < wsz; ++i) grad.w.v[i] += dw[i];
            const T* db = db_partial.data() + static_cast<std::size_t>(s) * d.out_ch;
            for (int f = 0; f < d.out_ch; ++f) grad.b.v[f] += db[f];
        }
    }

    void backward_dense(std::size_t li, const Tensor<T>& delta, Tensor<T>& din,
                        LayerParams<T>& grad, bool need_dx) {
        const LayerDesc& d = layers_[li];
        const int n = batch_n_;
        const std::size_t in_c = (li == 0) ? in_extent_.count() : out_count(li - 1);
        const T* prev = (li == 0) ? input_.data() : acts_[li - 1].data();
        // dW = delta^T * X, summed over the batch in sample order.
        gemm_tn(delta.data(), prev, grad.w.data(), d.out_dim, n, d.in_dim);
        for (int s = 0; s < n; ++s) {
            const T* dy = delta.data() + static_cast<std::size_t>(s) * d.out_dim;
            for (int o = 0; o < d.out_dim; ++o) grad.b.v[o] += dy[o];
        }
        if (need_dx) {
            parallel_for(static_cast<std::size_t>(n), [&](std::size_t s) {
                const T* dy = delta.data() + s * d.out_dim;
                T* dx = din.data() + s * in_c;
                std::fill(dx, dx + in_c, T{0});
                gemm_tn(params_[li].w.data(), dy, dx, d.in_dim, d.out_dim, 1);
            });
        }
    }

    Extent in_extent_;
    Extent out_extent_;
    std::vector<LayerDesc> layers_;
    std::vector<LayerParams<T>> params_;
    std::vector<Extent> extents_;  // layers_.size() + 1 boundaries

    // training cache
    int batch_n_ = 0;
    Tensor<T> input_;
    std::vector<Tensor<T>> acts_;
    std::vector<std::vector<int>> argmax_;
};

// Mean categorical cross-entropy; probabilities are clamped at 1e-12 so the
// loss stays finite even on confident mistakes.
template <typename T>
double cross_entropy(const Tensor<T>& probs, const std::vector<int>& labels) {
    if (probs.shape.size() != 2 || labels.size() != static_cast<std::size_t>(probs.shape[0]))
        throw std::invalid_argument("cross_entropy: shape mismatch");
    const int classes = probs.shape[1];
    double sum = 0.0;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        if (labels[s] < 0 || labels[s] >= classes)
            throw std::invalid_argument("cross_entropy: label out of range");
        const double p = static_cast<double>(probs.v[s * classes + labels[s]]);
        sum += -std::log(std::max(p, 1e-12));
    }
    return sum / static_cast<double>(labels.size());
}

// The head/non-head classifier: five conv layers (32 filters of 5x5, 4x4,
// 3x3, 3x3, then 128 of 3x3), max-pooling after the first three, tanh
// everywhere, and 128-84-2 fully connected layers with a softmax output.
// For the standard 64x64 input the conv stack ends at 1x1x128, so the first
// dense layer sees a 128-vector. Class 1 is "head".
inline std::vector<LayerDesc> head_net_layers(int patch_side = 64) {
    int side = patch_side;
    side = side - 5 + 1;  // conv1
    side = side / 2;      // pool1
    side = side - 4 + 1;  // conv2
    side = side / 2;      // pool2
    side = side - 3 + 1;  // conv3
    side = side / 2;      // pool3
    side = side - 3 + 1;  // conv4
    side = side - 3 + 1;  // conv5
    if (side < 1) throw std::invalid_argument("head_net_layers: input too small");
    const int flat = side * side * 128;
    return {
        LayerDesc::conv(1, 32, 5),   LayerDesc::tanh(), LayerDesc::max_pool(2),
        LayerDesc::conv(32, 32, 4),  LayerDesc::tanh(), LayerDesc::max_pool(2),
        LayerDesc::conv(32, 32, 3),  LayerDesc::tanh(), LayerDesc::max_pool(2),
        LayerDesc::conv(32, 32, 3),  LayerDesc::tanh(),
        LayerDesc::conv(32, 128, 3), LayerDesc::tanh(),
        LayerDesc::flatten(),
        LayerDesc::dense(flat, 128), LayerDesc::tanh(),
        LayerDesc::dense(128, 84),   LayerDesc::tanh(),
        LayerDesc::dense(84, 2),     LayerDesc::softmax(),
    };
}

constexpr int kClassNonHead = 0;
constexpr int kClassHead = 1;

inline Network<float> make_head_network(int patch_side = 64) {
    return Network<float>(patch_side, patch_side, 1, head_net_layers(patch_side));
}

}  // namespace depthhead
