#include "core/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include <cblas.h>

#include "core/rng.hpp"

namespace tbiq {

std::size_t layer_param_count(const LayerDesc& d) {
    switch (d.kind) {
    case LayerKind::Conv:
        return static_cast<std::size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel + d.out_ch;
    case LayerKind::Residual:
        return 2 * (static_cast<std::size_t>(d.in_ch) * d.in_ch * d.kernel * d.kernel + d.in_ch);
    case LayerKind::Dense:
        return static_cast<std::size_t>(d.out_ch) * d.in_ch + d.out_ch;
    default:
        return 0;
    }
}

namespace {

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// column matrix layout: K = C*k*k rows, M = H*W columns (contiguous per row)
template <typename T>
void im2col(const T* x, int c, int h, int w, int k, T* col) {
    const int p = k / 2;
    const std::size_t m = static_cast<std::size_t>(h) * w;
    std::size_t j = 0;
    for (int ci = 0; ci < c; ++ci) {
        const T* plane = x + static_cast<std::size_t>(ci) * m;
        for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - p;
            for (int kx = 0; kx < k; ++kx, ++j) {
                const int dx = kx - p;
                T* dst = col + j * m;
                for (int y = 0; y < h; ++y) {
                    T* row = dst + static_cast<std::size_t>(y) * w;
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        std::fill(row, row + w, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(sy) * w;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    if (x0 > 0) std::fill(row, row + x0, T(0));
                    if (x1 > x0) std::memcpy(row + x0, src + x0 + dx, sizeof(T) * (x1 - x0));
                    if (x1 < w) std::fill(row + std::max(x1, 0), row + w, T(0));
                }
            }
        }
    }
}

// transpose of im2col: accumulate column-matrix rows back into the image
template <typename T>
void col2im_add(const T* col, int c, int h, int w, int k, T* x) {
    const int p = k / 2;
    const std::size_t m = static_cast<std::size_t>(h) * w;
    std::size_t j = 0;
    for (int ci = 0; ci < c; ++ci) {
        T* plane = x + static_cast<std::size_t>(ci) * m;
        for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - p;
            for (int kx = 0; kx < k; ++kx, ++j) {
                const int dx = kx - p;
                const T* src_row = col + j * m;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    T* dst = plane + static_cast<std::size_t>(sy) * w;
                    const T* src = src_row + static_cast<std::size_t>(y) * w;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    for (int xx = x0; xx < x1; ++xx) dst[xx + dx] += src[xx];
                }
            }
        }
    }
}

// weights stored [oc][ic][ky][kx]; GEMM wants [j = (ic,ky,kx)][oc]
template <typename T>
void transpose_weights(const T* w, int k, int in_ch, int out_ch, T* wt) {
    const int kk = k * k;
    for (int oc = 0; oc < out_ch; ++oc)
        for (int j = 0; j < in_ch * kk; ++j)
            wt[static_cast<std::size_t>(j) * out_ch + oc] = w[static_cast<std::size_t>(oc) * in_ch * kk + j];
}

// Same-padding cross-correlation, one sample at a time so results are
// independent of batch composition.
template <typename T>
void conv_forward(const Tensor4<T>& x, const T* w, const T* b, int k, int in_ch, int out_ch,
                  Tensor4<T>& y) {
    if (x.c != in_ch) throw std::invalid_argument("conv: channel mismatch");
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("conv: kernel must be odd");
    const int m = x.h * x.w;
    const int kdim = in_ch * k * k;
    std::vector<T> col(static_cast<std::size_t>(kdim) * m);
    std::vector<T> wt(static_cast<std::size_t>(kdim) * out_ch);
    transpose_weights(w, k, in_ch, out_ch, wt.data());
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), in_ch, x.h, x.w, k, col.data());
        // planes (OC x M) = Wt^T (OC x K) * col (K x M)
        gemm(true, false, out_ch, m, kdim, T(1), wt.data(), out_ch, col.data(), m, T(0),
             y.sample(i), m);
        for (int oc = 0; oc < out_ch; ++oc) {
            T* plane = y.sample(i) + static_cast<std::size_t>(oc) * m;
            const T bias = b[oc];
            for (int q = 0; q < m; ++q) plane[q] += bias;
        }
    }
}

template <typename T>
void conv_backward(const Tensor4<T>& x, const T* w, int k, int in_ch, int out_ch,
                   const Tensor4<T>& gy, Tensor4<T>* gx, double* gw, double* gb) {
    const int m = x.h * x.w;
    const int kdim = in_ch * k * k;
    std::vector<T> col(static_cast<std::size_t>(kdim) * m);
    std::vector<T> wt;
    std::vector<T> dcol;
    std::vector<T> dwt(static_cast<std::size_t>(kdim) * out_ch);
    if (gx) {
        wt.resize(static_cast<std::size_t>(kdim) * out_ch);
        transpose_weights(w, k, in_ch, out_ch, wt.data());
        dcol.resize(static_cast<std::size_t>(kdim) * m);
    }
    const int kk = k * k;
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), in_ch, x.h, x.w, k, col.data());
        // dWt (K x OC) = col (K x M) * gy^T (M x OC)
        gemm(false, true, kdim, out_ch, m, T(1), col.data(), m, gy.sample(i), m, T(0), dwt.data(),
             out_ch);
        for (int oc = 0; oc < out_ch; ++oc)
            for (int j = 0; j < kdim; ++j)
                gw[static_cast<std::size_t>(oc) * kdim + j] +=
                    static_cast<double>(dwt[static_cast<std::size_t>(j) * out_ch + oc]);
        for (int oc = 0; oc < out_ch; ++oc) {
            const T* plane = gy.sample(i) + static_cast<std::size_t>(oc) * m;
            double acc = 0.0;
            for (int q = 0; q < m; ++q) acc += static_cast<double>(plane[q]);
            gb[oc] += acc;
        }
        if (gx) {
            // dcol (K x M) = Wt (K x OC) * gy planes (OC x M)
            gemm(false, false, kdim, m, out_ch, T(1), wt.data(), out_ch, gy.sample(i), m, T(0),
                 dcol.data(), m);
            col2im_add(dcol.data(), in_ch, x.h, x.w, k, gx->sample(i));
        }
    }
    (void)kk;
}

} // namespace

template <typename T>
Network<T> Network<T>::build(const std::vector<LayerDesc>& layer_list, std::uint64_t seed) {
    Network<T> net;
    net.layers = layer_list;
    net.offsets.resize(layer_list.size());
    std::size_t total = 0;
    int cur_ch = -1;
    for (std::size_t i = 0; i < layer_list.size(); ++i) {
        const LayerDesc& d = layer_list[i];
        net.offsets[i] = total;
        total += layer_param_count(d);
        if (d.kind == LayerKind::Conv) {
            if (cur_ch >= 0 && d.in_ch != cur_ch)
                throw std::invalid_argument("Network: adjacent layer channels incompatible");
            cur_ch = d.out_ch;
        } else if (d.kind == LayerKind::Residual) {
            if (d.in_ch != d.out_ch) throw std::invalid_argument("Network: residual needs in==out");
            if (cur_ch >= 0 && d.in_ch != cur_ch)
                throw std::invalid_argument("Network: adjacent layer channels incompatible");
            cur_ch = d.out_ch;
        } else if (d.kind == LayerKind::Dense) {
            cur_ch = d.out_ch;
        }
    }
    net.params.assign(total, T(0));

    Rng rng(seed);
    for (std::size_t i = 0; i < layer_list.size(); ++i) {
        const LayerDesc& d = layer_list[i];
        T* p = net.params.data() + net.offsets[i];
        auto he_fill = [&rng](T* w, std::size_t n, int fan_in) {
            const double std = std::sqrt(2.0 / fan_in);
            for (std::size_t q = 0; q < n; ++q) w[q] = static_cast<T>(std * rng.gauss());
        };
        if (d.kind == LayerKind::Conv) {
            he_fill(p, static_cast<std::size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel,
                    d.in_ch * d.kernel * d.kernel);
        } else if (d.kind == LayerKind::Residual) {
            const std::size_t wn = static_cast<std::size_t>(d.in_ch) * d.in_ch * d.kernel * d.kernel;
            he_fill(p, wn, d.in_ch * d.kernel * d.kernel);
            he_fill(p + wn + d.in_ch, wn, d.in_ch * d.kernel * d.kernel);
        } else if (d.kind == LayerKind::Dense) {
            he_fill(p, static_cast<std::size_t>(d.out_ch) * d.in_ch, d.in_ch);
        }
    }
    return net;
}

template <typename T>
Tensor4<T> Network<T>::forward(const Tensor4<T>& x, ForwardCache<T>* cache) const {
    if (cache) {
        cache->inputs.assign(layers.size(), Tensor4<T>());
        cache->aux.assign(layers.size(), Tensor4<T>());
        cache->aux2.assign(layers.size(), Tensor4<T>());
        cache->valid = true;
    }
    Tensor4<T> cur = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        if (cache) cache->inputs[i] = cur;
        const T* p = params.data() + offsets[i];
        switch (d.kind) {
        case LayerKind::Conv: {
            Tensor4<T> y(cur.n, d.out_ch, cur.h, cur.w);
            conv_forward(cur, p, p + static_cast<std::size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel,
                         d.kernel, d.in_ch, d.out_ch, y);
            cur = std::move(y);
            break;
        }
        case LayerKind::Relu: {
            for (T& v : cur.v) v = v > T(0) ? v : T(0);
            break;
        }
        case LayerKind::Residual: {
            const std::size_t wn = static_cast<std::size_t>(d.in_ch) * d.in_ch * d.kernel * d.kernel;
            Tensor4<T> t1(cur.n, d.in_ch, cur.h, cur.w);
            conv_forward(cur, p, p + wn, d.kernel, d.in_ch, d.in_ch, t1);
            if (cache) cache->aux[i] = t1;
            for (T& v : t1.v) v = v > T(0) ? v : T(0);
            if (cache) cache->aux2[i] = t1;
            Tensor4<T> t2(cur.n, d.in_ch, cur.h, cur.w);
            conv_forward(t1, p + wn + d.in_ch, p + 2 * wn + d.in_ch, d.kernel, d.in_ch, d.in_ch, t2);
            for (std::size_t q = 0; q < cur.size(); ++q) cur.v[q] += t2.v[q];
            break;
        }
        case LayerKind::GlobalAvgPool: {
            Tensor4<T> y(cur.n, cur.c, 1, 1);
            const std::size_t m = cur.plane();
            for (int i2 = 0; i2 < cur.n; ++i2)
                for (int ci = 0; ci < cur.c; ++ci) {
                    const T* plane = cur.sample(i2) + m * ci;
                    double acc = 0.0;
                    for (std::size_t q = 0; q < m; ++q) acc += static_cast<double>(plane[q]);
                    y.at(i2, ci, 0, 0) = static_cast<T>(acc / static_cast<double>(m));
                }
            cur = std::move(y);
            break;
        }
        case LayerKind::Dense: {
            const int f = cur.c * cur.h * cur.w;
            if (f != d.in_ch) throw std::invalid_argument("dense: feature count mismatch");
            Tensor4<T> y(cur.n, d.out_ch, 1, 1);
            // Y (N x OC) = X (N x F) * W^T (F x OC)
            gemm(false, true, cur.n, d.out_ch, f, T(1), cur.v.data(), f, p, f, T(0), y.v.data(),
                 d.out_ch);
            const T* b = p + static_cast<std::size_t>(d.out_ch) * d.in_ch;
            for (int i2 = 0; i2 < y.n; ++i2)
                for (int oc = 0; oc < d.out_ch; ++oc) y.at(i2, oc, 0, 0) += b[oc];
            cur = std::move(y);
            break;
        }
        case LayerKind::Sigmoid: {
            for (T& v : cur.v) v = T(1) / (T(1) + std::exp(-v));
            break;
        }
        }
    }
    if (cache) cache->output = cur;
    return cur;
}

template <typename T>
Tensor4<T> Network<T>::backward_from(std::size_t from, const ForwardCache<T>& cache,
                                     const Tensor4<T>& grad_at, std::vector<T>& param_grads) const {
    if (!cache.valid || cache.inputs.size() != layers.size())
        throw std::runtime_error("backward: missing forward cache");
    std::vector<double> acc(params.size(), 0.0);
    Tensor4<T> g = grad_at;
    for (std::size_t ii = from; ii-- > 0;) {
        const LayerDesc& d = layers[ii];
        const T* p = params.data() + offsets[ii];
        double* gp = acc.data() + offsets[ii];
        const Tensor4<T>& x = cache.inputs[ii];
        switch (d.kind) {
        case LayerKind::Conv: {
            Tensor4<T> gx(x.n, x.c, x.h, x.w);
            const std::size_t wn = static_cast<std::size_t>(d.out_ch) * d.in_ch * d.kernel * d.kernel;
            conv_backward(x, p, d.kernel, d.in_ch, d.out_ch, g, &gx, gp, gp + wn);
            g = std::move(gx);
            break;
        }
        case LayerKind::Relu: {
            Tensor4<T> gx = g;
            for (std::size_t q = 0; q < gx.size(); ++q)
                if (x.v[q] < T(0)) gx.v[q] = T(0);
            g = std::move(gx);
            break;
        }
        case LayerKind::Residual: {
            const std::size_t wn = static_cast<std::size_t>(d.in_ch) * d.in_ch * d.kernel * d.kernel;
            // branch: t1 = conv1(x); r = relu(t1); t2 = conv2(r); y = x + t2
            Tensor4<T> gr(x.n, d.in_ch, x.h, x.w);
            conv_backward(cache.aux2[ii], p + wn + d.in_ch, d.kernel, d.in_ch, d.in_ch, g, &gr,
                          gp + wn + d.in_ch, gp + 2 * wn + d.in_ch);
            for (std::size_t q = 0; q < gr.size(); ++q)
                if (cache.aux[ii].v[q] < T(0)) gr.v[q] = T(0);
            Tensor4<T> gx(x.n, x.c, x.h, x.w);
            conv_backward(x, p, d.kernel, d.in_ch, d.in_ch, gr, &gx, gp, gp + wn);
            for (std::size_t q = 0; q < gx.size(); ++q) gx.v[q] += g.v[q]; // identity skip
            g = std::move(gx);
            break;
        }
        case LayerKind::GlobalAvgPool: {
            Tensor4<T> gx(x.n, x.c, x.h, x.w);
            const std::size_t m = x.plane();
            const T inv = T(1) / static_cast<T>(m);
            for (int i2 = 0; i2 < x.n; ++i2)
                for (int ci = 0; ci < x.c; ++ci) {
                    const T gv = g.at(i2, ci, 0, 0) * inv;
                    T* plane = gx.sample(i2) + m * ci;
                    for (std::size_t q = 0; q < m; ++q) plane[q] = gv;
                }
            g = std::move(gx);
            break;
        }
        case LayerKind::Dense: {
            const int f = x.c * x.h * x.w;
            // dW (OC x F) = g^T (OC x N) * X (N x F), accumulated in double
            std::vector<T> dw(static_cast<std::size_t>(d.out_ch) * f);
            gemm(true, false, d.out_ch, f, x.n, T(1), g.v.data(), d.out_ch, x.v.data(), f, T(0),
                 dw.data(), f);
            for (std::size_t q = 0; q < dw.size(); ++q) gp[q] += static_cast<double>(dw[q]);
            double* gb = gp + static_cast<std::size_t>(d.out_ch) * f;
            for (int i2 = 0; i2 < x.n; ++i2)
                for (int oc = 0; oc < d.out_ch; ++oc)
                    gb[oc] += static_cast<double>(g.at(i2, oc, 0, 0));
            Tensor4<T> gx(x.n, x.c, x.h, x.w);
            gemm(false, false, x.n, f, d.out_ch, T(1), g.v.data(), d.out_ch, p, f, T(0),
                 gx.v.data(), f);
            g = std::move(gx);
            break;
        }
        case LayerKind::Sigmoid: {
            // output cached only at network tail; recompute s from input
            Tensor4<T> gx = g;
            for (std::size_t q = 0; q < gx.size(); ++q) {
                const T s = T(1) / (T(1) + std::exp(-x.v[q]));
                gx.v[q] *= s * (T(1) - s);
            }
            g = std::move(gx);
            break;
        }
        }
    }
    param_grads.assign(params.size(), T(0));
    for (std::size_t q = 0; q < acc.size(); ++q) param_grads[q] = static_cast<T>(acc[q]);
    return g;
}

template <typename T>
Tensor4<T> Network<T>::backward(const ForwardCache<T>& cache, const Tensor4<T>& grad_out,
                                std::vector<T>& param_grads) const {
    return backward_from(layers.size(), cache, grad_out, param_grads);
}

template <typename T>
void adam_step(Network<T>& net, AdamState<T>& state, const std::vector<T>& grads, double lr) {
    if (grads.size() != net.params.size())
        throw std::invalid_argument("adam_step: gradient size mismatch");
    if (state.m.size() != net.params.size()) state.init(net.params.size());
    for (const T& gv : grads)
        if (!std::isfinite(static_cast<double>(gv)))
            throw std::runtime_error("adam_step: non-finite gradient; step aborted");
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const double gi = static_cast<double>(grads[i]);
        const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * gi;
        const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * gi * gi;
        state.m[i] = static_cast<T>(m);
        state.v[i] = static_cast<T>(v);
        const double mh = m / bc1;
        const double vh = v / bc2;
        net.params[i] = static_cast<T>(static_cast<double>(net.params[i]) -
                                       lr * mh / (std::sqrt(vh) + state.eps));
    }
}

template <typename T>
double mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target, Tensor4<T>* grad) {
    if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
    const double inv = 1.0 / static_cast<double>(pred.size());
    double acc = 0.0;
    if (grad) *grad = Tensor4<T>(pred.n, pred.c, pred.h, pred.w);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.v[i]) - static_cast<double>(target.v[i]);
        acc += d * d;
        if (grad) grad->v[i] = static_cast<T>(2.0 * d * inv);
    }
    return acc * inv;
}

template <typename T>
double bce_with_logits_loss(const Tensor4<T>& logits, const Tensor4<T>& targets, Tensor4<T>* grad) {
    if (!logits.same_shape(targets)) throw std::invalid_argument("bce: shape mismatch");
    const double inv = 1.0 / static_cast<double>(logits.size());
    double acc = 0.0;
    if (grad) *grad = Tensor4<T>(logits.n, logits.c, logits.h, logits.w);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = static_cast<double>(logits.v[i]);
        const double y = static_cast<double>(targets.v[i]);
        acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        if (grad) {
            const double s = 1.0 / (1.0 + std::exp(-z));
            grad->v[i] = static_cast<T>((s - y) * inv);
        }
    }
    return acc * inv;
}

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
}

namespace {

bool has_trailing_sigmoid(const Network<float>& net) {
    return !net.layers.empty() && net.layers.back().kind == LayerKind::Sigmoid;
}

double eval_loss(const Network<float>& net, const DataSource& data, LossKind loss, int batch) {
    const int n = data.size();
    const bool fused = loss == LossKind::Bce && has_trailing_sigmoid(net);
    double acc = 0.0;
    std::size_t count = 0;
    for (int start = 0; start < n; start += batch) {
        const int bs = std::min(batch, n - start);
        std::vector<int> idx(bs);
        for (int i = 0; i < bs; ++i) idx[i] = start + i;
        Tensor4<float> x, y;
        data.fill(idx, -1, x, y);
        if (fused) {
            ForwardCache<float> cache;
            net.forward(x, &cache);
            const Tensor4<float>& logits = cache.inputs.back();
            acc += bce_with_logits_loss(logits, y) * static_cast<double>(logits.size());
            count += logits.size();
        } else {
            Tensor4<float> out = net.forward(x);
            const double l = loss == LossKind::Mse ? mse_loss(out, y) : bce_with_logits_loss(out, y);
            acc += l * static_cast<double>(out.size());
            count += out.size();
        }
    }
    return acc / static_cast<double>(count);
}

} // namespace

TrainResult train(Network<float>& net, const DataSource& train_data, const DataSource& val_data,
                  const TrainConfig& config) {
    config.validate();
    const int n = train_data.size();
    if (n < 1 || val_data.size() < 1) throw std::invalid_argument("train: dataset empty");

    const bool fused = config.loss == LossKind::Bce && has_trailing_sigmoid(net);
    AdamState<float> adam;
    adam.init(net.params.size());

    TrainResult result;
    std::vector<float> best_params = net.params;
    result.best_val_loss = eval_loss(net, val_data, config.loss, config.batch_size);
    result.best_epoch = -1;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);

        double epoch_loss = 0.0;
        std::size_t epoch_count = 0;
        for (int start = 0; start < n; start += config.batch_size) {
            const int bs = std::min(config.batch_size, n - start);
            std::vector<int> idx(order.begin() + start, order.begin() + start + bs);
            Tensor4<float> x, y;
            train_data.fill(idx, epoch, x, y);

            ForwardCache<float> cache;
            net.forward(x, &cache);
            double loss;
            std::vector<float> grads;
            if (fused) {
                const Tensor4<float>& logits = cache.inputs.back();
                Tensor4<float> grad;
                loss = bce_with_logits_loss(logits, y, &grad);
                net.backward_from(net.layers.size() - 1, cache, grad, grads);
            } else {
                Tensor4<float> grad;
                loss = config.loss == LossKind::Mse ? mse_loss(cache.output, y, &grad)
                                                    : bce_with_logits_loss(cache.output, y, &grad);
                net.backward(cache, grad, grads);
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            adam_step(net, adam, grads, config.learning_rate);
            epoch_loss += loss * bs;
            epoch_count += bs;
        }
        result.train_loss.push_back(epoch_loss / static_cast<double>(epoch_count));

        const double vl = eval_loss(net, val_data, config.loss, config.batch_size);
        result.val_loss.push_back(vl);
        if (vl < result.best_val_loss) {
            result.best_val_loss = vl;
            result.best_epoch = epoch;
            best_params = net.params;
        }
        if (config.verbose)
            std::fprintf(stderr, "  epoch %3d  train %.6g  val %.6g\n", epoch,
                         result.train_loss.back(), vl);
    }
    net.params = best_params;
    return result;
}

namespace {

void write_bytes(std::FILE* f, const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f) != n) throw std::runtime_error("checkpoint: write failed");
}

void read_bytes(std::FILE* f, void* p, std::size_t n) {
    if (std::fread(p, 1, n, f) != n) throw std::runtime_error("checkpoint: truncated file");
}

} // namespace

void save_network(const std::string& path, const Network<float>& net, const AdamState<float>* adam) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    try {
        write_bytes(f, "OLNN", 4);
        const std::uint32_t version = 1;
        write_bytes(f, &version, 4);
        const std::uint32_t nl = static_cast<std::uint32_t>(net.layers.size());
        write_bytes(f, &nl, 4);
        for (const LayerDesc& d : net.layers) {
            const std::uint32_t kind = static_cast<std::uint32_t>(d.kind);
            write_bytes(f, &kind, 4);
            write_bytes(f, &d.kernel, 4);
            write_bytes(f, &d.in_ch, 4);
            write_bytes(f, &d.out_ch, 4);
        }
        const std::uint64_t np = net.params.size();
        write_bytes(f, &np, 8);
        write_bytes(f, net.params.data(), np * sizeof(float));
        const std::uint8_t has_adam = adam ? 1 : 0;
        write_bytes(f, &has_adam, 1);
        if (adam) {
            write_bytes(f, &adam->t, 8);
            write_bytes(f, adam->m.data(), np * sizeof(float));
            write_bytes(f, adam->v.data(), np * sizeof(float));
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
}

Network<float> load_network(const std::string& path, AdamState<float>* adam) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    Network<float> net;
    try {
        char magic[4];
        read_bytes(f, magic, 4);
        if (std::memcmp(magic, "OLNN", 4) != 0)
            throw std::runtime_error("checkpoint: bad magic in " + path);
        std::uint32_t version = 0;
        read_bytes(f, &version, 4);
        if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
        std::uint32_t nl = 0;
        read_bytes(f, &nl, 4);
        std::vector<LayerDesc> layers(nl);
        for (auto& d : layers) {
            std::uint32_t kind = 0;
            read_bytes(f, &kind, 4);
            if (kind > static_cast<std::uint32_t>(LayerKind::Sigmoid))
                throw std::runtime_error("checkpoint: unknown layer kind");
            d.kind = static_cast<LayerKind>(kind);
            read_bytes(f, &d.kernel, 4);
            read_bytes(f, &d.in_ch, 4);
            read_bytes(f, &d.out_ch, 4);
        }
        net = Network<float>::build(layers, 0);
        std::uint64_t np = 0;
        read_bytes(f, &np, 8);
        if (np != net.params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
        read_bytes(f, net.params.data(), np * sizeof(float));
        std::uint8_t has_adam = 0;
        read_bytes(f, &has_adam, 1);
        if (has_adam) {
            AdamState<float> st;
            st.init(np);
            read_bytes(f, &st.t, 8);
            read_bytes(f, st.m.data(), np * sizeof(float));
            read_bytes(f, st.v.data(), np * sizeof(float));
            if (adam) *adam = std::move(st);
        } else if (adam) {
            adam->init(np);
        }
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return net;
}

// explicit instantiations
template struct Tensor4<float>;
template struct Tensor4<double>;
template class Network<float>;
template class Network<double>;
template void adam_step<float>(Network<float>&, AdamState<float>&, const std::vector<float>&, double);
template void adam_step<double>(Network<double>&, AdamState<double>&, const std::vector<double>&, double);
template double mse_loss<float>(const Tensor4<float>&, const Tensor4<float>&, Tensor4<float>*);
template double mse_loss<double>(const Tensor4<double>&, const Tensor4<double>&, Tensor4<double>*);
template double bce_with_logits_loss<float>(const Tensor4<float>&, const Tensor4<float>&,
                                            Tensor4<float>*);
template double bce_with_logits_loss<double>(const Tensor4<double>&, const Tensor4<double>&,
                                             Tensor4<double>*);

} // namespace tbiq
