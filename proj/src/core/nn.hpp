#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace tbiq {

enum class LayerKind : std::uint32_t {
    Conv = 0,          // same-padding cross-correlation + bias
    Relu = 1,
    Residual = 2,      // x + conv(relu(conv(x))), identity skip
    GlobalAvgPool = 3, // (N,C,H,W) -> (N,C,1,1)
    Dense = 4,         // flattened features -> out_ch
    Sigmoid = 5,
};

struct LayerDesc {
    LayerKind kind = LayerKind::Relu;
    int kernel = 0; // conv / residual kernel size (odd)
    int in_ch = 0;  // conv: input channels; dense: input features
    int out_ch = 0;

    static LayerDesc conv(int kernel, int in_ch, int out_ch) {
        return {LayerKind::Conv, kernel, in_ch, out_ch};
    }
    static LayerDesc relu() { return {LayerKind::Relu, 0, 0, 0}; }
    static LayerDesc residual(int kernel, int ch) { return {LayerKind::Residual, kernel, ch, ch}; }
    static LayerDesc global_avg_pool() { return {LayerKind::GlobalAvgPool, 0, 0, 0}; }
    static LayerDesc dense(int in_features, int out) { return {LayerKind::Dense, 0, in_features, out}; }
    static LayerDesc sigmoid() { return {LayerKind::Sigmoid, 0, 0, 0}; }
};

std::size_t layer_param_count(const LayerDesc& d);

// Per-layer cached activations for reverse mode.
template <typename T>
struct ForwardCache {
    bool valid = false;
    std::vector<Tensor4<T>> inputs; // input to each layer
    std::vector<Tensor4<T>> aux;    // residual branch pre-relu activation
    std::vector<Tensor4<T>> aux2;   // residual branch post-relu activation
    Tensor4<T> output;
};

// Feed-forward network with a packed parameter store. Weights are
// He-normal initialized, biases zero, deterministic per seed.
template <typename T>
class Network {
public:
    std::vector<LayerDesc> layers;
    std::vector<std::size_t> offsets; // parameter offset per layer
    std::vector<T> params;

    static Network build(const std::vector<LayerDesc>& layers, std::uint64_t seed);

    std::size_t param_count() const { return params.size(); }

    // Per-sample evaluation: results are independent of how samples are
    // batched together.
    Tensor4<T> forward(const Tensor4<T>& x, ForwardCache<T>* cache = nullptr) const;

    // Exact reverse-mode gradients for every layer; requires a cache from a
    // previous forward. Returns the input gradient; param_grads is resized
    // and filled (accumulation in 64-bit).
    Tensor4<T> backward(const ForwardCache<T>& cache, const Tensor4<T>& grad_out,
                        std::vector<T>& param_grads) const;

    // Gradient at the input of layer `from` (used for fused sigmoid+BCE).
    Tensor4<T> backward_from(std::size_t from, const ForwardCache<T>& cache,
                             const Tensor4<T>& grad_at_input_of_from,
                             std::vector<T>& param_grads) const;

    template <typename U>
    Network<U> cast() const {
        Network<U> out;
        out.layers = layers;
        out.offsets = offsets;
        out.params.assign(params.begin(), params.end());
        return out;
    }
};

template <typename T>
struct AdamState {
    std::vector<T> m, v;
    std::int64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void init(std::size_t n) {
        m.assign(n, T(0));
        v.assign(n, T(0));
        t = 0;
    }
};

// Standard bias-corrected Adam update; throws on non-finite gradients.
template <typename T>
void adam_step(Network<T>& net, AdamState<T>& state, const std::vector<T>& grads, double lr);

// mean squared error over all elements; optional gradient wrt pred
template <typename T>
double mse_loss(const Tensor4<T>& pred, const Tensor4<T>& target, Tensor4<T>* grad = nullptr);

// numerically stable binary cross-entropy on logits: finite for any |z|
template <typename T>
double bce_with_logits_loss(const Tensor4<T>& logits, const Tensor4<T>& targets,
                            Tensor4<T>* grad = nullptr);

enum class LossKind { Mse, Bce };

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 64;
    int epochs = 100;
    LossKind loss = LossKind::Mse;
    std::uint64_t seed = 0;
    bool on_the_fly_noise = false; // honored by the DataSource
    bool verbose = false;

    void validate() const;
};

// Batch provider; implementations may regenerate measurement noise per epoch
// ("semi-online" training). Epoch -1 requests the canonical (validation) view.
struct DataSource {
    virtual ~DataSource() = default;
    virtual int size() const = 0;
    virtual int sample_channels() const = 0;
    virtual int sample_height() const = 0;
    virtual int sample_width() const = 0;
    // y: targets — images for regression, (n,1,1,1) labels for classification
    virtual void fill(const std::vector<int>& indices, int epoch, Tensor4<float>& x,
                      Tensor4<float>& y) const = 0;
};

struct TrainResult {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

// Mini-batch loop with seeded shuffling; keeps and restores the
// best-validation parameter snapshot. Throws on divergence.
TrainResult train(Network<float>& net, const DataSource& train_data, const DataSource& val_data,
                  const TrainConfig& config);

// Checkpoint file: magic "OLNN", version, layer descriptors, f32
// little-endian parameters, optional Adam state.
void save_network(const std::string& path, const Network<float>& net,
                  const AdamState<float>* adam = nullptr);
Network<float> load_network(const std::string& path, AdamState<float>* adam = nullptr);

} // namespace tbiq
