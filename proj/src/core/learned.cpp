#include "core/learned.hpp"

#include <cmath>
#include <stdexcept>

namespace tbiq {

void LearnedObserverSpec::validate() const {
    if (n_residual_blocks != 2 && n_residual_blocks != 4 && n_residual_blocks != 6 &&
        n_residual_blocks != 8)
        throw std::invalid_argument("LearnedObserverSpec: blocks must be one of {2,4,6,8}");
    if (filters < 1) throw std::invalid_argument("LearnedObserverSpec: filters must be >= 1");
    if (kernel < 1 || kernel % 2 == 0)
        throw std::invalid_argument("LearnedObserverSpec: kernel must be odd");
}

Network<float> build_learned_observer(const LearnedObserverSpec& spec, const LinearTemplate* rho,
                                      int crop, std::uint64_t seed) {
    spec.validate();
    std::vector<LayerDesc> layers;
    layers.push_back(LayerDesc::conv(spec.kernel, 1, spec.filters));
    layers.push_back(LayerDesc::relu());
    for (int b = 0; b < spec.n_residual_blocks; ++b)
        layers.push_back(LayerDesc::residual(spec.kernel, spec.filters));
    layers.push_back(LayerDesc::global_avg_pool());
    layers.push_back(LayerDesc::dense(spec.filters, 1));
    layers.push_back(LayerDesc::sigmoid());
    Network<float> net = Network<float>::build(layers, seed);

    if (spec.rho_init) {
        if (!rho) throw std::invalid_argument("build_learned_observer: rho_init without a template");
        if (rho->weights.size() != static_cast<Eigen::Index>(crop) * crop)
            throw std::invalid_argument("build_learned_observer: template does not match crop");
        // reshape the template to crop x crop, take its central kernel
        // footprint and scale it to the He-init RMS of the stem layer
        const int k = spec.kernel;
        ImageGrid timg(crop, crop);
        for (int i = 0; i < crop * crop; ++i) timg.values[i] = static_cast<float>(rho->weights[i]);
        const ImageGrid patch = central_crop(timg, k, k);
        double rms = 0.0;
        for (float v : patch.values) rms += static_cast<double>(v) * v;
        rms = std::sqrt(rms / patch.size());
        const double he_std = std::sqrt(2.0 / (k * k));
        const double scale = rms > 0.0 ? he_std / rms : 0.0;
        float* w0 = net.params.data(); // stem filter 0, single input channel
        for (int i = 0; i < k * k; ++i) w0[i] = static_cast<float>(scale * patch.values[i]);
    }
    return net;
}

double score_learned(const Network<float>& net, const ImageGrid& img) {
    Tensor4<float> x(1, 1, img.height, img.width);
    std::copy(img.values.begin(), img.values.end(), x.v.begin());
    const Tensor4<float> y = net.forward(x);
    if (y.size() != 1) throw std::runtime_error("score_learned: network output is not scalar");
    return static_cast<double>(y.v[0]);
}

std::vector<double> score_learned_many(const Network<float>& net,
                                       const std::vector<ImageGrid>& images, int batch) {
    std::vector<double> out;
    out.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += batch) {
        const int bs = static_cast<int>(std::min<std::size_t>(batch, images.size() - start));
        Tensor4<float> x(bs, 1, images[start].height, images[start].width);
        for (int i = 0; i < bs; ++i) {
            const ImageGrid& img = images[start + i];
            if (img.height != x.h || img.width != x.w)
                throw std::invalid_argument("score_learned_many: inconsistent dims");
            std::copy(img.values.begin(), img.values.end(), x.sample(i));
        }
        const Tensor4<float> y = net.forward(x);
        for (int i = 0; i < bs; ++i) out.push_back(static_cast<double>(y.v[i]));
    }
    return out;
}

LabeledImageSource::LabeledImageSource(int count, int width, int height,
                                       std::function<ImageGrid(int, int)> generator,
                                       std::vector<int> labels, bool flip4)
    : count_(count), width_(width), height_(height), gen_(std::move(generator)),
      labels_(std::move(labels)), flip4_(flip4) {
    if (static_cast<int>(labels_.size()) != count_)
        throw std::invalid_argument("LabeledImageSource: label count mismatch");
}

LabeledImageSource::LabeledImageSource(const std::vector<ImageGrid>& images,
                                       std::vector<int> labels, bool flip4)
    : LabeledImageSource(
          static_cast<int>(images.size()), images.empty() ? 0 : images[0].width,
          images.empty() ? 0 : images[0].height,
          [&images](int i, int) { return images[i]; }, std::move(labels), flip4) {
    if (images.empty()) throw std::invalid_argument("LabeledImageSource: empty image list");
}

int LabeledImageSource::size() const { return flip4_ ? 4 * count_ : count_; }

void LabeledImageSource::fill(const std::vector<int>& idx, int epoch, Tensor4<float>& x,
                              Tensor4<float>& y) const {
    const int n = static_cast<int>(idx.size());
    x = Tensor4<float>(n, 1, height_, width_);
    y = Tensor4<float>(n, 1, 1, 1);
    for (int i = 0; i < n; ++i) {
        const int base = flip4_ ? idx[i] / 4 : idx[i];
        const int variant = flip4_ ? idx[i] % 4 : 0;
        ImageGrid img = gen_(base, epoch);
        if (img.width != width_ || img.height != height_)
            throw std::runtime_error("LabeledImageSource: generator produced wrong dims");
        if (variant == 1 || variant == 3) img = flip_horizontal(img);
        if (variant == 2 || variant == 3) img = flip_vertical(img);
        std::copy(img.values.begin(), img.values.end(), x.sample(i));
        y.v[i] = static_cast<float>(labels_[base]);
    }
}

} // namespace tbiq
