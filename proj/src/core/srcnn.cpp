#include "core/srcnn.hpp"

#include <stdexcept>

#include "core/rng.hpp"

namespace tbiq {

void SrcnnSpec::validate() const {
    if (n_layers < 2 || n_layers > 8)
        throw std::invalid_argument("SrcnnSpec: n_layers must be in [2, 8]");
    if (first_kernel < 1 || first_kernel % 2 == 0 || other_kernel < 1 || other_kernel % 2 == 0)
        throw std::invalid_argument("SrcnnSpec: kernels must be odd");
    if (hidden_filters < 1) throw std::invalid_argument("SrcnnSpec: hidden_filters must be >= 1");
}

Network<float> build_srcnn(const SrcnnSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<LayerDesc> layers;
    layers.push_back(LayerDesc::conv(spec.first_kernel, 1, spec.hidden_filters));
    layers.push_back(LayerDesc::relu());
    for (int i = 0; i < spec.n_layers - 2; ++i) {
        layers.push_back(LayerDesc::conv(spec.other_kernel, spec.hidden_filters, spec.hidden_filters));
        layers.push_back(LayerDesc::relu());
    }
    layers.push_back(LayerDesc::conv(spec.other_kernel, spec.hidden_filters, 1));
    return Network<float>::build(layers, seed);
}

int conv_margin(const Network<float>& net) {
    int m = 0;
    for (const LayerDesc& d : net.layers) {
        if (d.kind == LayerKind::Conv) m += (d.kernel - 1) / 2;
        if (d.kind == LayerKind::Residual) m += d.kernel - 1;
    }
    return m;
}

namespace {

class PairSource : public DataSource {
public:
    explicit PairSource(const SrPairs& pairs) : pairs_(pairs) {
        if (pairs.lr.size() != pairs.hr.size() || pairs.lr.empty())
            throw std::invalid_argument("train_sr: unpaired or empty dataset");
        for (std::size_t i = 0; i < pairs.lr.size(); ++i)
            if (!pairs_.lr[i].same_dims(pairs_.hr[i]))
                throw std::invalid_argument("train_sr: LR/HR dimension mismatch");
    }

    int size() const override { return static_cast<int>(pairs_.lr.size()); }
    int sample_channels() const override { return 1; }
    int sample_height() const override { return pairs_.lr[0].height; }
    int sample_width() const override { return pairs_.lr[0].width; }

    void fill(const std::vector<int>& idx, int /*epoch*/, Tensor4<float>& x,
              Tensor4<float>& y) const override {
        const int n = static_cast<int>(idx.size());
        x = Tensor4<float>(n, 1, sample_height(), sample_width());
        y = Tensor4<float>(n, 1, sample_height(), sample_width());
        for (int i = 0; i < n; ++i) {
            const ImageGrid& lr = pairs_.lr[idx[i]];
            const ImageGrid& hr = pairs_.hr[idx[i]];
            std::copy(lr.values.begin(), lr.values.end(), x.sample(i));
            std::copy(hr.values.begin(), hr.values.end(), y.sample(i));
        }
    }

private:
    const SrPairs& pairs_;
};

} // namespace

TrainResult train_sr(Network<float>& net, const SrPairs& train_pairs, const SrPairs& val_pairs,
                     const TrainConfig& config) {
    TrainConfig cfg = config;
    cfg.loss = LossKind::Mse;
    PairSource train_src(train_pairs), val_src(val_pairs);
    return train(net, train_src, val_src, cfg);
}

ImageGrid super_resolve(const Network<float>& net, const ImageGrid& img) {
    Tensor4<float> x(1, 1, img.height, img.width);
    std::copy(img.values.begin(), img.values.end(), x.v.begin());
    const Tensor4<float> y = net.forward(x);
    if (y.c != 1 || y.h != img.height || y.w != img.width)
        throw std::runtime_error("super_resolve: unexpected output shape");
    ImageGrid out(img.width, img.height);
    std::copy(y.v.begin(), y.v.end(), out.values.begin());
    return out;
}

ImageGrid super_resolve_crop(const Network<float>& net, const ImageGrid& img, int crop, int margin) {
    const int region = std::min({crop + 2 * margin, img.width, img.height});
    const ImageGrid sub = central_crop(img, region, region);
    return central_crop(super_resolve(net, sub), crop, crop);
}

SrPairs extract_patch_pairs(const SrPairs& pairs, int patch, int per_image, std::uint64_t seed) {
    if (pairs.lr.size() != pairs.hr.size()) throw std::invalid_argument("extract_patch_pairs: unpaired");
    if (patch == 0) return pairs;
    SrPairs out;
    for (std::size_t i = 0; i < pairs.lr.size(); ++i) {
        const ImageGrid& lr = pairs.lr[i];
        const ImageGrid& hr = pairs.hr[i];
        if (patch > lr.width || patch > lr.height)
            throw std::invalid_argument("extract_patch_pairs: patch exceeds image");
        Rng rng(derive_seed(seed, "patch", i));
        for (int p = 0; p < per_image; ++p) {
            const int x0 = static_cast<int>(rng.uniform_int(lr.width - patch + 1));
            const int y0 = static_cast<int>(rng.uniform_int(lr.height - patch + 1));
            ImageGrid pl(patch, patch), ph(patch, patch);
            for (int y = 0; y < patch; ++y)
                for (int x = 0; x < patch; ++x) {
                    pl.at(x, y) = lr.at(x0 + x, y0 + y);
                    ph.at(x, y) = hr.at(x0 + x, y0 + y);
                }
            out.lr.push_back(std::move(pl));
            out.hr.push_back(std::move(ph));
        }
    }
    return out;
}

} // namespace tbiq
