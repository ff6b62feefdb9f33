#include "core/degrade.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core/rng.hpp"

namespace tbiq {

void NoiseSpec::validate() const {
    if (sigma_p < 0.0 || sigma_g < 0.0)
        throw std::invalid_argument("NoiseSpec: sigmas must be >= 0");
}

void DegradationSpec::validate() const {
    if (blur_sigma < 0.0) throw std::invalid_argument("DegradationSpec: blur_sigma must be >= 0");
    if (downsample_factor != 1 && downsample_factor != 2)
        throw std::invalid_argument("DegradationSpec: downsample factor must be 1 or 2");
    noise.validate();
}

namespace {

// reflect-101 index: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

} // namespace

ImageGrid gaussian_blur(const ImageGrid& img, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("gaussian_blur: sigma must be >= 0");
    if (img.width < 1 || img.height < 1) throw std::invalid_argument("gaussian_blur: empty image");
    if (sigma == 0.0) return img;

    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = img.width, h = img.height;

    ImageGrid tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] * img.at(reflect101(x + t, w), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] * tmp.at(x, reflect101(y + t, h));
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

ImageGrid downsample2(const ImageGrid& img) {
    if (img.width % 2 != 0 || img.height % 2 != 0)
        throw std::invalid_argument("downsample2: dimensions must be even");
    ImageGrid out(img.width / 2, img.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = 0.25f * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                                    img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
    return out;
}

ImageGrid upsample2(const ImageGrid& img) {
    const int w = img.width, h = img.height;
    ImageGrid out(2 * w, 2 * h);
    for (int y = 0; y < 2 * h; ++y) {
        // source coordinate for half-pixel-centered bilinear interpolation
        const double sy = (y + 0.5) / 2.0 - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double fy = std::clamp(sy - y0, 0.0, 1.0);
        for (int x = 0; x < 2 * w; ++x) {
            const double sx = (x + 0.5) / 2.0 - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
            const int x1 = std::min(x0 + 1, w - 1);
            const double fx = std::clamp(sx - x0, 0.0, 1.0);
            const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

ImageGrid apply_noise(const ImageGrid& img, const NoiseSpec& noise, std::uint64_t seed,
                      NoiseStats* stats) {
    noise.validate();
    if (noise.is_identity()) {
        if (stats) stats->clamped_pixels = 0;
        return img;
    }
    Rng rng(seed);
    ImageGrid out(img.width, img.height);
    std::int64_t clamped = 0;
    const double sp2 = noise.sigma_p * noise.sigma_p;
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = img.values[i];
        if (noise.sigma_p > 0.0) {
            if (v < 0.0) {
                v = 0.0;
                ++clamped;
            }
            v = sp2 * static_cast<double>(rng.poisson(v / sp2));
        }
        if (noise.sigma_g > 0.0) v += noise.sigma_g * rng.gauss();
        out.values[i] = static_cast<float>(v);
    }
    if (stats) stats->clamped_pixels = clamped;
    return out;
}

ImageGrid degrade(const ImageGrid& img, const DegradationSpec& spec, std::uint64_t seed,
                  NoiseStats* stats) {
    spec.validate();
    ImageGrid cur = spec.blur_sigma > 0.0 ? gaussian_blur(img, spec.blur_sigma) : img;
    if (spec.downsample_factor == 2) cur = downsample2(cur);
    cur = apply_noise(cur, spec.noise, seed, stats);
    if (spec.upsample_after) cur = upsample2(cur);
    return cur;
}

} // namespace tbiq
