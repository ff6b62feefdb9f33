#include "core/image.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace tbiq {

ImageGrid::ImageGrid(int w, int h, float fill) {
    if (w < 1 || h < 1) throw std::invalid_argument("ImageGrid: dimensions must be >= 1");
    width = w;
    height = h;
    values.assign(static_cast<std::size_t>(w) * h, fill);
}

bool ImageGrid::finite() const {
    for (float v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

void ImageGrid::fill(float v) {
    for (float& x : values) x = v;
}

double ImageGrid::sum() const {
    double s = 0.0;
    for (float v : values) s += v;
    return s;
}

float ImageGrid::min_value() const {
    float m = std::numeric_limits<float>::infinity();
    for (float v : values) m = std::min(m, v);
    return m;
}

float ImageGrid::max_value() const {
    float m = -std::numeric_limits<float>::infinity();
    for (float v : values) m = std::max(m, v);
    return m;
}

ImageGrid central_crop(const ImageGrid& img, int cw, int ch) {
    if (cw < 1 || ch < 1 || cw > img.width || ch > img.height)
        throw std::invalid_argument("central_crop: crop exceeds image");
    const int x0 = (img.width - cw) / 2;
    const int y0 = (img.height - ch) / 2;
    ImageGrid out(cw, ch);
    for (int y = 0; y < ch; ++y)
        std::memcpy(&out.values[static_cast<std::size_t>(y) * cw],
                    &img.values[static_cast<std::size_t>(y0 + y) * img.width + x0], sizeof(float) * cw);
    return out;
}

ImageGrid flip_horizontal(const ImageGrid& img) {
    ImageGrid out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
    return out;
}

ImageGrid flip_vertical(const ImageGrid& img) {
    ImageGrid out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(x, img.height - 1 - y);
    return out;
}

ImageGrid axpby(float a, const ImageGrid& x, float b, const ImageGrid& y) {
    if (!x.same_dims(y)) throw std::invalid_argument("axpby: dimension mismatch");
    ImageGrid out(x.width, x.height);
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = a * x.values[i] + b * y.values[i];
    return out;
}

ImageGrid hadamard(const ImageGrid& x, const ImageGrid& y) {
    if (!x.same_dims(y)) throw std::invalid_argument("hadamard: dimension mismatch");
    ImageGrid out(x.width, x.height);
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] * y.values[i];
    return out;
}

std::uint64_t content_hash(const ImageGrid& img) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(img.values.data());
    const std::size_t n = img.values.size() * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace tbiq
