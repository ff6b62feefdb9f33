#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tbiq {

// 2D scalar field, row-major float storage. The universal carrier for
// objects, measurements and templates.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<float> values; // size = width * height

    ImageGrid() = default;
    ImageGrid(int w, int h, float fill = 0.0f);

    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return values.size(); }
    bool same_dims(const ImageGrid& o) const { return width == o.width && height == o.height; }
    bool finite() const;

    void fill(float v);
    double sum() const;
    float min_value() const;
    float max_value() const;
};

// Central crop of size cw x ch; for even remainders the extra row/column is
// dropped from the high side so the crop stays centered.
ImageGrid central_crop(const ImageGrid& img, int cw, int ch);

ImageGrid flip_horizontal(const ImageGrid& img);
ImageGrid flip_vertical(const ImageGrid& img);

// a*x + b*y, elementwise; dims must agree
ImageGrid axpby(float a, const ImageGrid& x, float b, const ImageGrid& y);

// elementwise product
ImageGrid hadamard(const ImageGrid& x, const ImageGrid& y);

// FNV-1a over the raw float payload, for reproducibility/distinctness checks
std::uint64_t content_hash(const ImageGrid& img);

} // namespace tbiq
