#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tbiq {

// (batch, channels, height, width), row-major within each plane.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {
        if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1)
            throw std::invalid_argument("Tensor4: dims must be positive");
    }

    std::size_t size() const { return v.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_stride() const { return static_cast<std::size_t>(c) * h * w; }

    T* sample(int i) { return v.data() + sample_stride() * i; }
    const T* sample(int i) const { return v.data() + sample_stride() * i; }

    T& at(int i, int ci, int y, int x) {
        return v[sample_stride() * i + plane() * ci + static_cast<std::size_t>(y) * w + x];
    }
    T at(int i, int ci, int y, int x) const {
        return v[sample_stride() * i + plane() * ci + static_cast<std::size_t>(y) * w + x];
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

} // namespace tbiq
