#pragma once

#include <cstdint>

#include "core/image.hpp"

namespace tbiq {

// Mixed Poisson-Gaussian measurement noise. The Poisson component is
// rate-rescaled so that it is mean-preserving with variance sigma_p^2 * x:
//   y = sigma_p^2 * Poisson(x / sigma_p^2) + N(0, sigma_g^2).
struct NoiseSpec {
    double sigma_p = 0.0;
    double sigma_g = 0.0;

    void validate() const;
    bool is_identity() const { return sigma_p == 0.0 && sigma_g == 0.0; }
};

struct DegradationSpec {
    double blur_sigma = 0.0;
    int downsample_factor = 1; // 1 or 2
    bool upsample_after = false;
    NoiseSpec noise;

    void validate() const;
};

struct NoiseStats {
    std::int64_t clamped_pixels = 0; // negatives clamped for the Poisson rate
};

// Separable convolution with a discretized unit-mass Gaussian kernel,
// mirror (reflect-101) padded borders. sigma = 0 is the identity.
ImageGrid gaussian_blur(const ImageGrid& img, double sigma);

// 2x2 block average; requires even dimensions.
ImageGrid downsample2(const ImageGrid& img);

// Bilinear upsampling; output exactly doubles each dimension.
ImageGrid upsample2(const ImageGrid& img);

ImageGrid apply_noise(const ImageGrid& img, const NoiseSpec& noise, std::uint64_t seed,
                      NoiseStats* stats = nullptr);

// blur -> optional downsample -> noise -> optional upsample, in that order.
ImageGrid degrade(const ImageGrid& img, const DegradationSpec& spec, std::uint64_t seed,
                  NoiseStats* stats = nullptr);

} // namespace tbiq
