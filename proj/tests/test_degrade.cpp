#include <doctest.h>

#include <cmath>

#include "core/degrade.hpp"
#include "core/image.hpp"

using namespace tbiq;

TEST_CASE("blur of a constant stays constant") {
    const ImageGrid img(32, 32, 3.25f);
    const ImageGrid out = gaussian_blur(img, 1.5);
    for (float v : out.values) CHECK(v == doctest::Approx(3.25f).epsilon(1e-6));
}

TEST_CASE("blurred impulse reproduces the analytic normalized kernel") {
    const double sigma = 1.375;
    ImageGrid img(33, 33, 0.0f);
    img.at(16, 16) = 1.0f;
    const ImageGrid out = gaussian_blur(img, sigma);
    CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-6));

    // analytic separable kernel, radius ceil(4 sigma)
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double s = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        s += k[i + radius];
    }
    for (double& v : k) v /= s;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double want = k[dx + radius] * k[dy + radius];
            CHECK(out.at(16 + dx, 16 + dy) == doctest::Approx(want).epsilon(1e-5));
        }
    CHECK(out.at(16 + radius + 1, 16) == 0.0f); // outside the kernel support
}

TEST_CASE("sigma zero is the identity bit for bit") {
    ImageGrid img(16, 16);
    for (std::size_t i = 0; i < img.size(); ++i) img.values[i] = std::sin(static_cast<float>(i));
    CHECK(content_hash(gaussian_blur(img, 0.0)) == content_hash(img));
}

TEST_CASE("blur commutes with constant offsets") {
    ImageGrid f(24, 24);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = static_cast<float>((i * 7) % 11);
    const float c = 5.0f;
    ImageGrid fc = f;
    for (float& v : fc.values) v += c;
    const ImageGrid a = gaussian_blur(fc, 2.0);
    const ImageGrid b = gaussian_blur(f, 2.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(a.values[i] == doctest::Approx(b.values[i] + c).epsilon(1e-5));
}

TEST_CASE("downsample2: block means, parity check, checkerboard") {
    ImageGrid img(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<float>((x + y) % 2);
    const ImageGrid half = downsample2(img);
    CHECK(half.width == 2);
    CHECK(half.height == 2);
    for (float v : half.values) CHECK(v == 0.5f);
    CHECK_THROWS(downsample2(ImageGrid(5, 4)));
}

TEST_CASE("upsample2 doubles dimensions and preserves constants") {
    const ImageGrid img(6, 4, 2.0f);
    const ImageGrid up = upsample2(img);
    CHECK(up.width == 12);
    CHECK(up.height == 8);
    for (float v : up.values) CHECK(v == doctest::Approx(2.0f));
    // shape round trip
    const ImageGrid cycle = upsample2(downsample2(ImageGrid(128, 128, 1.0f)));
    CHECK(cycle.width == 128);
    CHECK(cycle.height == 128);
}

TEST_CASE("noise: identity when both sigmas vanish") {
    ImageGrid img(8, 8, 1.5f);
    NoiseSpec none;
    CHECK(content_hash(apply_noise(img, none, 7)) == content_hash(img));
}

TEST_CASE("pure Poisson component: mean preserved, variance sigma_p^2 x") {
    const double v = 2.0, sigma_p = 0.1;
    const int side = 320;
    ImageGrid img(side, side, static_cast<float>(v));
    NoiseSpec noise;
    noise.sigma_p = sigma_p;
    const ImageGrid out = apply_noise(img, noise, 123);
    double s = 0.0, s2 = 0.0;
    for (float x : out.values) {
        s += x;
        s2 += static_cast<double>(x) * x;
    }
    const double n = static_cast<double>(out.size());
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double want_var = sigma_p * sigma_p * v;
    CHECK(std::abs(mean - v) < 4.0 * std::sqrt(want_var / n));
    CHECK(var == doctest::Approx(want_var).epsilon(0.05));
}

TEST_CASE("mixed noise at the Rayleigh defaults") {
    const double v = 2.0;
    NoiseSpec noise;
    noise.sigma_p = 0.013;
    noise.sigma_g = 0.35;
    const int side = 320;
    const ImageGrid out = apply_noise(ImageGrid(side, side, static_cast<float>(v)), noise, 321);
    double s = 0.0, s2 = 0.0;
    for (float x : out.values) {
        s += x;
        s2 += static_cast<double>(x) * x;
    }
    const double n = static_cast<double>(out.size());
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    const double want_var = noise.sigma_p * noise.sigma_p * v + noise.sigma_g * noise.sigma_g;
    CHECK(std::abs(mean - v) < 4.0 * std::sqrt(want_var / n));
    CHECK(var == doctest::Approx(want_var).epsilon(0.05));
}

TEST_CASE("negative pixels are clamped for the Poisson rate and counted") {
    ImageGrid img(4, 4, -1.0f);
    NoiseSpec noise;
    noise.sigma_p = 0.5;
    NoiseStats stats;
    const ImageGrid out = apply_noise(img, noise, 5, &stats);
    CHECK(stats.clamped_pixels == 16);
    for (float v : out.values) CHECK(v == 0.0f); // Poisson(0) scaled, no Gaussian part
}

TEST_CASE("noise realization is bit-reproducible per seed") {
    ImageGrid img(32, 32, 1.0f);
    NoiseSpec noise;
    noise.sigma_p = 0.013;
    noise.sigma_g = 0.35;
    CHECK(content_hash(apply_noise(img, noise, 77)) == content_hash(apply_noise(img, noise, 77)));
    CHECK(content_hash(apply_noise(img, noise, 77)) != content_hash(apply_noise(img, noise, 78)));
}

TEST_CASE("degrade pipeline composition and ordering") {
    ImageGrid img(64, 64);
    for (std::size_t i = 0; i < img.size(); ++i) img.values[i] = 1.0f + 0.001f * (i % 97);

    DegradationSpec ident;
    ident.noise.sigma_g = 0.1;
    // all-identity spec leaves only the noise stage
    CHECK(content_hash(degrade(img, ident, 9)) == content_hash(apply_noise(img, ident.noise, 9)));

    DegradationSpec mc;
    mc.blur_sigma = 1.5;
    mc.downsample_factor = 2;
    mc.upsample_after = true;
    mc.noise.sigma_p = 1e-4;
    mc.noise.sigma_g = 1e-3;
    const ImageGrid out = degrade(img, mc, 4);
    CHECK(out.width == 64);
    CHECK(out.height == 64);

    DegradationSpec rayleigh;
    rayleigh.blur_sigma = 1.5;
    const ImageGrid lr = degrade(img, rayleigh, 4);
    CHECK(lr.width == 64); // no resampling in the Rayleigh pipeline
}

TEST_CASE("noise-free pipeline is linear") {
    ImageGrid f(32, 32);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = 0.1f * static_cast<float>(i % 23);
    DegradationSpec spec;
    spec.blur_sigma = 1.5;
    spec.downsample_factor = 2;
    const float a = 3.0f;
    ImageGrid af = f;
    for (float& v : af.values) v *= a;
    const ImageGrid d1 = degrade(af, spec, 1);
    const ImageGrid d2 = degrade(f, spec, 1);
    for (std::size_t i = 0; i < d1.size(); ++i)
        CHECK(d1.values[i] == doctest::Approx(a * d2.values[i]).epsilon(1e-5));
}
