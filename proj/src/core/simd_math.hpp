#pragma once

#include <bit>
#include <cstdint>

namespace tbiq {

// Branch-free Cephes-style expf/logf. Relative error ~2 ulp; both are plain
// scalar code so the compiler can vectorize loops that call them.

inline float fast_expf(float x) {
    x = x > 88.0f ? 88.0f : x;
    x = x < -87.0f ? -87.0f : x;
    const float k = __builtin_floorf(1.442695041f * x + 0.5f);
    float f = x - k * 0.693359375f;
    f -= k * -2.12194440e-4f;
    float y = 1.9875691500e-4f;
    y = y * f + 1.3981999507e-3f;
    y = y * f + 8.3334519073e-3f;
    y = y * f + 4.1665795894e-2f;
    y = y * f + 1.6666665459e-1f;
    y = y * f + 5.0000001201e-1f;
    y = y * f * f + f + 1.0f;
    const std::int32_t ik = static_cast<std::int32_t>(k);
    const std::int32_t bits = std::bit_cast<std::int32_t>(y) + (ik << 23);
    return std::bit_cast<float>(bits);
}

inline float fast_logf(float x) {
    // x assumed > 0
    std::int32_t ix = std::bit_cast<std::int32_t>(x);
    const std::int32_t e = ((ix >> 23) & 0xff) - 127;
    ix = (ix & 0x007fffff) | 0x3f800000; // mantissa in [1, 2)
    float m = std::bit_cast<float>(ix);
    float ke = static_cast<float>(e);
    // shift mantissa to [sqrt(1/2), sqrt(2)) for symmetric polynomial range
    const bool shift = m > 1.41421356f;
    m = shift ? m * 0.5f : m;
    ke = shift ? ke + 1.0f : ke;
    const float f = m - 1.0f;
    float y = 7.0376836292e-2f;
    y = y * f + -1.1514610310e-1f;
    y = y * f + 1.1676998740e-1f;
    y = y * f + -1.2420140846e-1f;
    y = y * f + 1.4249322787e-1f;
    y = y * f + -1.6668057665e-1f;
    y = y * f + 2.0000714765e-1f;
    y = y * f + -2.4999993993e-1f;
    y = y * f + 3.3333331174e-1f;
    y = y * f * f * f - 0.5f * f * f + f;
    return y + ke * 0.693147181f;
}

} // namespace tbiq
