#include "core/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tbiq {

namespace {

int reflect101(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

// separable 11x11 Gaussian (sigma 1.5) filter in double precision
std::vector<double> ssim_filter(const std::vector<double>& img, int w, int h) {
    constexpr int radius = 5;
    static const std::vector<double> kernel = [] {
        std::vector<double> k(2 * radius + 1);
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
            k[i + radius] = std::exp(-0.5 * i * i / (1.5 * 1.5));
            sum += k[i + radius];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    std::vector<double> tmp(img.size()), out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] * img[static_cast<std::size_t>(y) * w + reflect101(x + t, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += kernel[t + radius] * tmp[static_cast<std::size_t>(reflect101(y + t, h)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const ImageGrid& ref, const ImageGrid& test, double data_range) {
    if (!ref.same_dims(test)) throw std::invalid_argument("ssim: dimension mismatch");
    const int w = ref.width, h = ref.height;
    const std::size_t n = ref.size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ref.values[i];
        y[i] = test.values[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = ssim_filter(x, w, h);
    const auto my = ssim_filter(y, w, h);
    const auto mxx = ssim_filter(xx, w, h);
    const auto myy = ssim_filter(yy, w, h);
    const auto mxy = ssim_filter(xy, w, h);

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(n);
}

IqSample iq_metrics(const ImageGrid& ref, const ImageGrid& test, double data_range) {
    if (!ref.same_dims(test)) throw std::invalid_argument("iq_metrics: dimension mismatch");
    if (!(data_range > 0.0)) throw std::invalid_argument("iq_metrics: data_range must be > 0");
    IqSample s;
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = static_cast<double>(ref.values[i]) - static_cast<double>(test.values[i]);
        acc += d * d;
    }
    s.mse = acc / static_cast<double>(ref.size());
    s.psnr = s.mse == 0.0 ? std::numeric_limits<double>::infinity()
                          : 10.0 * std::log10(data_range * data_range / s.mse);
    s.ssim = ssim(ref, test, data_range);
    return s;
}

double ensemble_range(const std::vector<ImageGrid>& refs) {
    if (refs.empty()) throw std::invalid_argument("ensemble_range: empty set");
    float lo = refs[0].min_value(), hi = refs[0].max_value();
    for (const auto& img : refs) {
        lo = std::min(lo, img.min_value());
        hi = std::max(hi, img.max_value());
    }
    return static_cast<double>(hi) - static_cast<double>(lo);
}

IqReport iq_report(const std::vector<ImageGrid>& refs, const std::vector<ImageGrid>& tests,
                   double data_range) {
    if (refs.size() != tests.size() || refs.empty())
        throw std::invalid_argument("iq_report: size mismatch");
    IqReport rep;
    rep.data_range = data_range;
    double mse_acc = 0.0, psnr_acc = 0.0, ssim_acc = 0.0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const IqSample s = iq_metrics(refs[i], tests[i], data_range);
        rep.mse.push_back(s.mse);
        rep.psnr.push_back(s.psnr);
        rep.ssim.push_back(s.ssim);
        mse_acc += s.mse;
        psnr_acc += s.psnr;
        ssim_acc += s.ssim;
    }
    rep.ensemble_mse = mse_acc / static_cast<double>(refs.size());
    rep.mean_psnr = psnr_acc / static_cast<double>(refs.size());
    rep.mean_ssim = ssim_acc / static_cast<double>(refs.size());
    return rep;
}

} // namespace tbiq
