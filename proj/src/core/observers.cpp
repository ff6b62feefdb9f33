#include "core/observers.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "core/roc.hpp"

namespace tbiq {

namespace {

// w = sum_{i<=P} sigma_i^-1 u_i (u_i^T d)
Eigen::VectorXd spectral_solve(const CovarianceEstimate& stats, int p) {
    const Eigen::VectorXd c = stats.basis.leftCols(p).transpose() * stats.mean_diff;
    Eigen::VectorXd scaled(p);
    for (int i = 0; i < p; ++i) scaled[i] = c[i] / stats.sigma[i];
    return stats.basis.leftCols(p) * scaled;
}

} // namespace

LinearTemplate hotelling_template(const CovarianceEstimate& stats, double cond_threshold) {
    if (stats.sigma.size() < stats.dim)
        throw IllConditionedError("hotelling_template: covariance is rank-deficient; use rho_template");
    const double cond = stats.condition_number();
    if (!(cond < cond_threshold))
        throw IllConditionedError("hotelling_template: condition number " + std::to_string(cond) +
                                  " above threshold; use rho_template");
    LinearTemplate t;
    t.kind = TemplateKind::HO;
    t.truncation_rank = stats.dim;
    t.weights = spectral_solve(stats, stats.dim);
    return t;
}

LinearTemplate rho_template(const CovarianceEstimate& stats, double lambda) {
    if (!(lambda >= 0.0) || !(lambda <= 1.0))
        throw std::invalid_argument("rho_template: lambda must be in [0, 1]");
    if (stats.sigma.size() == 0 || !(stats.sigma[0] > 0.0))
        throw std::runtime_error("rho_template: empty spectrum");
    const double cut = lambda * stats.sigma[0];
    int p = 0;
    while (p < stats.sigma.size() && stats.sigma[p] >= cut && stats.sigma[p] > 0.0) ++p;
    if (p == 0) throw std::runtime_error("rho_template: all singular values truncated");
    LinearTemplate t;
    t.kind = TemplateKind::RHO;
    t.lambda = lambda;
    t.truncation_rank = p;
    t.weights = spectral_solve(stats, p);
    return t;
}

std::vector<double> log_grid(double lo, double hi, int points_per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || points_per_decade < 1)
        throw std::invalid_argument("log_grid: invalid range");
    std::vector<double> out;
    const double step = 1.0 / points_per_decade;
    const double l0 = std::log10(lo), l1 = std::log10(hi);
    for (double l = l0; l < l1 + 1e-12; l += step) out.push_back(std::pow(10.0, l));
    return out;
}

RhoSelection select_rho_lambda(const CovarianceEstimate& stats, const Eigen::MatrixXd& val0,
                               const Eigen::MatrixXd& val1, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("select_rho_lambda: empty grid");
    RhoSelection sel;
    sel.grid = grid;
    double best_auc = -1.0;
    for (const double lambda : grid) {
        const LinearTemplate t = rho_template(stats, lambda);
        const std::vector<double> s0 = score_rows(t, val0);
        const std::vector<double> s1 = score_rows(t, val1);
        const double a = auc_point(s0, s1);
        sel.val_auc.push_back(a);
        if (a > best_auc) { // strict: ties keep the smaller lambda
            best_auc = a;
            sel.lambda = lambda;
            sel.tmpl = t;
        }
    }
    return sel;
}

double gabor_octave_width(double freq) {
    // FWHM rule for a bandwidth of b octaves: w = (4 ln 2 / (2 pi f)) *
    // (2^b + 1)/(2^b - 1); b = 1 gives the factor 3.
    return 3.0 * (4.0 * std::numbers::ln2) / (2.0 * std::numbers::pi * freq);
}

double gabor_value(const GaborChannel& ch, double x, double y) {
    const double g = std::exp(-(4.0 * std::numbers::ln2) * (x * x + y * y) / (ch.width * ch.width));
    const double carrier =
        std::cos(2.0 * std::numbers::pi * ch.freq * (x * std::cos(ch.theta) + y * std::sin(ch.theta)) +
                 ch.phase);
    return g * carrier;
}

GaborChannelSet gabor_channels_custom(int patch_w, int patch_h, const std::vector<double>& freqs,
                                      const std::vector<double>& thetas,
                                      const std::vector<double>& phases) {
    if (patch_w < 1 || patch_h < 1) throw std::invalid_argument("gabor_channels: bad patch dims");
    GaborChannelSet set;
    set.patch_w = patch_w;
    set.patch_h = patch_h;
    for (const double f : freqs)
        for (const double th : thetas)
            for (const double ph : phases)
                set.channels.push_back({f, th, ph, gabor_octave_width(f)});

    const int n = patch_w * patch_h;
    set.T.resize(static_cast<Eigen::Index>(set.channels.size()), n);
    const double cx = (patch_w - 1) / 2.0;
    const double cy = (patch_h - 1) / 2.0;
    for (std::size_t q = 0; q < set.channels.size(); ++q)
        for (int yy = 0; yy < patch_h; ++yy)
            for (int xx = 0; xx < patch_w; ++xx)
                set.T(static_cast<Eigen::Index>(q), yy * patch_w + xx) =
                    gabor_value(set.channels[q], xx - cx, yy - cy);
    return set;
}

GaborChannelSet gabor_channels(int patch_w, int patch_h) {
    const std::vector<double> freqs = {3.0 / 256, 3.0 / 128, 3.0 / 64, 3.0 / 32, 3.0 / 16, 3.0 / 8};
    const double pi = std::numbers::pi;
    const std::vector<double> thetas = {0.0, 2 * pi / 5, 4 * pi / 5, 6 * pi / 5, 8 * pi / 5};
    const std::vector<double> phases = {0.0, pi / 2};
    return gabor_channels_custom(patch_w, patch_h, freqs, thetas, phases);
}

Eigen::VectorXd channelize(const GaborChannelSet& set, const ImageGrid& img) {
    if (img.width != set.patch_w || img.height != set.patch_h)
        throw std::invalid_argument("channelize: image does not match patch dims");
    Eigen::VectorXd f(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) f[static_cast<Eigen::Index>(i)] = img.values[i];
    return set.T * f;
}

Eigen::MatrixXd channelize_rows(const GaborChannelSet& set, const Eigen::MatrixXd& images) {
    if (images.cols() != set.T.cols())
        throw std::invalid_argument("channelize_rows: dimension mismatch");
    return images * set.T.transpose();
}

LinearTemplate cho_template(const CovarianceEstimate& channel_stats, double fallback_lambda) {
    LinearTemplate t;
    try {
        t = hotelling_template(channel_stats);
    } catch (const IllConditionedError&) {
        t = rho_template(channel_stats, fallback_lambda);
    }
    t.kind = TemplateKind::CHO;
    return t;
}

double score_linear(const LinearTemplate& tmpl, const Eigen::VectorXd& x) {
    if (x.size() != tmpl.weights.size())
        throw std::invalid_argument("score_linear: dimension mismatch");
    return tmpl.weights.dot(x);
}

double score_linear(const LinearTemplate& tmpl, const ImageGrid& img) {
    if (static_cast<Eigen::Index>(img.size()) != tmpl.weights.size())
        throw std::invalid_argument("score_linear: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        acc += tmpl.weights[static_cast<Eigen::Index>(i)] * img.values[i];
    return acc;
}

std::vector<double> score_rows(const LinearTemplate& tmpl, const Eigen::MatrixXd& rows) {
    if (rows.cols() != tmpl.weights.size())
        throw std::invalid_argument("score_rows: dimension mismatch");
    const Eigen::VectorXd s = rows * tmpl.weights;
    return std::vector<double>(s.data(), s.data() + s.size());
}

void save_template(const std::string& path, const LinearTemplate& tmpl) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_template: cannot open " + path);
    const char magic[4] = {'T', 'B', 'L', 'T'};
    std::fwrite(magic, 1, 4, f);
    const std::uint32_t kind = static_cast<std::uint32_t>(tmpl.kind);
    const std::uint64_t n = static_cast<std::uint64_t>(tmpl.weights.size());
    const double lambda = tmpl.lambda;
    const std::int32_t p = tmpl.truncation_rank;
    std::fwrite(&kind, 4, 1, f);
    std::fwrite(&lambda, 8, 1, f);
    std::fwrite(&p, 4, 1, f);
    std::fwrite(&n, 8, 1, f);
    std::vector<float> w(tmpl.weights.size());
    for (Eigen::Index i = 0; i < tmpl.weights.size(); ++i) w[i] = static_cast<float>(tmpl.weights[i]);
    std::fwrite(w.data(), sizeof(float), w.size(), f);
    std::fclose(f);
}

LinearTemplate load_template(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_template: cannot open " + path);
    char magic[4];
    std::uint32_t kind = 0;
    double lambda = 0;
    std::int32_t p = 0;
    std::uint64_t n = 0;
    bool ok = std::fread(magic, 1, 4, f) == 4 && std::memcmp(magic, "TBLT", 4) == 0 &&
              std::fread(&kind, 4, 1, f) == 1 && std::fread(&lambda, 8, 1, f) == 1 &&
              std::fread(&p, 4, 1, f) == 1 && std::fread(&n, 8, 1, f) == 1;
    LinearTemplate t;
    if (ok) {
        std::vector<float> w(n);
        ok = std::fread(w.data(), sizeof(float), n, f) == n;
        if (ok) {
            t.weights.resize(static_cast<Eigen::Index>(n));
            for (std::uint64_t i = 0; i < n; ++i) t.weights[static_cast<Eigen::Index>(i)] = w[i];
        }
    }
    std::fclose(f);
    if (!ok) throw std::runtime_error("load_template: bad or truncated file " + path);
    t.kind = static_cast<TemplateKind>(kind);
    t.lambda = lambda;
    t.truncation_rank = p;
    return t;
}

} // namespace tbiq
