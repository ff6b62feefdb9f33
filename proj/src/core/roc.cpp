#include "core/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tbiq {

namespace {

// midranks (1-based, ties get the average rank) of a sorted-by-value index
std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t q = i; q <= j; ++q) rank[order[q]] = r;
        i = j + 1;
    }
    return rank;
}

} // namespace

double auc_point(const std::vector<double>& scores0, const std::vector<double>& scores1) {
    const std::size_t n0 = scores0.size(), n1 = scores1.size();
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("auc: empty class");
    std::vector<double> all;
    all.reserve(n0 + n1);
    all.insert(all.end(), scores0.begin(), scores0.end());
    all.insert(all.end(), scores1.begin(), scores1.end());
    const std::vector<double> r = midranks(all);
    double s1 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) s1 += r[n0 + i];
    return (s1 - static_cast<double>(n1) * (n1 + 1) / 2.0) /
           (static_cast<double>(n0) * static_cast<double>(n1));
}

RocResult delong_ci(const std::vector<double>& scores0, const std::vector<double>& scores1,
                    double level) {
    const std::size_t n0 = scores0.size(), n1 = scores1.size();
    if (n0 < 2 || n1 < 2) throw std::invalid_argument("delong_ci: need >= 2 samples per class");
    if (!(level > 0.0) || !(level < 1.0)) throw std::invalid_argument("delong_ci: bad level");

    RocResult res;
    res.level = level;
    res.n0 = static_cast<int>(n0);
    res.n1 = static_cast<int>(n1);
    res.scores0 = scores0;
    res.scores1 = scores1;

    std::vector<double> all;
    all.reserve(n0 + n1);
    all.insert(all.end(), scores0.begin(), scores0.end());
    all.insert(all.end(), scores1.begin(), scores1.end());
    const std::vector<double> rank_all = midranks(all);
    const std::vector<double> rank0 = midranks(scores0);
    const std::vector<double> rank1 = midranks(scores1);

    // V10 per class-1 sample: fraction of class-0 scores below (ties half);
    // V01 per class-0 sample: fraction of class-1 scores above.
    res.v10.resize(n1);
    res.v01.resize(n0);
    for (std::size_t i = 0; i < n1; ++i)
        res.v10[i] = (rank_all[n0 + i] - rank1[i]) / static_cast<double>(n0);
    for (std::size_t j = 0; j < n0; ++j)
        res.v01[j] = 1.0 - (rank_all[j] - rank0[j]) / static_cast<double>(n1);

    double auc = 0.0;
    for (double v : res.v10) auc += v;
    auc /= static_cast<double>(n1);
    res.auc = auc;

    double s10 = 0.0, s01 = 0.0;
    for (double v : res.v10) s10 += (v - auc) * (v - auc);
    s10 /= static_cast<double>(n1 - 1);
    for (double v : res.v01) s01 += (v - auc) * (v - auc);
    s01 /= static_cast<double>(n0 - 1);
    res.delong_variance = s10 / static_cast<double>(n1) + s01 / static_cast<double>(n0);

    const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    const double half = z * std::sqrt(std::max(res.delong_variance, 0.0));
    res.ci_lo = std::max(0.0, auc - half);
    res.ci_hi = std::min(1.0, auc + half);
    return res;
}

AucComparison auc_compare(const RocResult& a, const RocResult& b, double alpha) {
    if (a.n0 != b.n0 || a.n1 != b.n1)
        throw std::invalid_argument("auc_compare: results come from different test sets");
    if (a.v10.empty() || b.v10.empty())
        throw std::invalid_argument("auc_compare: results lack DeLong components");

    const int n0 = a.n0, n1 = a.n1;
    double cov10 = 0.0, cov01 = 0.0;
    for (int i = 0; i < n1; ++i) cov10 += (a.v10[i] - a.auc) * (b.v10[i] - b.auc);
    cov10 /= n1 - 1;
    for (int j = 0; j < n0; ++j) cov01 += (a.v01[j] - a.auc) * (b.v01[j] - b.auc);
    cov01 /= n0 - 1;

    double s10a = 0.0, s10b = 0.0, s01a = 0.0, s01b = 0.0;
    for (int i = 0; i < n1; ++i) {
        s10a += (a.v10[i] - a.auc) * (a.v10[i] - a.auc);
        s10b += (b.v10[i] - b.auc) * (b.v10[i] - b.auc);
    }
    for (int j = 0; j < n0; ++j) {
        s01a += (a.v01[j] - a.auc) * (a.v01[j] - a.auc);
        s01b += (b.v01[j] - b.auc) * (b.v01[j] - b.auc);
    }
    s10a /= n1 - 1;
    s10b /= n1 - 1;
    s01a /= n0 - 1;
    s01b /= n0 - 1;

    AucComparison cmp;
    cmp.diff = a.auc - b.auc;
    const double var = (s10a + s10b - 2.0 * cov10) / n1 + (s01a + s01b - 2.0 * cov01) / n0;
    if (var <= 0.0) {
        cmp.z = cmp.diff == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), cmp.diff);
        cmp.p_value = cmp.diff == 0.0 ? 1.0 : 0.0;
    } else {
        cmp.z = cmp.diff / std::sqrt(var);
        cmp.p_value = 2.0 * (1.0 - normal_cdf(std::abs(cmp.z)));
    }
    cmp.significant = cmp.p_value < alpha;
    return cmp;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
    // Acklam's rational approximation with one Halley refinement
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p <= phigh) {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    // Halley step against the exact CDF
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

} // namespace tbiq
