#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/rng.hpp"
#include "core/roc.hpp"

using namespace tbiq;

namespace {

// brute-force pairwise counting with half credit for ties
double auc_brute(const std::vector<double>& s0, const std::vector<double>& s1) {
    double acc = 0.0;
    for (double b : s1)
        for (double a : s0) acc += b > a ? 1.0 : (b == a ? 0.5 : 0.0);
    return acc / (static_cast<double>(s0.size()) * static_cast<double>(s1.size()));
}

// trapezoidal area under the empirical ROC curve swept over all thresholds
double auc_trapezoid(std::vector<double> s0, std::vector<double> s1) {
    std::vector<double> thr;
    thr.insert(thr.end(), s0.begin(), s0.end());
    thr.insert(thr.end(), s1.begin(), s1.end());
    std::sort(thr.begin(), thr.end());
    thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
    std::vector<std::pair<double, double>> pts; // (fpr, tpr), threshold descending
    pts.push_back({0.0, 0.0});
    for (auto it = thr.rbegin(); it != thr.rend(); ++it) {
        const double t = *it;
        double fp = 0, tp = 0;
        for (double a : s0) fp += a >= t;
        for (double b : s1) tp += b >= t;
        pts.push_back({fp / s0.size(), tp / s1.size()});
    }
    pts.push_back({1.0, 1.0});
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
    return area;
}

} // namespace

TEST_CASE("perfect separation and symmetry") {
    CHECK(auc_point({0.1, 0.2}, {0.3, 0.4}) == 1.0);
    CHECK(auc_point({0.3, 0.4}, {0.1, 0.2}) == 0.0);
    CHECK(auc_point({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.5);
    CHECK_THROWS(auc_point({}, {1.0}));
}

TEST_CASE("tied example from pairwise counting") {
    // pairs: (1>0)=1, (1>1)=.5, (2>0)=1, (2>1)=1 -> 3.5/4
    CHECK(auc_point({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(0.875));
}

TEST_CASE("midrank auc equals brute force exactly on random tied instances") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n0 = 1 + static_cast<int>(rng.uniform_int(25));
        const int n1 = 1 + static_cast<int>(rng.uniform_int(25));
        std::vector<double> s0(n0), s1(n1);
        // coarse integer scores guarantee plenty of ties
        for (auto& v : s0) v = static_cast<double>(rng.uniform_int(8));
        for (auto& v : s1) v = static_cast<double>(rng.uniform_int(8)) + rng.uniform_int(2);
        CHECK(auc_point(s0, s1) == auc_brute(s0, s1));
    }
}

TEST_CASE("midrank auc equals the trapezoidal ROC area") {
    Rng rng(6);
    for (int trial = 0; trial < 40; ++trial) {
        const int n0 = 2 + static_cast<int>(rng.uniform_int(20));
        const int n1 = 2 + static_cast<int>(rng.uniform_int(20));
        std::vector<double> s0(n0), s1(n1);
        for (auto& v : s0) v = static_cast<double>(rng.uniform_int(6));
        for (auto& v : s1) v = 0.5 + static_cast<double>(rng.uniform_int(6));
        CHECK(auc_point(s0, s1) == doctest::Approx(auc_trapezoid(s0, s1)).epsilon(1e-12));
    }
}

TEST_CASE("complement identity") {
    Rng rng(7);
    std::vector<double> s0, s1;
    for (int i = 0; i < 100; ++i) {
        s0.push_back(rng.gauss());
        s1.push_back(0.4 + rng.gauss());
    }
    CHECK(auc_point(s0, s1) == doctest::Approx(1.0 - auc_point(s1, s0)).epsilon(1e-12));
}

TEST_CASE("delong on perfectly separated scores") {
    const RocResult r = delong_ci({0.0, 0.1, 0.2}, {1.0, 1.1, 1.2});
    CHECK(r.auc == 1.0);
    CHECK(r.delong_variance == 0.0);
    CHECK(r.ci_lo == 1.0);
    CHECK(r.ci_hi == 1.0);
}

TEST_CASE("delong interval contains the point estimate and is clipped") {
    Rng rng(8);
    std::vector<double> s0, s1;
    for (int i = 0; i < 50; ++i) {
        s0.push_back(rng.gauss());
        s1.push_back(0.8 + rng.gauss());
    }
    const RocResult r = delong_ci(s0, s1, 0.95);
    CHECK(r.ci_lo <= r.auc);
    CHECK(r.auc <= r.ci_hi);
    CHECK(r.ci_lo >= 0.0);
    CHECK(r.ci_hi <= 1.0);
    CHECK(r.delong_variance > 0.0);
    CHECK_THROWS(delong_ci({1.0}, s1));
}

TEST_CASE("delong variance shrinks as within-class spread vanishes") {
    Rng rng(9);
    double prev = 1.0;
    for (const double spread : {1.0, 0.3, 0.05}) {
        std::vector<double> s0, s1;
        for (int i = 0; i < 100; ++i) {
            s0.push_back(spread * rng.gauss());
            s1.push_back(2.0 + spread * rng.gauss());
        }
        const RocResult r = delong_ci(s0, s1);
        CHECK(r.delong_variance <= prev + 1e-12);
        prev = r.delong_variance;
    }
}

TEST_CASE("delong variance against the closed form without ties") {
    // with distinct scores the placements are exact rank statistics; compare
    // against a direct O(n0*n1) evaluation of the components
    Rng rng(10);
    std::vector<double> s0, s1;
    for (int i = 0; i < 80; ++i) s0.push_back(rng.gauss());
    for (int i = 0; i < 60; ++i) s1.push_back(0.7 + rng.gauss());
    const RocResult r = delong_ci(s0, s1);

    const double n0 = 80, n1 = 60;
    std::vector<double> v10(60, 0.0), v01(80, 0.0);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 80; ++j) {
            const double psi = s1[i] > s0[j] ? 1.0 : (s1[i] == s0[j] ? 0.5 : 0.0);
            v10[i] += psi / n0;
            v01[j] += psi / n1;
        }
    double auc = 0.0;
    for (double v : v10) auc += v / n1;
    double sx = 0.0, sy = 0.0;
    for (double v : v10) sx += (v - auc) * (v - auc);
    for (double v : v01) sy += (v - auc) * (v - auc);
    const double want = sx / (n1 - 1) / n1 + sy / (n0 - 1) / n0;
    CHECK(r.auc == doctest::Approx(auc).epsilon(1e-12));
    CHECK(r.delong_variance == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("paired comparison: identical scores are never significant") {
    Rng rng(11);
    std::vector<double> s0, s1;
    for (int i = 0; i < 40; ++i) {
        s0.push_back(rng.gauss());
        s1.push_back(0.5 + rng.gauss());
    }
    const RocResult a = delong_ci(s0, s1);
    const AucComparison cmp = auc_compare(a, a);
    CHECK(cmp.diff == 0.0);
    CHECK(!cmp.significant);
    CHECK(cmp.p_value == doctest::Approx(1.0));
}

TEST_CASE("paired comparison flags a strictly dominating observer") {
    Rng rng(12);
    std::vector<double> s0a, s1a, s0b, s1b;
    for (int i = 0; i < 150; ++i) {
        const double bg = rng.gauss();
        s0a.push_back(bg);
        s0b.push_back(bg);
        const double sig = rng.gauss();
        s1a.push_back(sig + 2.0); // observer A separates well
        s1b.push_back(sig + 0.3); // observer B barely
    }
    const AucComparison cmp = auc_compare(delong_ci(s0a, s1a), delong_ci(s0b, s1b));
    CHECK(cmp.diff > 0.0);
    CHECK(cmp.significant);
    RocResult other = delong_ci({0.0, 1.0, 2.0}, {1.5, 2.5, 3.5});
    CHECK_THROWS(auc_compare(delong_ci(s0a, s1a), other)); // different test sets
}

TEST_CASE("paired comparison agrees with a permutation oracle") {
    // seeded synthetic case with a small genuine effect: flip a coin per
    // pair-assignment 1000 times and compare accept/reject at alpha = 0.05
    Rng rng(13);
    const int n = 120;
    std::vector<double> s0a, s1a, s0b, s1b;
    for (int i = 0; i < n; ++i) {
        const double bg = rng.gauss(), sig = rng.gauss();
        s0a.push_back(bg);
        s1a.push_back(sig + 1.1);
        s0b.push_back(bg + 0.15 * rng.gauss());
        s1b.push_back(sig + 0.72);
    }
    const AucComparison cmp = auc_compare(delong_ci(s0a, s1a), delong_ci(s0b, s1b));

    // permutation null: swap observer A/B scores per image
    const double observed = std::abs(auc_point(s0a, s1a) - auc_point(s0b, s1b));
    Rng perm(14);
    int more_extreme = 0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> p0a(n), p1a(n), p0b(n), p1b(n);
        for (int i = 0; i < n; ++i) {
            const bool flip = perm.uniform() < 0.5;
            p0a[i] = flip ? s0b[i] : s0a[i];
            p0b[i] = flip ? s0a[i] : s0b[i];
            const bool flip2 = perm.uniform() < 0.5;
            p1a[i] = flip2 ? s1b[i] : s1a[i];
            p1b[i] = flip2 ? s1a[i] : s1b[i];
        }
        const double d = std::abs(auc_point(p0a, p1a) - auc_point(p0b, p1b));
        more_extreme += d >= observed;
    }
    const double p_perm = static_cast<double>(more_extreme) / reps;
    CHECK(cmp.significant == (p_perm < 0.05));
}

TEST_CASE("normal quantile inverts the cdf") {
    for (double p : {0.005, 0.025, 0.2, 0.5, 0.8, 0.975, 0.995}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
}
