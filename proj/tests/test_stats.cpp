#include <doctest.h>

#include <Eigen/Dense>

#include "core/rng.hpp"
#include "core/stats.hpp"

using namespace tbiq;

namespace {

Eigen::MatrixXd gaussian_samples(int n, int dim, double std, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = std * rng.gauss();
    return m;
}

Eigen::MatrixXd random_spd(int n, std::uint64_t seed, double jitter = 0.5) {
    Rng rng(seed);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.gauss();
    return a * a.transpose() + jitter * Eigen::MatrixXd::Identity(n, n);
}

} // namespace

TEST_CASE("identical samples per class give a zero covariance") {
    Eigen::MatrixXd c0(2, 4), c1(2, 4);
    c0 << 1, 2, 3, 4, 1, 2, 3, 4;
    c1 << 5, 5, 5, 5, 5, 5, 5, 5;
    const CovarianceEstimate est = CovarianceEstimate::estimate(c0, c1);
    CHECK(est.covariance().cwiseAbs().maxCoeff() < 1e-12);
    for (int j = 0; j < 4; ++j) CHECK(est.mean_diff[j] == doctest::Approx(5.0 - (j + 1)));
    CHECK_THROWS(CovarianceEstimate::estimate(c0.topRows(1), c1));
}

TEST_CASE("iid gaussian samples concentrate to the scaled identity") {
    const int dim = 16, n = 50000;
    const Eigen::MatrixXd c0 = gaussian_samples(n, dim, 2.0, 1);
    const Eigen::MatrixXd c1 = gaussian_samples(n, dim, 2.0, 2);
    const CovarianceEstimate est = CovarianceEstimate::estimate(c0, c1);
    const Eigen::MatrixXd k = est.covariance();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            if (i == j)
                CHECK(k(i, j) == doctest::Approx(4.0).epsilon(0.05));
            else
                CHECK(std::abs(k(i, j)) < 0.15);
        }
    // symmetry of the reconstruction
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spectrum is descending and PSD up to roundoff") {
    const Eigen::MatrixXd c0 = gaussian_samples(200, 12, 1.0, 3);
    const Eigen::MatrixXd c1 = gaussian_samples(180, 12, 1.5, 4);
    const CovarianceEstimate est = CovarianceEstimate::estimate(c0, c1);
    REQUIRE(est.sigma.size() == 12);
    for (int i = 1; i < est.sigma.size(); ++i) CHECK(est.sigma[i] <= est.sigma[i - 1]);
    for (int i = 0; i < est.sigma.size(); ++i) CHECK(est.sigma[i] >= -1e-8 * est.sigma[0]);
    CHECK(est.rank() == 12);
    CHECK(std::isfinite(est.condition_number()));
}

TEST_CASE("gram path agrees with the direct path") {
    // fewer samples than dimensions forces the Gram route; a separate direct
    // estimate on the same data must reproduce the same covariance action
    const int dim = 40, n = 12;
    const Eigen::MatrixXd c0 = gaussian_samples(n, dim, 1.0, 5);
    const Eigen::MatrixXd c1 = gaussian_samples(n, dim, 1.0, 6);
    const CovarianceEstimate gram = CovarianceEstimate::estimate(c0, c1);
    CHECK(gram.sigma.size() < dim); // rank-deficient by construction

    // direct dense covariance for reference
    const Eigen::MatrixXd x0 = c0.rowwise() - c0.colwise().mean();
    const Eigen::MatrixXd x1 = c1.rowwise() - c1.colwise().mean();
    const Eigen::MatrixXd k_ref =
        (x0.transpose() * x0 / (n - 1) + x1.transpose() * x1 / (n - 1)) / 2.0;
    CHECK((gram.covariance() - k_ref).cwiseAbs().maxCoeff() < 1e-10);

    // basis orthonormality
    const Eigen::MatrixXd gtg = gram.basis.transpose() * gram.basis;
    CHECK((gtg - Eigen::MatrixXd::Identity(gtg.rows(), gtg.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("from_known reproduces a prescribed covariance") {
    const Eigen::MatrixXd k = random_spd(8, 7);
    Eigen::VectorXd d(8);
    for (int i = 0; i < 8; ++i) d[i] = i - 3.5;
    const CovarianceEstimate est = CovarianceEstimate::from_known(k, d);
    CHECK((est.covariance() - k).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(est.mean_diff == d);
    CHECK(est.rank() == 8);
}

TEST_CASE("crops_as_rows vectorizes central crops") {
    std::vector<ImageGrid> imgs;
    ImageGrid a(4, 4);
    for (int i = 0; i < 16; ++i) a.values[i] = static_cast<float>(i);
    imgs.push_back(a);
    const Eigen::MatrixXd rows = crops_as_rows(imgs, 2);
    REQUIRE(rows.rows() == 1);
    REQUIRE(rows.cols() == 4);
    CHECK(rows(0, 0) == 5.0);
    CHECK(rows(0, 3) == 10.0);
}
