#include "core/stats.hpp"

#include <limits>
#include <stdexcept>

#include <cblas.h>
#include <lapacke.h>

namespace tbiq {

void sym_eig(const Eigen::MatrixXd& m, Eigen::VectorXd& eigenvalues, Eigen::MatrixXd& eigenvectors) {
    const int n = static_cast<int>(m.rows());
    if (m.cols() != n) throw std::invalid_argument("sym_eig: matrix must be square");
    eigenvectors = m;
    Eigen::VectorXd w(n);
    const int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, eigenvectors.data(), n, w.data());
    if (info != 0) throw std::runtime_error("sym_eig: dsyevd failed, info=" + std::to_string(info));
    // ascending from LAPACK; flip to descending
    eigenvalues.resize(n);
    Eigen::MatrixXd flipped(n, n);
    for (int i = 0; i < n; ++i) {
        eigenvalues[i] = w[n - 1 - i];
        flipped.col(i) = eigenvectors.col(n - 1 - i);
    }
    eigenvectors = std::move(flipped);
}

namespace {

// C (k x k) = A^T A for column-major A (m x k), accumulated via dsyrk
void add_syrk(Eigen::MatrixXd& c, const Eigen::MatrixXd& a, double alpha, double beta) {
    const int m = static_cast<int>(a.rows());
    const int k = static_cast<int>(a.cols());
    cblas_dsyrk(CblasColMajor, CblasLower, CblasTrans, k, m, alpha, a.data(), m, beta, c.data(), k);
}

void symmetrize_from_lower(Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows());
    for (int j = 0; j < n; ++j)
        for (int i = j + 1; i < n; ++i) c(j, i) = c(i, j);
}

} // namespace

CovarianceEstimate CovarianceEstimate::estimate(const Eigen::MatrixXd& class0,
                                                const Eigen::MatrixXd& class1) {
    if (class0.cols() != class1.cols())
        throw std::invalid_argument("estimate: dimension mismatch between classes");
    const int n = static_cast<int>(class0.cols());
    const int n0 = static_cast<int>(class0.rows());
    const int n1 = static_cast<int>(class1.rows());
    if (n0 < 2 || n1 < 2) throw std::invalid_argument("estimate: need >= 2 samples per class");

    CovarianceEstimate est;
    est.dim = n;
    est.n0 = n0;
    est.n1 = n1;
    est.mean0 = class0.colwise().mean();
    est.mean1 = class1.colwise().mean();
    est.mean_diff = est.mean1 - est.mean0;

    Eigen::MatrixXd x0 = class0.rowwise() - est.mean0.transpose();
    Eigen::MatrixXd x1 = class1.rowwise() - est.mean1.transpose();

    if (n0 + n1 > n) {
        // direct path: form K = (K0 + K1)/2 and eigendecompose
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
        add_syrk(k, x0, 1.0 / (2.0 * (n0 - 1)), 0.0);
        add_syrk(k, x1, 1.0 / (2.0 * (n1 - 1)), 1.0);
        symmetrize_from_lower(k);
        sym_eig(k, est.sigma, est.basis);
    } else {
        // Gram path: A = [x0/sqrt(2(n0-1)); x1/sqrt(2(n1-1))], K = A^T A;
        // eigenvectors of the Gram matrix A A^T map to those of K.
        const int m = n0 + n1;
        Eigen::MatrixXd a(m, n);
        a.topRows(n0) = x0 / std::sqrt(2.0 * (n0 - 1));
        a.bottomRows(n1) = x1 / std::sqrt(2.0 * (n1 - 1));
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
        cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, m, n, 1.0, a.data(), m, 0.0, g.data(),
                    m);
        symmetrize_from_lower(g);
        Eigen::VectorXd lam;
        Eigen::MatrixXd q;
        sym_eig(g, lam, q);
        // numerical rank: centering removes at least one direction per class
        const double tol = std::max(lam[0], 0.0) * 1e-12;
        int r = 0;
        while (r < m && lam[r] > tol) ++r;
        est.sigma = lam.head(r);
        Eigen::MatrixXd qk = q.leftCols(r);
        est.basis.resize(n, r);
        // basis = A^T * Q * diag(1/sqrt(lambda))
        cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, n, r, m, 1.0, a.data(), m, qk.data(),
                    m, 0.0, est.basis.data(), n);
        for (int i = 0; i < r; ++i) est.basis.col(i) /= std::sqrt(lam[i]);
    }
    return est;
}

CovarianceEstimate CovarianceEstimate::from_known(const Eigen::MatrixXd& cov,
                                                  const Eigen::VectorXd& mean_diff, int n0, int n1) {
    if (cov.rows() != cov.cols()) throw std::invalid_argument("from_known: covariance must be square");
    if (mean_diff.size() != cov.rows())
        throw std::invalid_argument("from_known: mean_diff dimension mismatch");
    CovarianceEstimate est;
    est.dim = static_cast<int>(cov.rows());
    est.n0 = n0;
    est.n1 = n1;
    est.mean0 = Eigen::VectorXd::Zero(est.dim);
    est.mean1 = mean_diff;
    est.mean_diff = mean_diff;
    sym_eig(cov, est.sigma, est.basis);
    return est;
}

Eigen::MatrixXd CovarianceEstimate::covariance() const {
    return basis * sigma.asDiagonal() * basis.transpose();
}

int CovarianceEstimate::rank(double rel_tol) const {
    if (sigma.size() == 0) return 0;
    const double tol = std::max(sigma[0], 0.0) * rel_tol;
    int r = 0;
    while (r < sigma.size() && sigma[r] > tol) ++r;
    return r;
}

double CovarianceEstimate::condition_number() const {
    if (sigma.size() < dim || sigma.size() == 0)
        return std::numeric_limits<double>::infinity();
    const double lo = sigma[sigma.size() - 1];
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return sigma[0] / lo;
}

Eigen::MatrixXd crops_as_rows(const std::vector<ImageGrid>& images, int crop) {
    if (images.empty()) throw std::invalid_argument("crops_as_rows: empty set");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()),
                        static_cast<Eigen::Index>(crop) * crop);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const ImageGrid c = central_crop(images[i], crop, crop);
        for (std::size_t j = 0; j < c.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.values[j];
    }
    return out;
}

} // namespace tbiq
