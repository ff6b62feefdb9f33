#pragma once

#include <Eigen/Core>

#include "core/image.hpp"

namespace tbiq {

// Empirical two-class statistics: mean difference and the averaged
// covariance K = (K0 + K1)/2 held through its spectral decomposition
// (K is symmetric PSD, so left and right singular vectors coincide).
//
// When the sample count is below the dimension the decomposition is computed
// through the Gram matrix of the centered samples, which never materializes
// the n x n covariance.
class CovarianceEstimate {
public:
    int dim = 0;
    int n0 = 0, n1 = 0;
    Eigen::VectorXd mean0, mean1, mean_diff;
    Eigen::VectorXd sigma;  // spectrum, descending; values beyond rank are zero
    Eigen::MatrixXd basis;  // dim x sigma.size(), orthonormal columns

    // rows are samples; requires >= 2 per class
    static CovarianceEstimate estimate(const Eigen::MatrixXd& class0, const Eigen::MatrixXd& class1);

    // construct from a known covariance and mean difference (synthetic oracles)
    static CovarianceEstimate from_known(const Eigen::MatrixXd& cov,
                                         const Eigen::VectorXd& mean_diff, int n0 = 2, int n1 = 2);

    // dense K = basis * diag(sigma) * basis^T (exact up to roundoff)
    Eigen::MatrixXd covariance() const;

    int rank(double rel_tol = 1e-12) const;
    double condition_number() const; // +inf when rank-deficient
};

// Utility: stack central crops of a set of images as rows of a double matrix.
Eigen::MatrixXd crops_as_rows(const std::vector<ImageGrid>& images, int crop);

// Symmetric eigendecomposition (LAPACK dsyevd), eigenvalues descending.
void sym_eig(const Eigen::MatrixXd& m, Eigen::VectorXd& eigenvalues, Eigen::MatrixXd& eigenvectors);

} // namespace tbiq
