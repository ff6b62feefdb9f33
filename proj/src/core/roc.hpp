#pragma once

#include <vector>

namespace tbiq {

// AUC with DeLong variance and confidence interval. Scores and structural
// components are retained so paired observer comparisons stay possible.
struct RocResult {
    double auc = 0.5;
    double delong_variance = 0.0;
    double ci_lo = 0.0, ci_hi = 1.0;
    double level = 0.95;
    int n0 = 0, n1 = 0;
    std::vector<double> scores0, scores1;
    std::vector<double> v01, v10; // DeLong placements per class-0 / class-1 sample
};

// Mann-Whitney AUC with midrank tie handling.
double auc_point(const std::vector<double>& scores0, const std::vector<double>& scores1);

// Point estimate, DeLong variance and the level-CI (clipped to [0, 1]).
RocResult delong_ci(const std::vector<double>& scores0, const std::vector<double>& scores1,
                    double level = 0.95);

struct AucComparison {
    double diff = 0.0; // auc_a - auc_b
    double z = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

// Paired-difference z-test using the DeLong covariance of the two observers'
// placements; both results must come from the same test images in the same
// order.
AucComparison auc_compare(const RocResult& a, const RocResult& b, double alpha = 0.05);

// standard normal quantile / CDF helpers
double normal_quantile(double p);
double normal_cdf(double x);

} // namespace tbiq
