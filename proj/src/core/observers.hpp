#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "core/image.hpp"
#include "core/stats.hpp"

namespace tbiq {

enum class TemplateKind { HO, RHO, CHO };

struct LinearTemplate {
    Eigen::VectorXd weights;
    TemplateKind kind = TemplateKind::HO;
    double lambda = 0.0;      // RHO threshold actually used
    int truncation_rank = 0;  // P components kept
};

struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// w = K^-1 mean_diff via spectral inversion; throws IllConditionedError when
// the spectrum is rank-deficient or the condition number exceeds the
// threshold (use rho_template instead).
LinearTemplate hotelling_template(const CovarianceEstimate& stats, double cond_threshold = 1e12);

// Truncated-pseudoinverse template: keeps components with
// sigma_P >= lambda * sigma_1 > sigma_{P+1} (P maximal).
LinearTemplate rho_template(const CovarianceEstimate& stats, double lambda);

// Logarithmic lambda grid, points_per_decade samples per decade, inclusive.
std::vector<double> log_grid(double lo, double hi, int points_per_decade);

struct RhoSelection {
    double lambda = 0.0;
    LinearTemplate tmpl;
    std::vector<double> grid;
    std::vector<double> val_auc; // per grid point
};

// Evaluates validation AUC per lambda and returns the argmax (ties -> the
// smaller lambda). Validation matrices hold one vectorized image per row.
RhoSelection select_rho_lambda(const CovarianceEstimate& stats, const Eigen::MatrixXd& val0,
                               const Eigen::MatrixXd& val1, const std::vector<double>& grid);

// Gabor channels --------------------------------------------------------

struct GaborChannel {
    double freq = 0.0;  // cycles/pixel
    double theta = 0.0; // orientation, radians
    double phase = 0.0; // radians
    double width = 0.0; // pixels, from the 1-octave FWHM rule
};

struct GaborChannelSet {
    int patch_w = 0, patch_h = 0;
    std::vector<GaborChannel> channels;
    Eigen::MatrixXd T; // q x n channel matrix, rows are discretized channels
};

double gabor_value(const GaborChannel& ch, double x, double y);

// Channel width for a 1-octave bandwidth: w = 3 * 4 ln 2 / (2 pi freq).
double gabor_octave_width(double freq);

// The paper's 60-channel set: 6 passbands x 5 orientations x 2 phases.
GaborChannelSet gabor_channels(int patch_w, int patch_h);

GaborChannelSet gabor_channels_custom(int patch_w, int patch_h, const std::vector<double>& freqs,
                                      const std::vector<double>& thetas,
                                      const std::vector<double>& phases);

// v = T f for a single image (dims must match the patch)
Eigen::VectorXd channelize(const GaborChannelSet& set, const ImageGrid& img);

// rows of `images` are vectorized patches; returns rows of channel outputs
Eigen::MatrixXd channelize_rows(const GaborChannelSet& set, const Eigen::MatrixXd& images);

// Template over channel space; regularizes through the RHO rule when the
// channel covariance is ill-conditioned.
LinearTemplate cho_template(const CovarianceEstimate& channel_stats, double fallback_lambda = 1e-12);

double score_linear(const LinearTemplate& tmpl, const Eigen::VectorXd& x);
double score_linear(const LinearTemplate& tmpl, const ImageGrid& img);

// Scores for every row; pairs with RocResult inputs.
std::vector<double> score_rows(const LinearTemplate& tmpl, const Eigen::MatrixXd& rows);

// Template (de)serialization: f32 payload with a descriptor header.
void save_template(const std::string& path, const LinearTemplate& tmpl);
LinearTemplate load_template(const std::string& path);

} // namespace tbiq
