#pragma once

#include <vector>

#include "core/image.hpp"

namespace tbiq {

struct IqSample {
    double mse = 0.0;
    double psnr = 0.0; // dB; +inf sentinel when mse == 0
    double ssim = 1.0;
};

// data_range is the dynamic range (max - min) of the reference ensemble;
// PSNR and the SSIM constants C1/C2 are defined against it.
IqSample iq_metrics(const ImageGrid& ref, const ImageGrid& test, double data_range);

double ensemble_range(const std::vector<ImageGrid>& refs);

// Ensemble report with the per-image arrays retained.
struct IqReport {
    std::vector<double> mse, psnr, ssim;
    double ensemble_mse = 0.0;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    double data_range = 0.0;
};

IqReport iq_report(const std::vector<ImageGrid>& refs, const std::vector<ImageGrid>& tests,
                   double data_range);

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), mirror-padded,
// C1 = (0.01 R)^2, C2 = (0.03 R)^2.
double ssim(const ImageGrid& ref, const ImageGrid& test, double data_range);

} // namespace tbiq
