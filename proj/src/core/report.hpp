#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tbiq {

// One evaluated cell of a study. Metrics that do not apply hold NaN; cells
// whose pipeline failed are kept with all-NaN metrics so every
// (sweep x resolution x observer) combination stays visible.
struct ReportRow {
    std::string study;
    std::string sweep_value;
    std::string resolution; // hr | lr | sr
    std::string observer;   // rho | cho | resnet | srcnn
    double auc = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    double mse = 0.0, psnr = 0.0, ssim = 0.0;
    std::uint64_t seed = 0;
};

struct Report {
    std::vector<ReportRow> rows;
};

// schema: study,sweep_value,resolution,observer,auc,ci_lo,ci_hi,mse,psnr,ssim,seed
void write_csv(const Report& report, const std::string& path);
Report read_csv(const std::string& path);
std::string csv_text(const Report& report);

// SVG line chart: one polyline per (resolution, observer) series over the
// sweep, with CI error bars where AUC is present (falls back to MSE series).
void emit_plot(const Report& report, const std::string& path);

} // namespace tbiq
