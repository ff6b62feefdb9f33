#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "core/config.hpp"
#include "core/metrics.hpp"
#include "core/report.hpp"
#include "core/roc.hpp"

namespace tbiq {

// Optional per-cell details beyond the CSV rows: per-image IQ arrays and the
// full ROC results (scores + DeLong components), keyed "<sweep>/<resolution>".
struct StudyDetails {
    std::map<std::string, IqReport> iq;
    std::map<std::string, std::map<std::string, RocResult>> roc; // [key][observer]
};

// Per-sweep pipeline: generate image pools, train the super-resolver, build
// the HR/LR/SR datasets, run the observer roster and collect AUC + IQ rows.
// When out_dir is nonempty, partial results are flushed there on failure.
Report run_signal_length_study(const ExperimentConfig& cfg, std::uint64_t seed,
                               const std::string& out_dir = "", StudyDetails* details = nullptr);

// Fixed task, SRCNN depths swept; emits singular-value spectra of the
// SR-image covariance (image and channel space) to out_dir/spectra.csv.
Report run_depth_study(const ExperimentConfig& cfg, std::uint64_t seed,
                       const std::string& out_dir = "", StudyDetails* details = nullptr);

// ResNet observers across {blocks} x {training sizes} x seeds with 4-fold
// flip augmentation, on the MC cluster task.
Report run_capacity_study(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& out_dir = "", StudyDetails* details = nullptr);

// Dispatch on cfg.study.kind; writes report.csv, plot.svg and the resolved
// config into out_dir (created if needed).
Report run_study(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir);

} // namespace tbiq
