#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/ensemble.hpp"

namespace tbiq {

enum class StudyKind { RayleighLength, SrcnnDepth, McCapacity };

std::string study_kind_name(StudyKind k);
StudyKind study_kind_from_name(const std::string& name);

struct DataSizes {
    int sr_train = 2000;            // images, class-balanced
    int sr_val = 500;
    int cov_per_class = 10000;      // covariance estimation samples
    int lambda_val_per_class = 500; // RHO lambda selection set
    int test_per_class = 4000;
    int noise_reals = 1;            // noise realizations per background (cov sets)
    bool share_backgrounds = true;  // reuse the background pool across sweep values
};

struct SrcnnTrainCfg {
    int layers = 3;
    int epochs = 60;
    double learning_rate = 1e-4;
    int batch = 64;
    int patch = 32;            // 0 = train on full images
    int patches_per_image = 2;
};

struct ObserverCfg {
    double rho_lambda_lo = 1e-9;
    double rho_lambda_hi = 1e-4;
    int rho_points_per_decade = 6;
    int resnet_blocks = 2;
    bool resnet_rho_init = true;
    int resnet_epochs = 30;
    double resnet_learning_rate = 1e-4;
    int resnet_batch = 32;
    bool on_the_fly_noise = true; // semi-online: regenerate noise per epoch
    std::vector<std::string> roster = {"rho", "cho", "resnet"};
};

struct StudySpec {
    StudyKind kind = StudyKind::RayleighLength;
    std::vector<int> lengths = {5, 6, 7, 8, 9};
    std::vector<int> depths = {2, 3, 4, 5, 6, 7, 8};
    std::vector<int> blocks = {2, 4, 6, 8};
    std::vector<int> sizes = {500, 1000, 2000, 5000}; // observer training images
    std::vector<std::uint64_t> seeds = {1, 2, 3};     // capacity-study replicates
    std::vector<std::string> resolutions = {"hr", "lr", "sr"};
    bool sr_crop_region = false; // evaluate on the SR-exact central region only
};

struct ExperimentConfig {
    TaskSpec task;
    DataSizes data;
    SrcnnTrainCfg srcnn;
    ObserverCfg observer;
    StudySpec study;
    double ci_level = 0.95;

    // defaults describe the Rayleigh study; the MC profile overrides the
    // degradation/noise/study blocks (see tbiq_config_default)
    ExperimentConfig() {
        task.degradation.blur_sigma = 1.5;
        task.degradation.noise.sigma_p = 0.013;
        task.degradation.noise.sigma_g = 0.35;
    }

    void validate() const;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// key = value under [section] headers; '#'/';' comments; unknown keys are
// rejected with their line number; missing keys keep defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// canonical form: every section and key, full-precision numbers
std::string emit_config(const ExperimentConfig& cfg);
void write_config(const std::string& path, const ExperimentConfig& cfg);

} // namespace tbiq
