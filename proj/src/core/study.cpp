#include "core/study.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "core/dataset_io.hpp"
#include "core/learned.hpp"
#include "core/metrics.hpp"
#include "core/observers.hpp"
#include "core/rng.hpp"
#include "core/roc.hpp"
#include "core/srcnn.hpp"
#include "core/stats.hpp"

namespace tbiq {

namespace {

constexpr int kOtfBase = 1 << 20; // noise stream slots above this regenerate per epoch

double qnan() { return std::nan(""); }

std::uint64_t noise_seed(std::uint64_t master, const std::string& stage, const std::string& res,
                         const std::string& sweep, int index, int k) {
    return derive_seed(master, "noise/" + stage + "/" + res + "/" + sweep,
                       (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) << 32) |
                           static_cast<std::uint32_t>(index));
}

// no two composites may coincide across or within stage pools
void assert_disjoint(std::initializer_list<const Ensemble*> pools) {
    std::set<std::uint64_t> seen;
    for (const Ensemble* e : pools)
        for (const ImageGrid& img : e->images)
            if (!seen.insert(content_hash(img)).second)
                throw std::logic_error("study: stage pools are not disjoint (seed stream collision)");
}

struct StageSets {
    std::vector<ImageGrid> imgs; // region-sized measurement images
    std::vector<int> labels;
};

// Materialize one stage at one resolution. SR always reuses the LR noise
// stream so f_SR = S(f_LR) holds for the exact same realizations.
StageSets materialize(const Ensemble& ens, const TaskSpec& task, const std::string& res,
                      const Network<float>* srnet, int region, int reals, std::uint64_t master,
                      const std::string& stage, const std::string& sweep) {
    const int n = static_cast<int>(ens.size());
    StageSets out;
    out.imgs.resize(static_cast<std::size_t>(n) * reals);
    out.labels.resize(static_cast<std::size_t>(n) * reals);
    const int margin = srnet ? conv_margin(*srnet) : 0;

#pragma omp parallel for schedule(dynamic, 4)
    for (int q = 0; q < n * reals; ++q) {
        const int i = q / reals;
        const int r = q % reals;
        ImageGrid img;
        if (res == "hr") {
            img = apply_noise(ens.images[i], task.degradation.noise,
                              noise_seed(master, stage, "hr", sweep, i, r));
        } else {
            img = degrade(ens.images[i], task.degradation,
                          noise_seed(master, stage, "lr", sweep, i, r));
            if (res == "sr") {
                if (!srnet) throw std::logic_error("materialize: SR requested without a network");
                img = region > 0 ? super_resolve_crop(*srnet, img, region, margin)
                                 : super_resolve(*srnet, img);
            }
        }
        if (region > 0 && (img.width != region || img.height != region))
            img = central_crop(img, region, region);
        out.imgs[q] = std::move(img);
        out.labels[q] = ens.labels[i];
    }
    return out;
}

void split_by_label(const StageSets& s, int crop, Eigen::MatrixXd& m0, Eigen::MatrixXd& m1) {
    std::vector<ImageGrid> c0, c1;
    for (std::size_t i = 0; i < s.imgs.size(); ++i)
        (s.labels[i] == 0 ? c0 : c1).push_back(central_crop(s.imgs[i], crop, crop));
    m0 = crops_as_rows(c0, crop);
    m1 = crops_as_rows(c1, crop);
}

std::vector<ImageGrid> crop_all(const std::vector<ImageGrid>& imgs, int crop) {
    std::vector<ImageGrid> out;
    out.reserve(imgs.size());
    for (const auto& img : imgs) out.push_back(central_crop(img, crop, crop));
    return out;
}

struct IqCell {
    double mse = qnan(), psnr = qnan(), ssim = qnan();
    IqReport detail;
};

struct SweepEval {
    std::map<std::string, RocResult> roc;  // key: observer name
    std::map<std::string, bool> failed;
    IqCell iq;
};

// Linear observer pipeline for one (sweep, resolution): covariance stats,
// RHO with validation-selected lambda, Gabor CHO.
struct LinearObservers {
    CovarianceEstimate stats;
    RhoSelection rho;
    LinearTemplate cho;
};

LinearObservers build_linear_observers(const ExperimentConfig& cfg, const StageSets& cov,
                                       const StageSets& lambda_val, const GaborChannelSet& gabor) {
    LinearObservers lo;
    const int crop = cfg.task.crop;
    Eigen::MatrixXd c0, c1, v0, v1;
    split_by_label(cov, crop, c0, c1);
    split_by_label(lambda_val, crop, v0, v1);
    lo.stats = CovarianceEstimate::estimate(c0, c1);
    const auto grid = log_grid(cfg.observer.rho_lambda_lo, cfg.observer.rho_lambda_hi,
                               cfg.observer.rho_points_per_decade);
    lo.rho = select_rho_lambda(lo.stats, v0, v1, grid);

    const CovarianceEstimate chstats =
        CovarianceEstimate::estimate(channelize_rows(gabor, c0), channelize_rows(gabor, c1));
    lo.cho = cho_template(chstats);
    return lo;
}

RocResult score_linear_on_test(const LinearTemplate& tmpl, const StageSets& test, int crop,
                               const GaborChannelSet* gabor, double level) {
    Eigen::MatrixXd t0, t1;
    split_by_label(test, crop, t0, t1);
    if (gabor) {
        t0 = channelize_rows(*gabor, t0);
        t1 = channelize_rows(*gabor, t1);
    }
    return delong_ci(score_rows(tmpl, t0), score_rows(tmpl, t1), level);
}

struct ObserverPool {
    const Ensemble* ens = nullptr;   // noise-free composites
    std::vector<int> labels;
};

// Training source for the learned observer at a given resolution. With
// on-the-fly noise the measurement noise (and SR pass) is regenerated per
// epoch; otherwise images are materialized once.
std::unique_ptr<LabeledImageSource> make_observer_source(
    const ExperimentConfig& cfg, const Ensemble& ens, int count, const std::string& res,
    const Network<float>* srnet, std::uint64_t master, const std::string& stage,
    const std::string& sweep, bool flip4, bool on_the_fly) {
    const int crop = cfg.task.crop;
    const TaskSpec task = cfg.task;
    const int margin = srnet ? conv_margin(*srnet) : 0;
    std::vector<int> labels(ens.labels.begin(), ens.labels.begin() + count);

    auto gen_one = [task, res, srnet, crop, margin, master, stage, sweep, &ens](int i, int k) {
        ImageGrid img;
        if (res == "hr") {
            img = apply_noise(ens.images[i], task.degradation.noise,
                              noise_seed(master, stage, "hr", sweep, i, k));
        } else {
            img = degrade(ens.images[i], task.degradation,
                          noise_seed(master, stage, "lr", sweep, i, k));
            if (res == "sr") img = super_resolve_crop(*srnet, img, crop, margin);
        }
        if (img.width != crop || img.height != crop) img = central_crop(img, crop, crop);
        return img;
    };

    if (on_the_fly) {
        auto gen = [gen_one](int i, int epoch) {
            return gen_one(i, epoch < 0 ? 0 : kOtfBase + epoch);
        };
        return std::make_unique<LabeledImageSource>(count, crop, crop, gen, labels, flip4);
    }
    auto fixed = std::make_shared<std::vector<ImageGrid>>();
    fixed->resize(count);
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < count; ++i) (*fixed)[i] = gen_one(i, 0);
    auto gen = [fixed](int i, int) { return (*fixed)[i]; };
    return std::make_unique<LabeledImageSource>(count, crop, crop, gen, labels, flip4);
}

RocResult score_resnet_on_test(const Network<float>& net, const StageSets& test, int crop,
                               double level) {
    std::vector<ImageGrid> crops0, crops1;
    for (std::size_t i = 0; i < test.imgs.size(); ++i)
        (test.labels[i] == 0 ? crops0 : crops1).push_back(central_crop(test.imgs[i], crop, crop));
    return delong_ci(score_learned_many(net, crops0), score_learned_many(net, crops1), level);
}

IqCell compute_iq(const StageSets& hr_test, const StageSets& res_test, const std::string& res,
                  double range) {
    IqCell cell;
    if (res == "hr") {
        cell.mse = 0.0;
        cell.psnr = std::numeric_limits<double>::infinity();
        cell.ssim = 1.0;
        return cell;
    }
    cell.detail = iq_report(hr_test.imgs, res_test.imgs, range);
    cell.mse = cell.detail.ensemble_mse;
    cell.psnr = cell.detail.mean_psnr;
    cell.ssim = cell.detail.mean_ssim;
    return cell;
}

Network<float> train_srcnn(const ExperimentConfig& cfg, const Ensemble& train_ens,
                           const Ensemble& val_ens, std::uint64_t master, const std::string& sweep,
                           int depth, TrainResult* history = nullptr) {
    SrcnnSpec spec;
    spec.n_layers = depth;
    spec.hidden_filters = 32;
    Network<float> net = build_srcnn(spec, derive_seed(master, "srcnn-init/" + sweep));

    const TaskSpec& task = cfg.task;
    SrPairs train_pairs, val_pairs;
    {
        StageSets hr = materialize(train_ens, task, "hr", nullptr, 0, 1, master, "srtrain", sweep);
        StageSets lr = materialize(train_ens, task, "lr", nullptr, 0, 1, master, "srtrain", sweep);
        train_pairs.hr = std::move(hr.imgs);
        train_pairs.lr = std::move(lr.imgs);
    }
    {
        StageSets hr = materialize(val_ens, task, "hr", nullptr, 0, 1, master, "srval", sweep);
        StageSets lr = materialize(val_ens, task, "lr", nullptr, 0, 1, master, "srval", sweep);
        val_pairs.hr = std::move(hr.imgs);
        val_pairs.lr = std::move(lr.imgs);
    }
    if (cfg.srcnn.patch > 0) {
        train_pairs = extract_patch_pairs(train_pairs, cfg.srcnn.patch, cfg.srcnn.patches_per_image,
                                          derive_seed(master, "srpatch/" + sweep));
        val_pairs = extract_patch_pairs(val_pairs, cfg.srcnn.patch, cfg.srcnn.patches_per_image,
                                        derive_seed(master, "srpatch-val/" + sweep));
    }
    TrainConfig tc;
    tc.learning_rate = cfg.srcnn.learning_rate;
    tc.batch_size = cfg.srcnn.batch;
    tc.epochs = cfg.srcnn.epochs;
    tc.loss = LossKind::Mse;
    tc.seed = derive_seed(master, "srcnn-train/" + sweep);
    const TrainResult res = train_sr(net, train_pairs, val_pairs, tc);
    if (history) *history = res;
    return net;
}

int eval_region(const ExperimentConfig& cfg, const Network<float>& srnet) {
    if (!cfg.study.sr_crop_region) return 0; // full images
    const int want = cfg.task.crop + 2 * conv_margin(srnet);
    return std::min({want, cfg.task.clb.width, cfg.task.clb.height});
}

ReportRow base_row(const std::string& study, const std::string& sweep, const std::string& res,
                   const std::string& obs, std::uint64_t seed) {
    ReportRow r;
    r.study = study;
    r.sweep_value = sweep;
    r.resolution = res;
    r.observer = obs;
    r.auc = qnan();
    r.ci_lo = qnan();
    r.ci_hi = qnan();
    r.mse = qnan();
    r.psnr = qnan();
    r.ssim = qnan();
    r.seed = seed;
    return r;
}

void flush_partial(const Report& report, const std::string& out_dir) {
    if (out_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    try {
        write_csv(report, out_dir + "/report_partial.csv");
    } catch (...) {
        // flushing partial results must not mask the original error
    }
}

bool wants(const ExperimentConfig& cfg, const std::string& res) {
    for (const auto& r : cfg.study.resolutions)
        if (r == res) return true;
    return false;
}

bool roster_has(const ExperimentConfig& cfg, const std::string& obs) {
    for (const auto& o : cfg.observer.roster)
        if (o == obs) return true;
    return false;
}

} // namespace

Report run_signal_length_study(const ExperimentConfig& cfg_in, std::uint64_t seed,
                               const std::string& out_dir, StudyDetails* details) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.task.kind != TaskKind::Rayleigh)
        throw std::invalid_argument("signal-length study requires task.kind = rayleigh");
    const std::string study_name = "rayleigh-length";
    Report report;

    const bool share = cfg.data.share_backgrounds;
    const int crop = cfg.task.crop;
    const GaborChannelSet gabor = gabor_channels(crop, crop);

    // background pools, shared across sweep values when configured
    std::vector<ImageGrid> bg_srtrain, bg_srval, bg_cov, bg_lval, bg_test;
    auto gen_bgs = [&](const std::string& tag) {
        const auto stage_seed = [&](const char* stage) {
            return derive_seed(seed, std::string("ensemble/") + stage + (share ? "" : "/" + tag));
        };
        bg_srtrain = generate_backgrounds(cfg.task.clb, cfg.data.sr_train, stage_seed("srtrain"));
        bg_srval = generate_backgrounds(cfg.task.clb, cfg.data.sr_val, stage_seed("srval"));
        bg_cov = generate_backgrounds(cfg.task.clb, 2 * cfg.data.cov_per_class, stage_seed("cov"));
        bg_lval = generate_backgrounds(cfg.task.clb, 2 * cfg.data.lambda_val_per_class,
                                       stage_seed("lambdaval"));
        bg_test = generate_backgrounds(cfg.task.clb, 2 * cfg.data.test_per_class, stage_seed("test"));
    };

    try {
        for (std::size_t li = 0; li < cfg.study.lengths.size(); ++li) {
            const int L = cfg.study.lengths[li];
            const std::string sweep = std::to_string(L);
            std::fprintf(stderr, "[rayleigh-length] L=%d: generating pools\n", L);
            ExperimentConfig lcfg = cfg;
            lcfg.task.rayleigh.signal_length = L;
            const TaskSpec& task = lcfg.task;

            if (bg_srtrain.empty() || !share) gen_bgs(sweep);
            const auto stage_seed = [&](const char* stage) {
                return derive_seed(seed, std::string("ensemble/") + stage + (share ? "" : "/" + sweep));
            };
            const Ensemble ens_srtrain = compose_ensemble(task, bg_srtrain, stage_seed("srtrain"));
            const Ensemble ens_srval = compose_ensemble(task, bg_srval, stage_seed("srval"));
            const Ensemble ens_cov = compose_ensemble(task, bg_cov, stage_seed("cov"));
            const Ensemble ens_lval = compose_ensemble(task, bg_lval, stage_seed("lambdaval"));
            const Ensemble ens_test = compose_ensemble(task, bg_test, stage_seed("test"));
            assert_disjoint({&ens_srtrain, &ens_srval, &ens_cov, &ens_lval, &ens_test});

            std::fprintf(stderr, "[rayleigh-length] L=%d: training SRCNN\n", L);
            const Network<float> srnet =
                train_srcnn(lcfg, ens_srtrain, ens_srval, seed, sweep, cfg.srcnn.layers);
            const int region = eval_region(lcfg, srnet);

            std::map<std::string, StageSets> test_sets, cov_sets, lval_sets;
            for (const std::string& res : cfg.study.resolutions) {
                std::fprintf(stderr, "[rayleigh-length] L=%d: materializing %s sets\n", L,
                             res.c_str());
                test_sets[res] =
                    materialize(ens_test, task, res, &srnet, region, 1, seed, "test", sweep);
                cov_sets[res] = materialize(ens_cov, task, res, &srnet, region, cfg.data.noise_reals,
                                            seed, "cov", sweep);
                lval_sets[res] =
                    materialize(ens_lval, task, res, &srnet, region, 1, seed, "lambdaval", sweep);
            }

            const bool has_hr = wants(cfg, "hr");
            const double range =
                has_hr ? ensemble_range(test_sets["hr"].imgs)
                       : ensemble_range(test_sets[cfg.study.resolutions.front()].imgs);

            for (const std::string& res : cfg.study.resolutions) {
                SweepEval ev;
                ev.iq = has_hr ? compute_iq(test_sets["hr"], test_sets[res], res, range) : IqCell{};
                if (details) details->iq[sweep + "/" + res] = ev.iq.detail;

                LinearObservers lo;
                bool linear_ok = false;
                if (roster_has(cfg, "rho") || roster_has(cfg, "cho") ||
                    (roster_has(cfg, "resnet") && cfg.observer.resnet_rho_init)) {
                    try {
                        std::fprintf(stderr, "[rayleigh-length] L=%d %s: covariance + templates\n",
                                     L, res.c_str());
                        lo = build_linear_observers(lcfg, cov_sets[res], lval_sets[res], gabor);
                        linear_ok = true;
                    } catch (const std::exception& e) {
                        std::fprintf(stderr, "[rayleigh-length] linear observers failed: %s\n",
                                     e.what());
                    }
                }

                for (const std::string& obs : cfg.observer.roster) {
                    ReportRow row = base_row(study_name, sweep, res, obs, seed);
                    row.mse = ev.iq.mse;
                    row.psnr = ev.iq.psnr;
                    row.ssim = ev.iq.ssim;
                    try {
                        RocResult rr;
                        if (obs == "rho") {
                            if (!linear_ok) throw std::runtime_error("covariance stage failed");
                            rr = score_linear_on_test(lo.rho.tmpl, test_sets[res], crop, nullptr,
                                                      cfg.ci_level);
                        } else if (obs == "cho") {
                            if (!linear_ok) throw std::runtime_error("covariance stage failed");
                            rr = score_linear_on_test(lo.cho, test_sets[res], crop, &gabor,
                                                      cfg.ci_level);
                        } else { // resnet
                            std::fprintf(stderr, "[rayleigh-length] L=%d %s: training ResNet-IO\n",
                                         L, res.c_str());
                            LearnedObserverSpec ospec;
                            ospec.n_residual_blocks = cfg.observer.resnet_blocks;
                            ospec.rho_init = cfg.observer.resnet_rho_init && linear_ok;
                            Network<float> onet = build_learned_observer(
                                ospec, ospec.rho_init ? &lo.rho.tmpl : nullptr, crop,
                                derive_seed(seed, "obsinit/" + res + "/" + sweep));
                            auto train_src = make_observer_source(
                                lcfg, ens_srtrain, static_cast<int>(ens_srtrain.size()), res, &srnet,
                                seed, "obstrain", sweep, false, cfg.observer.on_the_fly_noise);
                            auto val_src = make_observer_source(
                                lcfg, ens_lval, static_cast<int>(ens_lval.size()), res, &srnet, seed,
                                "obsval", sweep, false, false);
                            TrainConfig tc;
                            tc.learning_rate = cfg.observer.resnet_learning_rate;
                            tc.batch_size = cfg.observer.resnet_batch;
                            tc.epochs = cfg.observer.resnet_epochs;
                            tc.loss = LossKind::Bce;
                            tc.on_the_fly_noise = cfg.observer.on_the_fly_noise;
                            tc.seed = derive_seed(seed, "obstrain/" + res + "/" + sweep);
                            train(onet, *train_src, *val_src, tc);
                            rr = score_resnet_on_test(onet, test_sets[res], crop, cfg.ci_level);
                        }
                        row.auc = rr.auc;
                        row.ci_lo = rr.ci_lo;
                        row.ci_hi = rr.ci_hi;
                        if (details) details->roc[sweep + "/" + res][obs] = rr;
                    } catch (const std::exception& e) {
                        std::fprintf(stderr, "[rayleigh-length] cell (%s, %s, %s) failed: %s\n",
                                     sweep.c_str(), res.c_str(), obs.c_str(), e.what());
                    }
                    report.rows.push_back(std::move(row));
                }
            }
        }
    } catch (...) {
        flush_partial(report, out_dir);
        throw;
    }
    return report;
}

Report run_depth_study(const ExperimentConfig& cfg_in, std::uint64_t seed,
                       const std::string& out_dir, StudyDetails* details) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.task.kind != TaskKind::Rayleigh)
        throw std::invalid_argument("depth study requires task.kind = rayleigh");
    const std::string study_name = "srcnn-depth";
    (void)details;
    Report report;
    const int crop = cfg.task.crop;
    const GaborChannelSet gabor = gabor_channels(crop, crop);

    std::vector<std::pair<std::string, Eigen::VectorXd>> spectra; // (label, singular values)

    try {
        const auto stage_seed = [&](const char* stage) {
            return derive_seed(seed, std::string("ensemble/") + stage);
        };
        std::fprintf(stderr, "[srcnn-depth] generating pools\n");
        const TaskSpec& task = cfg.task;
        const Ensemble ens_srtrain = generate_ensemble(task, cfg.data.sr_train / 2, stage_seed("srtrain"));
        const Ensemble ens_srval = generate_ensemble(task, cfg.data.sr_val / 2, stage_seed("srval"));
        const Ensemble ens_cov = generate_ensemble(task, cfg.data.cov_per_class, stage_seed("cov"));
        const Ensemble ens_lval =
            generate_ensemble(task, cfg.data.lambda_val_per_class, stage_seed("lambdaval"));
        const Ensemble ens_test = generate_ensemble(task, cfg.data.test_per_class, stage_seed("test"));
        assert_disjoint({&ens_srtrain, &ens_srval, &ens_cov, &ens_lval, &ens_test});

        const std::string sweep0 = "depth";
        std::map<std::string, StageSets> base_test, base_cov, base_lval;
        for (const std::string res : {"hr", "lr"}) {
            base_test[res] = materialize(ens_test, task, res, nullptr, 0, 1, seed, "test", sweep0);
            base_cov[res] = materialize(ens_cov, task, res, nullptr, 0, 1, seed, "cov", sweep0);
            base_lval[res] =
                materialize(ens_lval, task, res, nullptr, 0, 1, seed, "lambdaval", sweep0);
        }
        const double range = ensemble_range(base_test["hr"].imgs);

        // depth-independent LR (and HR) baseline rows
        for (const std::string res : {"hr", "lr"}) {
            if (!wants(cfg, res)) continue;
            const LinearObservers lo =
                build_linear_observers(cfg, base_cov[res], base_lval[res], gabor);
            const IqCell iq = compute_iq(base_test["hr"], base_test[res], res, range);
            for (const std::string& obs : cfg.observer.roster) {
                if (obs != "rho" && obs != "cho") continue;
                ReportRow row = base_row(study_name, res, res, obs, seed);
                row.mse = iq.mse;
                row.psnr = iq.psnr;
                row.ssim = iq.ssim;
                const RocResult rr =
                    obs == "rho"
                        ? score_linear_on_test(lo.rho.tmpl, base_test[res], crop, nullptr, cfg.ci_level)
                        : score_linear_on_test(lo.cho, base_test[res], crop, &gabor, cfg.ci_level);
                row.auc = rr.auc;
                row.ci_lo = rr.ci_lo;
                row.ci_hi = rr.ci_hi;
                report.rows.push_back(std::move(row));
            }
        }

        for (const int depth : cfg.study.depths) {
            const std::string sweep = std::to_string(depth);
            std::fprintf(stderr, "[srcnn-depth] depth=%d: training SRCNN\n", depth);
            TrainResult hist;
            const Network<float> srnet =
                train_srcnn(cfg, ens_srtrain, ens_srval, seed, sweep, depth, &hist);
            const int region = eval_region(cfg, srnet);

            const StageSets sr_test =
                materialize(ens_test, task, "sr", &srnet, region, 1, seed, "test", sweep0);
            const StageSets sr_cov =
                materialize(ens_cov, task, "sr", &srnet, region, 1, seed, "cov", sweep0);
            const StageSets sr_lval =
                materialize(ens_lval, task, "sr", &srnet, region, 1, seed, "lambdaval", sweep0);
            const StageSets hr_test =
                region > 0
                    ? StageSets{crop_all(base_test["hr"].imgs, region), base_test["hr"].labels}
                    : base_test["hr"];

            const IqCell iq = compute_iq(hr_test, sr_test, "sr", range);
            LinearObservers lo = build_linear_observers(cfg, sr_cov, sr_lval, gabor);

            spectra.emplace_back(sweep + ",image", lo.stats.sigma);
            {
                Eigen::MatrixXd c0, c1;
                split_by_label(sr_cov, crop, c0, c1);
                const CovarianceEstimate ch = CovarianceEstimate::estimate(
                    channelize_rows(gabor, c0), channelize_rows(gabor, c1));
                spectra.emplace_back(sweep + ",channel", ch.sigma);
            }

            for (const std::string& obs : cfg.observer.roster) {
                if (obs != "rho" && obs != "cho") continue;
                ReportRow row = base_row(study_name, sweep, "sr", obs, seed);
                row.mse = iq.mse;
                row.psnr = iq.psnr;
                row.ssim = iq.ssim;
                try {
                    const RocResult rr =
                        obs == "rho"
                            ? score_linear_on_test(lo.rho.tmpl, sr_test, crop, nullptr, cfg.ci_level)
                            : score_linear_on_test(lo.cho, sr_test, crop, &gabor, cfg.ci_level);
                    row.auc = rr.auc;
                    row.ci_lo = rr.ci_lo;
                    row.ci_hi = rr.ci_hi;
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "[srcnn-depth] cell (%s, sr, %s) failed: %s\n",
                                 sweep.c_str(), obs.c_str(), e.what());
                }
                report.rows.push_back(std::move(row));
            }
        }

        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            std::ofstream sp(out_dir + "/spectra.csv", std::ios::binary);
            sp << "depth,space,index,value\n";
            char buf[64];
            for (const auto& [label, sig] : spectra)
                for (Eigen::Index i = 0; i < sig.size(); ++i) {
                    std::snprintf(buf, sizeof(buf), "%.17g", sig[i]);
                    sp << label << ',' << i << ',' << buf << '\n';
                }
        }
    } catch (...) {
        flush_partial(report, out_dir);
        throw;
    }
    return report;
}

Report run_capacity_study(const ExperimentConfig& cfg_in, std::uint64_t seed,
                          const std::string& out_dir, StudyDetails* details) {
    ExperimentConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.task.kind != TaskKind::McCluster)
        throw std::invalid_argument("capacity study requires task.kind = mc");
    const std::string study_name = "mc-capacity";
    Report report;
    const int crop = cfg.task.crop;
    const TaskSpec& task = cfg.task;

    int max_size = 0;
    for (int s : cfg.study.sizes) max_size = std::max(max_size, s);

    try {
        for (const std::uint64_t rep : cfg.study.seeds) {
            const std::uint64_t ms = derive_seed(seed, "replicate", rep);
            const std::string sweep_tag = "rep" + std::to_string(rep);
            std::fprintf(stderr, "[mc-capacity] seed %llu: generating pools\n",
                         static_cast<unsigned long long>(rep));

            const std::vector<ImageGrid> mc_lib =
                make_mc_library(task.mc, derive_seed(ms, "mc-library-master"));
            const auto pool = [&](const char* stage, int total) {
                return compose_ensemble(
                    task, generate_backgrounds(task.clb, total, derive_seed(ms, std::string("ensemble/") + stage)),
                    derive_seed(ms, std::string("ensemble/") + stage), &mc_lib);
            };
            const Ensemble ens_srtrain = pool("srtrain", cfg.data.sr_train);
            const Ensemble ens_srval = pool("srval", cfg.data.sr_val);
            const Ensemble ens_obs = pool("obstrain", max_size);
            const Ensemble ens_obsval = pool("obsval", 2 * cfg.data.lambda_val_per_class);
            const Ensemble ens_test = pool("test", 2 * cfg.data.test_per_class);
            assert_disjoint({&ens_srtrain, &ens_srval, &ens_obs, &ens_obsval, &ens_test});

            std::fprintf(stderr, "[mc-capacity] seed %llu: training SRCNN\n",
                         static_cast<unsigned long long>(rep));
            const Network<float> srnet =
                train_srcnn(cfg, ens_srtrain, ens_srval, ms, sweep_tag, cfg.srcnn.layers);
            const int region = eval_region(cfg, srnet);

            std::map<std::string, StageSets> test_sets;
            for (const std::string& res : cfg.study.resolutions)
                test_sets[res] = materialize(ens_test, task, res, &srnet, region, 1, ms, "test",
                                             sweep_tag);
            const bool has_hr = wants(cfg, "hr");
            StageSets hr_test = has_hr ? test_sets["hr"]
                                       : materialize(ens_test, task, "hr", &srnet, region, 1, ms,
                                                     "test", sweep_tag);
            const double range = ensemble_range(hr_test.imgs);

            for (const std::string& res : cfg.study.resolutions) {
                const IqCell iq = compute_iq(hr_test, test_sets[res], res, range);
                if (details) details->iq["rep" + std::to_string(rep) + "/" + res] = iq.detail;

                auto val_src =
                    make_observer_source(cfg, ens_obsval, static_cast<int>(ens_obsval.size()), res,
                                         &srnet, ms, "obsval", sweep_tag, false, false);

                for (const int blocks : cfg.study.blocks) {
                    for (const int size : cfg.study.sizes) {
                        const std::string sweep =
                            "b" + std::to_string(blocks) + "_n" + std::to_string(size);
                        ReportRow row = base_row(study_name, sweep, res, "resnet", rep);
                        row.mse = iq.mse;
                        row.psnr = iq.psnr;
                        row.ssim = iq.ssim;
                        try {
                            std::fprintf(stderr, "[mc-capacity] seed %llu %s %s: training observer\n",
                                         static_cast<unsigned long long>(rep), res.c_str(),
                                         sweep.c_str());
                            LearnedObserverSpec ospec;
                            ospec.n_residual_blocks = blocks;
                            ospec.rho_init = false;
                            Network<float> onet = build_learned_observer(
                                ospec, nullptr, crop,
                                derive_seed(ms, "obsinit/" + res + "/" + sweep));
                            // a balanced prefix of the pool, 4-fold flip augmented
                            auto train_src = make_observer_source(cfg, ens_obs, size, res, &srnet,
                                                                  ms, "obstrain", sweep_tag, true,
                                                                  cfg.observer.on_the_fly_noise);
                            TrainConfig tc;
                            tc.learning_rate = cfg.observer.resnet_learning_rate;
                            tc.batch_size = cfg.observer.resnet_batch;
                            tc.epochs = cfg.observer.resnet_epochs;
                            tc.loss = LossKind::Bce;
                            tc.seed = derive_seed(ms, "obstrain/" + res + "/" + sweep);
                            train(onet, *train_src, *val_src, tc);
                            const RocResult rr =
                                score_resnet_on_test(onet, test_sets[res], crop, cfg.ci_level);
                            row.auc = rr.auc;
                            row.ci_lo = rr.ci_lo;
                            row.ci_hi = rr.ci_hi;
                            if (details)
                                details->roc["rep" + std::to_string(rep) + "/" + sweep + "/" + res]
                                            ["resnet"] = rr;
                        } catch (const std::exception& e) {
                            std::fprintf(stderr, "[mc-capacity] cell (%s, %s) failed: %s\n",
                                         sweep.c_str(), res.c_str(), e.what());
                        }
                        report.rows.push_back(std::move(row));
                    }
                }
            }
        }
    } catch (...) {
        flush_partial(report, out_dir);
        throw;
    }
    return report;
}

Report run_study(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& out_dir) {
    Report report;
    switch (cfg.study.kind) {
    case StudyKind::RayleighLength: report = run_signal_length_study(cfg, seed, out_dir); break;
    case StudyKind::SrcnnDepth: report = run_depth_study(cfg, seed, out_dir); break;
    case StudyKind::McCapacity: report = run_capacity_study(cfg, seed, out_dir); break;
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_config(out_dir + "/config.ini", cfg);
        write_csv(report, out_dir + "/report.csv");
        emit_plot(report, out_dir + "/plot.svg");
    }
    return report;
}

} // namespace tbiq
