#include "tbiq.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <omp.h>

#include "core/config.hpp"
#include "core/dataset_io.hpp"
#include "core/learned.hpp"
#include "core/metrics.hpp"
#include "core/observers.hpp"
#include "core/rng.hpp"
#include "core/roc.hpp"
#include "core/srcnn.hpp"
#include "core/stats.hpp"
#include "core/study.hpp"

extern "C" void openblas_set_num_threads(int);

namespace {

thread_local std::string g_last_error;

tbiq_status fail(tbiq_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
tbiq_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const tbiq::ConfigError& e) {
        return fail(TBIQ_ERR_INVALID, e.what());
    } catch (const tbiq::IllConditionedError& e) {
        return fail(TBIQ_ERR_NUMERIC, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(TBIQ_ERR_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(TBIQ_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(TBIQ_ERR_INTERNAL, "unknown error");
    }
}

} // namespace

struct tbiq_config {
    tbiq::ExperimentConfig cfg;
};
struct tbiq_image {
    tbiq::ImageGrid img;
};
struct tbiq_dataset {
    tbiq::LabeledDataset data;
};
struct tbiq_network {
    tbiq::Network<float> net;
};

extern "C" {

const char* tbiq_last_error(void) { return g_last_error.c_str(); }

const char* tbiq_version(void) { return "1.0.0"; }

void tbiq_set_threads(int n) {
    if (n < 1) n = 1;
    openblas_set_num_threads(n);
    omp_set_num_threads(n);
}

/* ---- configuration ---------------------------------------------------- */

tbiq_status tbiq_config_load(const char* path, tbiq_config** out) {
    if (!path || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_config{tbiq::parse_config(path)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_config_parse(const char* text, tbiq_config** out) {
    if (!text || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_config{tbiq::parse_config_text(text)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_config_default(const char* task_kind, tbiq_config** out) {
    if (!task_kind || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const std::string kind = task_kind;
        tbiq::ExperimentConfig cfg;
        if (kind == "rayleigh") {
            // defaults already describe the Rayleigh task
        } else if (kind == "mc") {
            cfg.task.kind = tbiq::TaskKind::McCluster;
            cfg.task.degradation.downsample_factor = 2;
            cfg.task.degradation.upsample_after = true;
            cfg.task.degradation.noise.sigma_p = 1e-4;
            cfg.task.degradation.noise.sigma_g = 1e-3;
            cfg.study.kind = tbiq::StudyKind::McCapacity;
            cfg.observer.roster = {"resnet"};
            cfg.observer.resnet_rho_init = false;
            cfg.observer.on_the_fly_noise = false;
        } else {
            throw std::invalid_argument("task kind must be rayleigh or mc");
        }
        cfg.validate();
        *out = new tbiq_config{std::move(cfg)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_config_emit(const tbiq_config* cfg, char** text_out) {
    if (!cfg || !text_out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const std::string s = tbiq::emit_config(cfg->cfg);
        *text_out = static_cast<char*>(std::malloc(s.size() + 1));
        if (!*text_out) throw std::bad_alloc();
        std::memcpy(*text_out, s.c_str(), s.size() + 1);
        return TBIQ_OK;
    });
}

tbiq_status tbiq_config_set(tbiq_config* cfg, const char* section_key, const char* value) {
    if (!cfg || !section_key || !value) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const std::string sk = section_key;
        const std::size_t dot = sk.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == sk.size())
            throw std::invalid_argument("expected section.key, got " + sk);
        const std::string section = sk.substr(0, dot);
        const std::string key = sk.substr(dot + 1);

        // rewrite the canonical emitted text (it contains every key) and reparse
        std::istringstream in(tbiq::emit_config(cfg->cfg));
        std::ostringstream out;
        std::string line, cur;
        bool replaced = false;
        while (std::getline(in, line)) {
            if (!line.empty() && line.front() == '[')
                cur = line.substr(1, line.size() - 2);
            else if (cur == section && line.rfind(key + " =", 0) == 0) {
                out << key << " = " << value << "\n";
                replaced = true;
                continue;
            }
            out << line << "\n";
        }
        if (!replaced) throw std::invalid_argument("unknown config entry " + sk);
        cfg->cfg = tbiq::parse_config_text(out.str());
        return TBIQ_OK;
    });
}

void tbiq_config_free(tbiq_config* cfg) { delete cfg; }
void tbiq_string_free(char* s) { std::free(s); }

/* ---- images ----------------------------------------------------------- */

tbiq_status tbiq_image_create(int width, int height, tbiq_image** out) {
    if (!out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_image{tbiq::ImageGrid(width, height)};
        return TBIQ_OK;
    });
}

void tbiq_image_free(tbiq_image* img) { delete img; }
int tbiq_image_width(const tbiq_image* img) { return img ? img->img.width : 0; }
int tbiq_image_height(const tbiq_image* img) { return img ? img->img.height : 0; }
float* tbiq_image_data(tbiq_image* img) { return img ? img->img.values.data() : nullptr; }
const float* tbiq_image_data_const(const tbiq_image* img) {
    return img ? img->img.values.data() : nullptr;
}

tbiq_status tbiq_generate_clb(const tbiq_config* cfg, uint64_t seed, tbiq_image** out) {
    if (!cfg || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_image{tbiq::generate_clb(cfg->cfg.task.clb, seed)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_rayleigh_signal(const tbiq_config* cfg, int hypothesis, tbiq_image** out) {
    if (!cfg || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        tbiq::RayleighSignalSpec spec = cfg->cfg.task.rayleigh;
        spec.hypothesis =
            hypothesis == 0 ? tbiq::RayleighHypothesis::PairH0 : tbiq::RayleighHypothesis::LineH1;
        *out = new tbiq_image{
            tbiq::make_rayleigh_signal(spec, cfg->cfg.task.clb.width, cfg->cfg.task.clb.height)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_degrade_image(const tbiq_config* cfg, const tbiq_image* in, uint64_t seed,
                               tbiq_image** out) {
    if (!cfg || !in || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_image{tbiq::degrade(in->img, cfg->cfg.task.degradation, seed)};
        return TBIQ_OK;
    });
}

/* ---- datasets ----------------------------------------------------------- */

tbiq_status tbiq_dataset_generate(const tbiq_config* cfg, int n_per_class, uint64_t seed,
                                  tbiq_dataset** out) {
    if (!cfg || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const tbiq::Ensemble ens = tbiq::generate_ensemble(cfg->cfg.task, n_per_class, seed);
        auto* ds = new tbiq_dataset;
        ds->data.images = ens.images;
        ds->data.labels = ens.labels;
        *out = ds;
        return TBIQ_OK;
    });
}

tbiq_status tbiq_dataset_save(const tbiq_dataset* ds, const char* path) {
    if (!ds || !path) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        tbiq::save_dataset(path, ds->data.images, ds->data.labels);
        return TBIQ_OK;
    });
}

tbiq_status tbiq_dataset_load(const char* path, tbiq_dataset** out) {
    if (!path || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    const tbiq_status s = guarded([&] {
        *out = new tbiq_dataset{tbiq::load_dataset(path)};
        return TBIQ_OK;
    });
    return s == TBIQ_ERR_INTERNAL ? fail(TBIQ_ERR_IO, g_last_error) : s;
}

size_t tbiq_dataset_count(const tbiq_dataset* ds) { return ds ? ds->data.images.size() : 0; }

int tbiq_dataset_label(const tbiq_dataset* ds, size_t index) {
    if (!ds || index >= ds->data.labels.size()) return -1;
    return ds->data.labels[index];
}

tbiq_status tbiq_dataset_image(const tbiq_dataset* ds, size_t index, tbiq_image** out) {
    if (!ds || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    if (index >= ds->data.images.size()) return fail(TBIQ_ERR_INVALID, "index out of range");
    return guarded([&] {
        *out = new tbiq_image{ds->data.images[index]};
        return TBIQ_OK;
    });
}

void tbiq_dataset_free(tbiq_dataset* ds) { delete ds; }

/* ---- networks ----------------------------------------------------------- */

tbiq_status tbiq_network_load(const char* path, tbiq_network** out) {
    if (!path || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    const tbiq_status s = guarded([&] {
        *out = new tbiq_network{tbiq::load_network(path)};
        return TBIQ_OK;
    });
    return s == TBIQ_ERR_INTERNAL ? fail(TBIQ_ERR_IO, g_last_error) : s;
}

tbiq_status tbiq_network_save(const tbiq_network* net, const char* path) {
    if (!net || !path) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        tbiq::save_network(path, net->net);
        return TBIQ_OK;
    });
}

void tbiq_network_free(tbiq_network* net) { delete net; }

size_t tbiq_network_param_count(const tbiq_network* net) {
    return net ? net->net.param_count() : 0;
}

tbiq_status tbiq_super_resolve(const tbiq_network* net, const tbiq_image* in, tbiq_image** out) {
    if (!net || !in || !out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = new tbiq_image{tbiq::super_resolve(net->net, in->img)};
        return TBIQ_OK;
    });
}

tbiq_status tbiq_score_learned(const tbiq_network* net, const tbiq_image* in, double* score) {
    if (!net || !in || !score) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *score = tbiq::score_learned(net->net, in->img);
        return TBIQ_OK;
    });
}

/* ---- evaluation primitives ----------------------------------------------- */

tbiq_status tbiq_auc(const double* scores0, size_t n0, const double* scores1, size_t n1,
                     double* auc_out) {
    if (!scores0 || !scores1 || !auc_out) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        *auc_out = tbiq::auc_point(std::vector<double>(scores0, scores0 + n0),
                                   std::vector<double>(scores1, scores1 + n1));
        return TBIQ_OK;
    });
}

tbiq_status tbiq_delong_ci(const double* scores0, size_t n0, const double* scores1, size_t n1,
                           double level, double* auc_out, double* variance_out, double* ci_lo_out,
                           double* ci_hi_out) {
    if (!scores0 || !scores1) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const tbiq::RocResult r = tbiq::delong_ci(std::vector<double>(scores0, scores0 + n0),
                                                  std::vector<double>(scores1, scores1 + n1), level);
        if (auc_out) *auc_out = r.auc;
        if (variance_out) *variance_out = r.delong_variance;
        if (ci_lo_out) *ci_lo_out = r.ci_lo;
        if (ci_hi_out) *ci_hi_out = r.ci_hi;
        return TBIQ_OK;
    });
}

tbiq_status tbiq_iq_metrics(const tbiq_image* ref, const tbiq_image* test, double data_range,
                            double* mse, double* psnr, double* ssim) {
    if (!ref || !test) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const tbiq::IqSample s = tbiq::iq_metrics(ref->img, test->img, data_range);
        if (mse) *mse = s.mse;
        if (psnr) *psnr = s.psnr;
        if (ssim) *ssim = s.ssim;
        return TBIQ_OK;
    });
}

/* ---- pipeline entry points ------------------------------------------------ */

} // extern "C"

namespace {

using tbiq::Ensemble;
using tbiq::ExperimentConfig;
using tbiq::ImageGrid;

struct StageFiles {
    std::string name;
    int total; // images incl. both classes
};

std::vector<StageFiles> stage_plan(const ExperimentConfig& cfg) {
    return {
        {"train", cfg.data.sr_train},
        {"val", cfg.data.sr_val},
        {"cov", 2 * cfg.data.cov_per_class},
        {"lambda", 2 * cfg.data.lambda_val_per_class},
        {"test", 2 * cfg.data.test_per_class},
    };
}

std::uint64_t stage_noise_seed(std::uint64_t seed, const std::string& stage, const char* res,
                               int index) {
    return tbiq::derive_seed(seed, "cli-noise/" + stage + "/" + res, index);
}

void write_stage(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                 const StageFiles& st) {
    const Ensemble ens = tbiq::generate_ensemble(cfg.task, st.total / 2,
                                                 tbiq::derive_seed(seed, "ensemble/" + st.name));
    std::vector<ImageGrid> hr(ens.size()), lr(ens.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < static_cast<int>(ens.size()); ++i) {
        hr[i] = tbiq::apply_noise(ens.images[i], cfg.task.degradation.noise,
                                  stage_noise_seed(seed, st.name, "hr", i));
        lr[i] = tbiq::degrade(ens.images[i], cfg.task.degradation,
                              stage_noise_seed(seed, st.name, "lr", i));
    }
    tbiq::save_dataset(dir + "/" + st.name + "_hr.tbiq", hr, ens.labels);
    tbiq::save_dataset(dir + "/" + st.name + "_lr.tbiq", lr, ens.labels);
}

tbiq::LabeledDataset load_stage(const std::string& dir, const std::string& stage,
                                const std::string& res) {
    return tbiq::load_dataset(dir + "/" + stage + "_" + res + ".tbiq");
}

std::vector<ImageGrid> stage_resolution_images(const std::string& dir, const std::string& stage,
                                               const std::string& res,
                                               const tbiq::Network<float>* srnet,
                                               std::vector<int>* labels_out) {
    if (res == "sr") {
        if (!srnet) throw std::runtime_error("sr resolution requires srcnn.olnn");
        tbiq::LabeledDataset lr = load_stage(dir, stage, "lr");
        std::vector<ImageGrid> out(lr.images.size());
#pragma omp parallel for schedule(dynamic, 4)
        for (int i = 0; i < static_cast<int>(lr.images.size()); ++i)
            out[i] = tbiq::super_resolve(*srnet, lr.images[i]);
        if (labels_out) *labels_out = lr.labels;
        return out;
    }
    tbiq::LabeledDataset ds = load_stage(dir, stage, res);
    if (labels_out) *labels_out = ds.labels;
    return ds.images;
}

void split_crops(const std::vector<ImageGrid>& imgs, const std::vector<int>& labels, int crop,
                 Eigen::MatrixXd& m0, Eigen::MatrixXd& m1) {
    std::vector<ImageGrid> c0, c1;
    for (std::size_t i = 0; i < imgs.size(); ++i)
        (labels[i] == 0 ? c0 : c1).push_back(tbiq::central_crop(imgs[i], crop, crop));
    m0 = tbiq::crops_as_rows(c0, crop);
    m1 = tbiq::crops_as_rows(c1, crop);
}

} // namespace

extern "C" {

tbiq_status tbiq_gen(const tbiq_config* cfg, uint64_t seed, const char* out_dir) {
    if (!cfg || !out_dir) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        cfg->cfg.validate();
        std::filesystem::create_directories(out_dir);
        for (const StageFiles& st : stage_plan(cfg->cfg)) write_stage(cfg->cfg, seed, out_dir, st);
        return TBIQ_OK;
    });
}

tbiq_status tbiq_train_sr(const tbiq_config* cfg, uint64_t seed, const char* out_dir) {
    if (!cfg || !out_dir) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const ExperimentConfig& c = cfg->cfg;
        c.validate();
        const std::string dir = out_dir;
        tbiq::SrPairs train_pairs, val_pairs;
        {
            tbiq::LabeledDataset h = load_stage(dir, "train", "hr");
            tbiq::LabeledDataset l = load_stage(dir, "train", "lr");
            train_pairs.hr = std::move(h.images);
            train_pairs.lr = std::move(l.images);
        }
        {
            tbiq::LabeledDataset h = load_stage(dir, "val", "hr");
            tbiq::LabeledDataset l = load_stage(dir, "val", "lr");
            val_pairs.hr = std::move(h.images);
            val_pairs.lr = std::move(l.images);
        }
        if (c.srcnn.patch > 0) {
            train_pairs = tbiq::extract_patch_pairs(train_pairs, c.srcnn.patch,
                                                    c.srcnn.patches_per_image,
                                                    tbiq::derive_seed(seed, "cli-srpatch"));
            val_pairs = tbiq::extract_patch_pairs(val_pairs, c.srcnn.patch, c.srcnn.patches_per_image,
                                                  tbiq::derive_seed(seed, "cli-srpatch-val"));
        }
        tbiq::SrcnnSpec spec;
        spec.n_layers = c.srcnn.layers;
        tbiq::Network<float> net = tbiq::build_srcnn(spec, tbiq::derive_seed(seed, "cli-srcnn-init"));
        tbiq::TrainConfig tc;
        tc.learning_rate = c.srcnn.learning_rate;
        tc.batch_size = c.srcnn.batch;
        tc.epochs = c.srcnn.epochs;
        tc.loss = tbiq::LossKind::Mse;
        tc.seed = tbiq::derive_seed(seed, "cli-srcnn-train");
        const tbiq::TrainResult res = tbiq::train_sr(net, train_pairs, val_pairs, tc);
        tbiq::save_network(dir + "/srcnn.olnn", net);
        std::ofstream hist(dir + "/sr_history.csv", std::ios::binary);
        hist << "epoch,train_loss,val_loss\n";
        char buf[96];
        for (std::size_t e = 0; e < res.train_loss.size(); ++e) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e, res.train_loss[e],
                          res.val_loss[e]);
            hist << buf;
        }
        return TBIQ_OK;
    });
}

tbiq_status tbiq_train_observer(const tbiq_config* cfg, uint64_t seed, const char* resolution,
                                const char* out_dir) {
    if (!cfg || !resolution || !out_dir) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const ExperimentConfig& c = cfg->cfg;
        c.validate();
        const std::string res = resolution, dir = out_dir;
        if (res != "hr" && res != "lr" && res != "sr")
            throw std::invalid_argument("resolution must be hr, lr or sr");
        tbiq::Network<float> srnet;
        const bool need_sr = res == "sr";
        if (need_sr) srnet = tbiq::load_network(dir + "/srcnn.olnn");

        std::vector<int> train_labels, val_labels;
        std::vector<ImageGrid> train_imgs =
            stage_resolution_images(dir, "train", res, need_sr ? &srnet : nullptr, &train_labels);
        std::vector<ImageGrid> val_imgs =
            stage_resolution_images(dir, "val", res, need_sr ? &srnet : nullptr, &val_labels);
        const int crop = c.task.crop;
        for (auto& img : train_imgs) img = tbiq::central_crop(img, crop, crop);
        for (auto& img : val_imgs) img = tbiq::central_crop(img, crop, crop);

        tbiq::LearnedObserverSpec spec;
        spec.n_residual_blocks = c.observer.resnet_blocks;
        spec.rho_init = false; // file-based flow trains from random init
        tbiq::Network<float> net = tbiq::build_learned_observer(
            spec, nullptr, crop, tbiq::derive_seed(seed, "cli-obs-init/" + res));

        const bool flip4 = c.task.kind == tbiq::TaskKind::McCluster;
        tbiq::LabeledImageSource train_src(train_imgs, train_labels, flip4);
        tbiq::LabeledImageSource val_src(val_imgs, val_labels, false);
        tbiq::TrainConfig tc;
        tc.learning_rate = c.observer.resnet_learning_rate;
        tc.batch_size = c.observer.resnet_batch;
        tc.epochs = c.observer.resnet_epochs;
        tc.loss = tbiq::LossKind::Bce;
        tc.seed = tbiq::derive_seed(seed, "cli-obs-train/" + res);
        tbiq::train(net, train_src, val_src, tc);
        tbiq::save_network(dir + "/observer_" + res + ".olnn", net);
        return TBIQ_OK;
    });
}

tbiq_status tbiq_eval(const tbiq_config* cfg, uint64_t seed, const char* out_dir) {
    if (!cfg || !out_dir) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        const ExperimentConfig& c = cfg->cfg;
        c.validate();
        const std::string dir = out_dir;
        const int crop = c.task.crop;
        const tbiq::GaborChannelSet gabor = tbiq::gabor_channels(crop, crop);

        tbiq::Network<float> srnet;
        bool have_sr = false;
        for (const auto& r : c.study.resolutions) have_sr |= r == "sr";
        if (have_sr) srnet = tbiq::load_network(dir + "/srcnn.olnn");

        std::vector<int> hr_test_labels;
        const std::vector<ImageGrid> hr_test =
            stage_resolution_images(dir, "test", "hr", nullptr, &hr_test_labels);
        const double range = tbiq::ensemble_range(hr_test);

        tbiq::Report report;
        for (const std::string& res : c.study.resolutions) {
            std::vector<int> cov_labels, lam_labels, test_labels;
            const tbiq::Network<float>* np = res == "sr" ? &srnet : nullptr;
            const std::vector<ImageGrid> cov = stage_resolution_images(dir, "cov", res, np, &cov_labels);
            const std::vector<ImageGrid> lam =
                stage_resolution_images(dir, "lambda", res, np, &lam_labels);
            const std::vector<ImageGrid> test =
                stage_resolution_images(dir, "test", res, np, &test_labels);

            double mse = std::nan(""), psnr = std::nan(""), ssim_v = std::nan("");
            if (res == "hr") {
                mse = 0.0;
                psnr = std::numeric_limits<double>::infinity();
                ssim_v = 1.0;
            } else {
                const tbiq::IqReport iq = tbiq::iq_report(hr_test, test, range);
                mse = iq.ensemble_mse;
                psnr = iq.mean_psnr;
                ssim_v = iq.mean_ssim;
            }

            Eigen::MatrixXd c0, c1, l0, l1, t0, t1;
            split_crops(cov, cov_labels, crop, c0, c1);
            split_crops(lam, lam_labels, crop, l0, l1);
            split_crops(test, test_labels, crop, t0, t1);
            const tbiq::CovarianceEstimate stats = tbiq::CovarianceEstimate::estimate(c0, c1);

            for (const std::string& obs : c.observer.roster) {
                tbiq::ReportRow row;
                row.study = "eval";
                row.sweep_value = "-";
                row.resolution = res;
                row.observer = obs;
                row.seed = seed;
                row.mse = mse;
                row.psnr = psnr;
                row.ssim = ssim_v;
                row.auc = row.ci_lo = row.ci_hi = std::nan("");
                try {
                    tbiq::RocResult rr;
                    if (obs == "rho") {
                        const auto grid = tbiq::log_grid(c.observer.rho_lambda_lo,
                                                         c.observer.rho_lambda_hi,
                                                         c.observer.rho_points_per_decade);
                        const tbiq::RhoSelection sel = tbiq::select_rho_lambda(stats, l0, l1, grid);
                        rr = tbiq::delong_ci(tbiq::score_rows(sel.tmpl, t0),
                                             tbiq::score_rows(sel.tmpl, t1), c.ci_level);
                    } else if (obs == "cho") {
                        const tbiq::CovarianceEstimate ch = tbiq::CovarianceEstimate::estimate(
                            tbiq::channelize_rows(gabor, c0), tbiq::channelize_rows(gabor, c1));
                        const tbiq::LinearTemplate cho = tbiq::cho_template(ch);
                        rr = tbiq::delong_ci(tbiq::score_rows(cho, tbiq::channelize_rows(gabor, t0)),
                                             tbiq::score_rows(cho, tbiq::channelize_rows(gabor, t1)),
                                             c.ci_level);
                    } else {
                        const std::string ckpt = dir + "/observer_" + res + ".olnn";
                        if (!std::filesystem::exists(ckpt))
                            throw std::runtime_error("missing " + ckpt);
                        const tbiq::Network<float> onet = tbiq::load_network(ckpt);
                        std::vector<ImageGrid> crops0, crops1;
                        for (std::size_t i = 0; i < test.size(); ++i)
                            (test_labels[i] == 0 ? crops0 : crops1)
                                .push_back(tbiq::central_crop(test[i], crop, crop));
                        rr = tbiq::delong_ci(tbiq::score_learned_many(onet, crops0),
                                             tbiq::score_learned_many(onet, crops1), c.ci_level);
                    }
                    row.auc = rr.auc;
                    row.ci_lo = rr.ci_lo;
                    row.ci_hi = rr.ci_hi;
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "[eval] cell (%s, %s) failed: %s\n", res.c_str(),
                                 obs.c_str(), e.what());
                }
                report.rows.push_back(std::move(row));
            }
        }
        tbiq::write_csv(report, dir + "/eval.csv");
        return TBIQ_OK;
    });
}

tbiq_status tbiq_run_study(const tbiq_config* cfg, uint64_t seed, const char* out_dir) {
    if (!cfg || !out_dir) return fail(TBIQ_ERR_INVALID, "null argument");
    return guarded([&] {
        tbiq::run_study(cfg->cfg, seed, out_dir);
        return TBIQ_OK;
    });
}

} // extern "C"
