/* tbiq — task-based image quality assessment toolkit.
 *
 * C API over the simulation, network-training and observer-evaluation core.
 * All functions return TBIQ_OK (0) on success; on failure they return a
 * status code and tbiq_last_error() carries a thread-local message. Objects
 * are opaque handles released with their matching *_free function.
 */
#ifndef TBIQ_H
#define TBIQ_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tbiq_status {
    TBIQ_OK = 0,
    TBIQ_ERR_INVALID = 1,  /* bad arguments or config validation failure */
    TBIQ_ERR_IO = 2,       /* file I/O or file format problems */
    TBIQ_ERR_NUMERIC = 3,  /* divergence, ill-conditioning */
    TBIQ_ERR_INTERNAL = 4
} tbiq_status;

const char* tbiq_last_error(void);
const char* tbiq_version(void);

/* Sets BLAS and generation thread counts (also honored by studies). */
void tbiq_set_threads(int n);

typedef struct tbiq_config tbiq_config;
typedef struct tbiq_image tbiq_image;
typedef struct tbiq_dataset tbiq_dataset;
typedef struct tbiq_network tbiq_network;

/* ---- configuration ---------------------------------------------------- */

tbiq_status tbiq_config_load(const char* path, tbiq_config** out);
tbiq_status tbiq_config_parse(const char* text, tbiq_config** out);
/* task_kind: "rayleigh" or "mc"; returns the built-in defaults for it */
tbiq_status tbiq_config_default(const char* task_kind, tbiq_config** out);
/* canonical text form; free with tbiq_string_free */
tbiq_status tbiq_config_emit(const tbiq_config* cfg, char** text_out);
/* override one value, addressed as "section.key" (e.g. "study.kind") */
tbiq_status tbiq_config_set(tbiq_config* cfg, const char* section_key, const char* value);
void tbiq_config_free(tbiq_config* cfg);
void tbiq_string_free(char* s);

/* ---- images ----------------------------------------------------------- */

tbiq_status tbiq_image_create(int width, int height, tbiq_image** out);
void tbiq_image_free(tbiq_image* img);
int tbiq_image_width(const tbiq_image* img);
int tbiq_image_height(const tbiq_image* img);
/* row-major float pixels, width*height entries, owned by the image */
float* tbiq_image_data(tbiq_image* img);
const float* tbiq_image_data_const(const tbiq_image* img);

/* clustered lumpy background with the config's CLB parameters */
tbiq_status tbiq_generate_clb(const tbiq_config* cfg, uint64_t seed, tbiq_image** out);
/* hypothesis: 0 = point pair (H0), 1 = line (H1); signal-only image */
tbiq_status tbiq_rayleigh_signal(const tbiq_config* cfg, int hypothesis, tbiq_image** out);
/* blur -> optional downsample -> noise -> optional upsample per config */
tbiq_status tbiq_degrade_image(const tbiq_config* cfg, const tbiq_image* in, uint64_t seed,
                               tbiq_image** out);

/* ---- datasets (file format: magic TBIQ, f32 little-endian payload) ----- */

/* class-balanced noise-free composites for the config's task */
tbiq_status tbiq_dataset_generate(const tbiq_config* cfg, int n_per_class, uint64_t seed,
                                  tbiq_dataset** out);
tbiq_status tbiq_dataset_save(const tbiq_dataset* ds, const char* path);
tbiq_status tbiq_dataset_load(const char* path, tbiq_dataset** out);
size_t tbiq_dataset_count(const tbiq_dataset* ds);
int tbiq_dataset_label(const tbiq_dataset* ds, size_t index);
tbiq_status tbiq_dataset_image(const tbiq_dataset* ds, size_t index, tbiq_image** out);
void tbiq_dataset_free(tbiq_dataset* ds);

/* ---- networks (checkpoint format: magic OLNN) -------------------------- */

tbiq_status tbiq_network_load(const char* path, tbiq_network** out);
tbiq_status tbiq_network_save(const tbiq_network* net, const char* path);
void tbiq_network_free(tbiq_network* net);
size_t tbiq_network_param_count(const tbiq_network* net);
tbiq_status tbiq_super_resolve(const tbiq_network* net, const tbiq_image* in, tbiq_image** out);
/* sigmoid test statistic of a learned observer, in (0, 1) */
tbiq_status tbiq_score_learned(const tbiq_network* net, const tbiq_image* in, double* score);

/* ---- evaluation primitives --------------------------------------------- */

/* Mann-Whitney AUC with midrank ties */
tbiq_status tbiq_auc(const double* scores0, size_t n0, const double* scores1, size_t n1,
                     double* auc_out);
/* DeLong variance and confidence interval at the given level */
tbiq_status tbiq_delong_ci(const double* scores0, size_t n0, const double* scores1, size_t n1,
                           double level, double* auc_out, double* variance_out, double* ci_lo_out,
                           double* ci_hi_out);
/* MSE / PSNR / SSIM against a reference, with the given dynamic range */
tbiq_status tbiq_iq_metrics(const tbiq_image* ref, const tbiq_image* test, double data_range,
                            double* mse, double* psnr, double* ssim);

/* ---- pipeline entry points ---------------------------------------------
 * File conventions inside out_dir:
 *   gen            -> {train,val,cov,lambda,test}_{hr,lr}.tbiq
 *   train-sr       -> srcnn.olnn, sr_history.csv (needs gen outputs)
 *   train-observer -> observer_<resolution>.olnn (needs gen outputs; sr
 *                     additionally needs srcnn.olnn)
 *   eval           -> eval.csv (linear observers; plus any trained observer
 *                     checkpoints found in out_dir)
 *   study          -> report.csv, plot.svg, config.ini (+ spectra.csv)
 */
tbiq_status tbiq_gen(const tbiq_config* cfg, uint64_t seed, const char* out_dir);
tbiq_status tbiq_train_sr(const tbiq_config* cfg, uint64_t seed, const char* out_dir);
tbiq_status tbiq_train_observer(const tbiq_config* cfg, uint64_t seed, const char* resolution,
                                const char* out_dir);
tbiq_status tbiq_eval(const tbiq_config* cfg, uint64_t seed, const char* out_dir);
tbiq_status tbiq_run_study(const tbiq_config* cfg, uint64_t seed, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* TBIQ_H */
