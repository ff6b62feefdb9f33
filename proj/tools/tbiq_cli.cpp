// tbiq command-line front end. Talks to the core exclusively through the
// shared library's C API (tbiq.h).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbiq.h"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<std::string> overrides; // section.key=value
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file (INI)");
    cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
    cmd->add_option("--out-dir", o.out_dir,
                    "output directory (default: $TBIQ_OUT_DIR or ./tbiq-out)");
    cmd->add_option("--threads", o.threads, "worker/BLAS threads (0 = leave defaults)");
    cmd->add_option("--set", o.overrides, "override a config entry, e.g. --set rayleigh.length=9")
        ->take_all();
}

std::string resolve_out_dir(const CommonOpts& o) {
    if (!o.out_dir.empty()) return o.out_dir;
    if (const char* env = std::getenv("TBIQ_OUT_DIR"); env && *env) return env;
    return "tbiq-out";
}

[[noreturn]] void die(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, tbiq_last_error());
    std::exit(1);
}

tbiq_config* make_config(const CommonOpts& o, const char* default_kind) {
    tbiq_config* cfg = nullptr;
    if (!o.config_path.empty()) {
        if (tbiq_config_load(o.config_path.c_str(), &cfg) != TBIQ_OK) die("loading config");
    } else {
        if (tbiq_config_default(default_kind, &cfg) != TBIQ_OK) die("building default config");
    }
    for (const std::string& ov : o.overrides) {
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects section.key=value, got '%s'\n", ov.c_str());
            std::exit(1);
        }
        const std::string key = ov.substr(0, eq), value = ov.substr(eq + 1);
        if (tbiq_config_set(cfg, key.c_str(), value.c_str()) != TBIQ_OK) die("applying --set");
    }
    if (o.threads > 0) tbiq_set_threads(o.threads);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tbiq: simulation and task-based assessment of super-resolution networks"};
    app.require_subcommand(1);

    CommonOpts gen_o, sr_o, obs_o, eval_o, study_o, cfg_o;

    CLI::App* gen = app.add_subcommand("gen", "generate HR/LR dataset files for every stage");
    add_common(gen, gen_o);

    CLI::App* train_sr = app.add_subcommand("train-sr", "train the SRCNN on generated datasets");
    add_common(train_sr, sr_o);

    CLI::App* train_obs =
        app.add_subcommand("train-observer", "train a ResNet observer on generated datasets");
    std::string obs_resolution = "lr";
    train_obs->add_option("--resolution", obs_resolution, "hr | lr | sr")->capture_default_str();
    add_common(train_obs, obs_o);

    CLI::App* eval = app.add_subcommand("eval", "evaluate the observer roster on the test stage");
    add_common(eval, eval_o);

    CLI::App* study = app.add_subcommand("study", "run a full study and write report.csv/plot.svg");
    std::string study_kind;
    study->add_option("kind", study_kind, "rayleigh-length | srcnn-depth | mc-capacity")
        ->required();
    add_common(study, study_o);

    CLI::App* dump = app.add_subcommand("config-template", "print a default config");
    std::string template_kind = "rayleigh";
    dump->add_option("kind", template_kind, "rayleigh | mc")->capture_default_str();
    add_common(dump, cfg_o);

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        tbiq_config* cfg = make_config(gen_o, "rayleigh");
        if (tbiq_gen(cfg, gen_o.seed, resolve_out_dir(gen_o).c_str()) != TBIQ_OK) die("gen");
        tbiq_config_free(cfg);
    } else if (train_sr->parsed()) {
        tbiq_config* cfg = make_config(sr_o, "rayleigh");
        if (tbiq_train_sr(cfg, sr_o.seed, resolve_out_dir(sr_o).c_str()) != TBIQ_OK)
            die("train-sr");
        tbiq_config_free(cfg);
    } else if (train_obs->parsed()) {
        tbiq_config* cfg = make_config(obs_o, "rayleigh");
        if (tbiq_train_observer(cfg, obs_o.seed, obs_resolution.c_str(),
                                resolve_out_dir(obs_o).c_str()) != TBIQ_OK)
            die("train-observer");
        tbiq_config_free(cfg);
    } else if (eval->parsed()) {
        tbiq_config* cfg = make_config(eval_o, "rayleigh");
        if (tbiq_eval(cfg, eval_o.seed, resolve_out_dir(eval_o).c_str()) != TBIQ_OK) die("eval");
        tbiq_config_free(cfg);
    } else if (study->parsed()) {
        const bool mc = study_kind == "mc-capacity";
        tbiq_config* cfg = make_config(study_o, mc ? "mc" : "rayleigh");
        if (tbiq_config_set(cfg, "study.kind", study_kind.c_str()) != TBIQ_OK)
            die("selecting study kind");
        if (tbiq_run_study(cfg, study_o.seed, resolve_out_dir(study_o).c_str()) != TBIQ_OK)
            die("study");
        tbiq_config_free(cfg);
    } else if (dump->parsed()) {
        tbiq_config* cfg = make_config(cfg_o, template_kind.c_str());
        char* text = nullptr;
        if (tbiq_config_emit(cfg, &text) != TBIQ_OK) die("emitting config");
        std::fputs(text, stdout);
        tbiq_string_free(text);
        tbiq_config_free(cfg);
    }
    return 0;
}
