#include "core/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tbiq {

std::string study_kind_name(StudyKind k) {
    switch (k) {
    case StudyKind::RayleighLength: return "rayleigh-length";
    case StudyKind::SrcnnDepth: return "srcnn-depth";
    case StudyKind::McCapacity: return "mc-capacity";
    }
    return "?";
}

StudyKind study_kind_from_name(const std::string& name) {
    if (name == "rayleigh-length") return StudyKind::RayleighLength;
    if (name == "srcnn-depth") return StudyKind::SrcnnDepth;
    if (name == "mc-capacity") return StudyKind::McCapacity;
    throw ConfigError("unknown study kind: " + name);
}

void ExperimentConfig::validate() const {
    task.validate();
    if (data.sr_train < 2 || data.sr_val < 2 || data.cov_per_class < 2 ||
        data.lambda_val_per_class < 1 || data.test_per_class < 2 || data.noise_reals < 1)
        throw ConfigError("config: dataset sizes below minimal viable");
    if (srcnn.layers < 2 || srcnn.layers > 8) throw ConfigError("config: srcnn layers must be in [2,8]");
    if (srcnn.epochs < 1 || srcnn.batch < 1 || !(srcnn.learning_rate > 0.0))
        throw ConfigError("config: invalid srcnn training settings");
    if (srcnn.patch < 0 || (srcnn.patch > 0 && srcnn.patches_per_image < 1))
        throw ConfigError("config: invalid srcnn patch settings");
    if (!(observer.rho_lambda_lo > 0.0) || observer.rho_lambda_hi < observer.rho_lambda_lo ||
        observer.rho_lambda_hi > 1.0 || observer.rho_points_per_decade < 1)
        throw ConfigError("config: invalid RHO lambda grid");
    if (observer.resnet_epochs < 1 || observer.resnet_batch < 1 ||
        !(observer.resnet_learning_rate > 0.0))
        throw ConfigError("config: invalid observer training settings");
    for (const std::string& o : observer.roster)
        if (o != "rho" && o != "cho" && o != "resnet")
            throw ConfigError("config: unknown observer in roster: " + o);
    if (study.lengths.empty() || study.depths.empty() || study.blocks.empty() ||
        study.sizes.empty() || study.seeds.empty() || study.resolutions.empty())
        throw ConfigError("config: study sweeps must be nonempty");
    for (int l : study.lengths)
        if (l < 3) throw ConfigError("config: signal lengths must be >= 3");
    for (int d : study.depths)
        if (d < 2 || d > 8) throw ConfigError("config: depths must be in [2,8]");
    for (int b : study.blocks)
        if (b != 2 && b != 4 && b != 6 && b != 8)
            throw ConfigError("config: blocks must be from {2,4,6,8}");
    for (int s : study.sizes)
        if (s < 4) throw ConfigError("config: observer training sizes must be >= 4");
    for (const std::string& r : study.resolutions)
        if (r != "hr" && r != "lr" && r != "sr")
            throw ConfigError("config: unknown resolution: " + r);
    if (!(ci_level > 0.0) || !(ci_level < 1.0)) throw ConfigError("config: ci_level in (0,1)");
}

namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using SectionMap = std::map<std::string, std::map<std::string, Entry>>;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

SectionMap tokenize(const std::string& text) {
    SectionMap sections;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config parse error at line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config parse error at line " + std::to_string(lineno) +
                                  ": empty section name");
            sections[section]; // section may legally stay empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config parse error at line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config parse error at line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError("config parse error at line " + std::to_string(lineno) +
                              ": key outside any [section]");
        if (sections[section].count(key))
            throw ConfigError("config parse error at line " + std::to_string(lineno) +
                              ": duplicate key " + section + "." + key);
        sections[section][key] = {value, lineno, false};
    }
    return sections;
}

class Reader {
public:
    explicit Reader(SectionMap sections) : sections_(std::move(sections)) {}

    bool has(const std::string& sec, const std::string& key) {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return false;
        return s->second.count(key) != 0;
    }

    std::string raw(const std::string& sec, const std::string& key) {
        Entry& e = sections_[sec][key];
        e.used = true;
        return e.value;
    }

    void get(const std::string& sec, const std::string& key, std::string& out) {
        if (has(sec, key)) out = raw(sec, key);
    }

    void get(const std::string& sec, const std::string& key, double& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') fail(sec, key, "not a number: " + v);
        out = d;
    }

    void get(const std::string& sec, const std::string& key, int& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        char* end = nullptr;
        const long d = std::strtol(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') fail(sec, key, "not an integer: " + v);
        out = static_cast<int>(d);
    }

    void get(const std::string& sec, const std::string& key, std::uint64_t& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        char* end = nullptr;
        const unsigned long long d = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') fail(sec, key, "not an integer: " + v);
        out = d;
    }

    void get(const std::string& sec, const std::string& key, bool& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        if (v == "true" || v == "1")
            out = true;
        else if (v == "false" || v == "0")
            out = false;
        else
            fail(sec, key, "not a boolean: " + v);
    }

    template <typename T>
    void get_list(const std::string& sec, const std::string& key, std::vector<T>& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        std::vector<T> items;
        std::istringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) fail(sec, key, "empty list item");
            std::istringstream is(item);
            T parsed;
            is >> parsed;
            if (is.fail() || !is.eof()) fail(sec, key, "bad list item: " + item);
            items.push_back(parsed);
        }
        if (items.empty()) fail(sec, key, "empty list");
        out = std::move(items);
    }

    void get_list(const std::string& sec, const std::string& key, std::vector<std::string>& out) {
        if (!has(sec, key)) return;
        const std::string v = raw(sec, key);
        std::vector<std::string> items;
        std::istringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) fail(sec, key, "empty list item");
            items.push_back(item);
        }
        if (items.empty()) fail(sec, key, "empty list");
        out = std::move(items);
    }

    void reject_unknown() const {
        std::string complaints;
        for (const auto& [sec, keys] : sections_) {
            if (!known_sections_.count(sec)) {
                complaints += (complaints.empty() ? "" : "; ") + std::string("unknown section [") +
                              sec + "]";
                continue;
            }
            for (const auto& [key, e] : keys)
                if (!e.used)
                    complaints += (complaints.empty() ? "" : "; ") + std::string("unknown key ") +
                                  sec + "." + key + " (line " + std::to_string(e.line) + ")";
        }
        if (!complaints.empty()) throw ConfigError("config: " + complaints);
    }

    void note_section(const std::string& s) { known_sections_.insert(s); }

private:
    [[noreturn]] void fail(const std::string& sec, const std::string& key, const std::string& what) {
        const int line = sections_[sec][key].line;
        throw ConfigError("config parse error at line " + std::to_string(line) + " (" + sec + "." +
                          key + "): " + what);
    }

    SectionMap sections_;
    std::set<std::string> known_sections_;
};

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    Reader r(tokenize(text));
    ExperimentConfig cfg;

    r.note_section("task");
    std::string kind = "rayleigh";
    r.get("task", "kind", kind);
    if (kind == "rayleigh")
        cfg.task.kind = TaskKind::Rayleigh;
    else if (kind == "mc")
        cfg.task.kind = TaskKind::McCluster;
    else
        throw ConfigError("config: task.kind must be rayleigh or mc");
    r.get("task", "width", cfg.task.clb.width);
    r.get("task", "height", cfg.task.clb.height);
    r.get("task", "crop", cfg.task.crop);

    r.note_section("clb");
    r.get("clb", "mean_clusters", cfg.task.clb.mean_clusters);
    r.get("clb", "mean_blobs", cfg.task.clb.mean_blobs_per_cluster);
    r.get("clb", "lx", cfg.task.clb.half_axis_x);
    r.get("clb", "ly", cfg.task.clb.half_axis_y);
    r.get("clb", "alpha", cfg.task.clb.alpha);
    r.get("clb", "beta", cfg.task.clb.beta);
    r.get("clb", "sigma", cfg.task.clb.cluster_spread);

    r.note_section("rayleigh");
    r.get("rayleigh", "length", cfg.task.rayleigh.signal_length);
    r.get("rayleigh", "amplitude", cfg.task.rayleigh.amplitude);
    r.get("rayleigh", "blur_sigma", cfg.task.rayleigh.blur_sigma);

    r.note_section("mc");
    r.get("mc", "library", cfg.task.mc.library_path);
    r.get("mc", "library_size", cfg.task.mc.synth_library_size);
    r.get("mc", "contrast_lo", cfg.task.mc.contrast_lo);
    r.get("mc", "contrast_hi", cfg.task.mc.contrast_hi);
    r.get("mc", "crop_size", cfg.task.mc.crop_size);
    r.get("mc", "synth_size", cfg.task.mc.synth.size);
    r.get("mc", "synth_disk_radius", cfg.task.mc.synth.disk_radius);
    r.get("mc", "synth_blobs_lo", cfg.task.mc.synth.blobs_lo);
    r.get("mc", "synth_blobs_hi", cfg.task.mc.synth.blobs_hi);
    r.get("mc", "synth_sigma_lo", cfg.task.mc.synth.sigma_lo);
    r.get("mc", "synth_sigma_hi", cfg.task.mc.synth.sigma_hi);

    r.note_section("degradation");
    r.get("degradation", "blur_sigma", cfg.task.degradation.blur_sigma);
    r.get("degradation", "downsample", cfg.task.degradation.downsample_factor);
    r.get("degradation", "upsample_after", cfg.task.degradation.upsample_after);

    r.note_section("noise");
    r.get("noise", "sigma_p", cfg.task.degradation.noise.sigma_p);
    r.get("noise", "sigma_g", cfg.task.degradation.noise.sigma_g);

    r.note_section("srcnn");
    r.get("srcnn", "layers", cfg.srcnn.layers);
    r.get("srcnn", "epochs", cfg.srcnn.epochs);
    r.get("srcnn", "learning_rate", cfg.srcnn.learning_rate);
    r.get("srcnn", "batch", cfg.srcnn.batch);
    r.get("srcnn", "patch", cfg.srcnn.patch);
    r.get("srcnn", "patches_per_image", cfg.srcnn.patches_per_image);

    r.note_section("observer");
    r.get("observer", "rho_lambda_lo", cfg.observer.rho_lambda_lo);
    r.get("observer", "rho_lambda_hi", cfg.observer.rho_lambda_hi);
    r.get("observer", "rho_points_per_decade", cfg.observer.rho_points_per_decade);
    r.get("observer", "resnet_blocks", cfg.observer.resnet_blocks);
    r.get("observer", "resnet_rho_init", cfg.observer.resnet_rho_init);
    r.get("observer", "resnet_epochs", cfg.observer.resnet_epochs);
    r.get("observer", "resnet_learning_rate", cfg.observer.resnet_learning_rate);
    r.get("observer", "resnet_batch", cfg.observer.resnet_batch);
    r.get("observer", "on_the_fly_noise", cfg.observer.on_the_fly_noise);
    r.get_list("observer", "roster", cfg.observer.roster);

    r.note_section("data");
    r.get("data", "sr_train", cfg.data.sr_train);
    r.get("data", "sr_val", cfg.data.sr_val);
    r.get("data", "cov_per_class", cfg.data.cov_per_class);
    r.get("data", "lambda_val_per_class", cfg.data.lambda_val_per_class);
    r.get("data", "test_per_class", cfg.data.test_per_class);
    r.get("data", "noise_reals", cfg.data.noise_reals);
    r.get("data", "share_backgrounds", cfg.data.share_backgrounds);

    r.note_section("study");
    std::string study_kind = study_kind_name(cfg.study.kind);
    r.get("study", "kind", study_kind);
    cfg.study.kind = study_kind_from_name(study_kind);
    r.get_list("study", "lengths", cfg.study.lengths);
    r.get_list("study", "depths", cfg.study.depths);
    r.get_list("study", "blocks", cfg.study.blocks);
    r.get_list("study", "sizes", cfg.study.sizes);
    r.get_list("study", "seeds", cfg.study.seeds);
    r.get_list("study", "resolutions", cfg.study.resolutions);
    r.get("study", "sr_region_crop", cfg.study.sr_crop_region);

    r.note_section("eval");
    r.get("eval", "ci_level", cfg.ci_level);

    r.reject_unknown();
    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << ",";
        ss << v[i];
    }
    return ss.str();
}

} // namespace

std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "[task]\n";
    o << "kind = " << (cfg.task.kind == TaskKind::Rayleigh ? "rayleigh" : "mc") << "\n";
    o << "width = " << cfg.task.clb.width << "\n";
    o << "height = " << cfg.task.clb.height << "\n";
    o << "crop = " << cfg.task.crop << "\n\n";

    o << "[clb]\n";
    o << "mean_clusters = " << fmt(cfg.task.clb.mean_clusters) << "\n";
    o << "mean_blobs = " << fmt(cfg.task.clb.mean_blobs_per_cluster) << "\n";
    o << "lx = " << fmt(cfg.task.clb.half_axis_x) << "\n";
    o << "ly = " << fmt(cfg.task.clb.half_axis_y) << "\n";
    o << "alpha = " << fmt(cfg.task.clb.alpha) << "\n";
    o << "beta = " << fmt(cfg.task.clb.beta) << "\n";
    o << "sigma = " << fmt(cfg.task.clb.cluster_spread) << "\n\n";

    o << "[rayleigh]\n";
    o << "length = " << cfg.task.rayleigh.signal_length << "\n";
    o << "amplitude = " << fmt(cfg.task.rayleigh.amplitude) << "\n";
    o << "blur_sigma = " << fmt(cfg.task.rayleigh.blur_sigma) << "\n\n";

    o << "[mc]\n";
    o << "library = " << cfg.task.mc.library_path << "\n";
    o << "library_size = " << cfg.task.mc.synth_library_size << "\n";
    o << "contrast_lo = " << fmt(cfg.task.mc.contrast_lo) << "\n";
    o << "contrast_hi = " << fmt(cfg.task.mc.contrast_hi) << "\n";
    o << "crop_size = " << cfg.task.mc.crop_size << "\n";
    o << "synth_size = " << cfg.task.mc.synth.size << "\n";
    o << "synth_disk_radius = " << fmt(cfg.task.mc.synth.disk_radius) << "\n";
    o << "synth_blobs_lo = " << cfg.task.mc.synth.blobs_lo << "\n";
    o << "synth_blobs_hi = " << cfg.task.mc.synth.blobs_hi << "\n";
    o << "synth_sigma_lo = " << fmt(cfg.task.mc.synth.sigma_lo) << "\n";
    o << "synth_sigma_hi = " << fmt(cfg.task.mc.synth.sigma_hi) << "\n\n";

    o << "[degradation]\n";
    o << "blur_sigma = " << fmt(cfg.task.degradation.blur_sigma) << "\n";
    o << "downsample = " << cfg.task.degradation.downsample_factor << "\n";
    o << "upsample_after = " << (cfg.task.degradation.upsample_after ? "true" : "false") << "\n\n";

    o << "[noise]\n";
    o << "sigma_p = " << fmt(cfg.task.degradation.noise.sigma_p) << "\n";
    o << "sigma_g = " << fmt(cfg.task.degradation.noise.sigma_g) << "\n\n";

    o << "[srcnn]\n";
    o << "layers = " << cfg.srcnn.layers << "\n";
    o << "epochs = " << cfg.srcnn.epochs << "\n";
    o << "learning_rate = " << fmt(cfg.srcnn.learning_rate) << "\n";
    o << "batch = " << cfg.srcnn.batch << "\n";
    o << "patch = " << cfg.srcnn.patch << "\n";
    o << "patches_per_image = " << cfg.srcnn.patches_per_image << "\n\n";

    o << "[observer]\n";
    o << "rho_lambda_lo = " << fmt(cfg.observer.rho_lambda_lo) << "\n";
    o << "rho_lambda_hi = " << fmt(cfg.observer.rho_lambda_hi) << "\n";
    o << "rho_points_per_decade = " << cfg.observer.rho_points_per_decade << "\n";
    o << "resnet_blocks = " << cfg.observer.resnet_blocks << "\n";
    o << "resnet_rho_init = " << (cfg.observer.resnet_rho_init ? "true" : "false") << "\n";
    o << "resnet_epochs = " << cfg.observer.resnet_epochs << "\n";
    o << "resnet_learning_rate = " << fmt(cfg.observer.resnet_learning_rate) << "\n";
    o << "resnet_batch = " << cfg.observer.resnet_batch << "\n";
    o << "on_the_fly_noise = " << (cfg.observer.on_the_fly_noise ? "true" : "false") << "\n";
    o << "roster = " << join(cfg.observer.roster) << "\n\n";

    o << "[data]\n";
    o << "sr_train = " << cfg.data.sr_train << "\n";
    o << "sr_val = " << cfg.data.sr_val << "\n";
    o << "cov_per_class = " << cfg.data.cov_per_class << "\n";
    o << "lambda_val_per_class = " << cfg.data.lambda_val_per_class << "\n";
    o << "test_per_class = " << cfg.data.test_per_class << "\n";
    o << "noise_reals = " << cfg.data.noise_reals << "\n";
    o << "share_backgrounds = " << (cfg.data.share_backgrounds ? "true" : "false") << "\n\n";

    o << "[study]\n";
    o << "kind = " << study_kind_name(cfg.study.kind) << "\n";
    o << "lengths = " << join(cfg.study.lengths) << "\n";
    o << "depths = " << join(cfg.study.depths) << "\n";
    o << "blocks = " << join(cfg.study.blocks) << "\n";
    o << "sizes = " << join(cfg.study.sizes) << "\n";
    o << "seeds = " << join(cfg.study.seeds) << "\n";
    o << "resolutions = " << join(cfg.study.resolutions) << "\n";
    o << "sr_region_crop = " << (cfg.study.sr_crop_region ? "true" : "false") << "\n\n";

    o << "[eval]\n";
    o << "ci_level = " << fmt(cfg.ci_level) << "\n";
    return o.str();
}

void write_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("config: cannot write " + path);
    out << emit_config(cfg);
}

} // namespace tbiq
