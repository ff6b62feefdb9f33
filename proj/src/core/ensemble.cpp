#include "core/ensemble.hpp"

#include <stdexcept>

#include "core/rng.hpp"

namespace tbiq {

void TaskSpec::validate() const {
    clb.validate();
    degradation.validate();
    if (crop < 1 || crop > clb.width || crop > clb.height)
        throw std::invalid_argument("TaskSpec: crop exceeds image dimensions");
    if (kind == TaskKind::Rayleigh) {
        rayleigh.validate();
        if (rayleigh.signal_length + 2 > clb.width)
            throw std::invalid_argument("TaskSpec: signal exceeds image");
    } else {
        mc.validate();
        if (mc.crop_size != clb.width || mc.crop_size != clb.height)
            throw std::invalid_argument("TaskSpec: MC crop size must match image dimensions");
    }
}

std::vector<ImageGrid> generate_backgrounds(const ClbParams& clb, int count, std::uint64_t seed) {
    clb.validate();
    if (count < 1) throw std::invalid_argument("generate_backgrounds: count must be >= 1");
    std::vector<ImageGrid> out(count);
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < count; ++i) out[i] = generate_clb(clb, derive_seed(seed, "background", i));
    return out;
}

Ensemble compose_ensemble(const TaskSpec& task, const std::vector<ImageGrid>& backgrounds,
                          std::uint64_t seed, const std::vector<ImageGrid>* mc_library) {
    task.validate();
    const int total = static_cast<int>(backgrounds.size());
    Ensemble out;
    out.images.resize(total);
    out.labels.resize(total);

    // SKE signals are fixed; build them once
    ImageGrid sig0, sig1;
    if (task.kind == TaskKind::Rayleigh) {
        RayleighSignalSpec s = task.rayleigh;
        s.hypothesis = RayleighHypothesis::PairH0;
        sig0 = make_rayleigh_signal(s, task.clb.width, task.clb.height);
        s.hypothesis = RayleighHypothesis::LineH1;
        sig1 = make_rayleigh_signal(s, task.clb.width, task.clb.height);
    }

    std::vector<ImageGrid> local_library;
    const std::vector<ImageGrid>* lib = mc_library;
    if (task.kind == TaskKind::McCluster && lib == nullptr) {
        local_library = make_mc_library(task.mc, derive_seed(seed, "mc-library-master"));
        lib = &local_library;
    }

#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < total; ++i) {
        const int label = i & 1;
        if (task.kind == TaskKind::Rayleigh) {
            out.images[i] = axpby(1.0f, backgrounds[i], 1.0f, label == 0 ? sig0 : sig1);
        } else {
            if (label == 0)
                out.images[i] = backgrounds[i];
            else
                out.images[i] =
                    insert_mc_cluster(backgrounds[i], *lib, task.mc, derive_seed(seed, "mc-insert", i));
        }
        out.labels[i] = label;
    }
    return out;
}

Ensemble generate_ensemble(const TaskSpec& task, int n_per_class, std::uint64_t seed,
                           const std::vector<ImageGrid>* mc_library) {
    task.validate();
    if (n_per_class < 1) throw std::invalid_argument("generate_ensemble: n_per_class must be >= 1");
    return compose_ensemble(task, generate_backgrounds(task.clb, 2 * n_per_class, seed), seed,
                            mc_library);
}

} // namespace tbiq
