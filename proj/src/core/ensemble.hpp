#pragma once

#include <cstdint>
#include <vector>

#include "core/clb.hpp"
#include "core/degrade.hpp"
#include "core/signals.hpp"

namespace tbiq {

enum class TaskKind { Rayleigh, McCluster };

// Full description of a binary detection task: background model, signal
// model, degradation and observer crop. Image dimensions live in clb.
struct TaskSpec {
    TaskKind kind = TaskKind::Rayleigh;
    ClbParams clb;
    RayleighSignalSpec rayleigh; // used when kind == Rayleigh
    McSignalSpec mc;             // used when kind == McCluster
    DegradationSpec degradation;
    int crop = 64; // central crop the observers see

    void validate() const;
};

// Class-balanced labeled set of noise-free composites f_i = f_b + f_s
// (Rayleigh) or f_b, f_b(c s_mc + 1) (MC). Labels interleave 0,1,0,1,...
// so any even prefix is balanced. Measurement noise is applied downstream.
struct Ensemble {
    std::vector<ImageGrid> images;
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
};

// Deterministic per-image seed streams derived from the master seed; images
// may be generated in parallel without affecting the result.
Ensemble generate_ensemble(const TaskSpec& task, int n_per_class, std::uint64_t seed,
                           const std::vector<ImageGrid>* mc_library = nullptr);

// Background pool for `count` images; image i uses the "background"/i seed
// stream, so composing signals onto a shared pool reproduces
// generate_ensemble exactly.
std::vector<ImageGrid> generate_backgrounds(const ClbParams& clb, int count, std::uint64_t seed);

// Adds the task's signals onto existing backgrounds (labels 0,1,0,1,...).
Ensemble compose_ensemble(const TaskSpec& task, const std::vector<ImageGrid>& backgrounds,
                          std::uint64_t seed, const std::vector<ImageGrid>* mc_library = nullptr);

} // namespace tbiq
