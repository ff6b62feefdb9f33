#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace tbiq {

enum class RayleighHypothesis { PairH0, LineH1 };

// Rayleigh discrimination signal: H0 is two points separated by L-2 pixels,
// H1 is a horizontal line of L pixels, both blurred by the same unit-mass
// Gaussian and centered on the image center.
struct RayleighSignalSpec {
    int signal_length = 7;        // L; the pair separation is L-2
    double blur_sigma = 1.375;    // pixels
    double amplitude = 1.0;       // per impulse / per line pixel
    RayleighHypothesis hypothesis = RayleighHypothesis::PairH0;

    void validate() const;
};

// Signal-only image (add to a background to form a composite). Impulses at
// fractional positions are distributed over neighbours by linear
// interpolation so H0 and H1 share the exact same centroid for every L.
ImageGrid make_rayleigh_signal(const RayleighSignalSpec& spec, int width, int height);

// Impulse stage before the Gaussian blur (H0: the point pair, H1: the line).
ImageGrid make_rayleigh_impulses(const RayleighSignalSpec& spec, int width, int height);

// Microcalcification cluster handling -----------------------------------

struct SynthMcParams {
    int size = 200;           // generated source image side
    double disk_radius = 60.0;
    int blobs_lo = 5;
    int blobs_hi = 15;
    double sigma_lo = 0.5;
    double sigma_hi = 1.5;

    void validate() const;
};

struct McSignalSpec {
    std::string library_path;     // empty => synthetic source
    SynthMcParams synth;
    int synth_library_size = 11;  // clusters generated when synthetic
    double contrast_lo = 0.05;
    double contrast_hi = 0.06;
    int crop_size = 128;

    void validate() const;
};

// A single synthetic cluster: 5-15 small bright Gaussian blobs scattered in
// a disk, values in [0, 1], non-overlapping by construction so the total
// mass is the sum of the per-blob masses.
struct SynthBlob {
    double x = 0.0, y = 0.0;
    double sigma = 1.0;
    double amp = 1.0;
};

std::vector<SynthBlob> sample_synth_blobs(const SynthMcParams& p, std::uint64_t seed);
ImageGrid render_synth_blobs(const SynthMcParams& p, const std::vector<SynthBlob>& blobs);
ImageGrid synth_mc_cluster(const SynthMcParams& p, std::uint64_t seed);

// Directory of grayscale 8/16-bit PNG or raw-f32 (u32 w, u32 h, payload)
// files; values normalized to [0, 1] on load. Sorted by filename.
std::vector<ImageGrid> load_crop_library(const std::string& dir);

// Library per spec.source: loaded from disk or synthesized (seeded).
std::vector<ImageGrid> make_mc_library(const McSignalSpec& spec, std::uint64_t seed);

// Rotate by angle (degrees) about the image center, bilinear with zero padding.
ImageGrid rotate_bilinear(const ImageGrid& img, double angle_deg);

// f_b .* (c * s_mc + 1), elementwise
ImageGrid apply_mc_contrast(const ImageGrid& background, const ImageGrid& s_mc, double contrast);

// Picks a cluster uniformly from the library, rotates it by a uniform random
// angle, center-crops to spec.crop_size and inserts multiplicatively with
// c ~ Uniform[contrast_lo, contrast_hi].
ImageGrid insert_mc_cluster(const ImageGrid& background, const std::vector<ImageGrid>& library,
                            const McSignalSpec& spec, std::uint64_t seed);

} // namespace tbiq
