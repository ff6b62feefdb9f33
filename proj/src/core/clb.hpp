#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"

namespace tbiq {

// Clustered lumpy background parameters; see Bochud et al.'s model of
// Poisson-distributed clusters of rotated anisotropic blobs.
struct ClbParams {
    double mean_clusters = 150.0;      // mean cluster count over the field of view
    double mean_blobs_per_cluster = 20.0;
    double half_axis_x = 5.0;          // blob ellipse half-axes, pixels
    double half_axis_y = 2.0;
    double alpha = 2.1;
    double beta = 0.5;
    double cluster_spread = 12.0;      // Gaussian std of blob offsets, pixels
    int width = 128;
    int height = 128;

    void validate() const;
};

// One sampled blob: absolute center plus rotation.
struct ClbBlob {
    double x = 0.0;
    double y = 0.0;
    double cos_t = 1.0;
    double sin_t = 0.0;
};

struct ClbRealization {
    int n_clusters = 0;
    std::vector<ClbBlob> blobs;
};

// The blob profile l(r, R_theta) evaluated at offset (dx, dy) from the blob
// center. Reference scalar form; the renderer uses a vectorized equivalent.
double clb_blob_value(const ClbParams& p, const ClbBlob& b, double px, double py);

// Draws K ~ Poisson(mean_clusters) cluster centers uniform over the field of
// view, N_k ~ Poisson(mean_blobs_per_cluster) blobs per cluster with
// Gaussian(0, spread) offsets and rotations uniform on [0, 2pi).
ClbRealization sample_clb(const ClbParams& p, std::uint64_t seed);

// Sum of all blob profiles at integer pixel centers.
ImageGrid render_clb(const ClbParams& p, const ClbRealization& r);

ImageGrid generate_clb(const ClbParams& p, std::uint64_t seed);

} // namespace tbiq
