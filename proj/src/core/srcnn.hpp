#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"
#include "core/nn.hpp"

namespace tbiq {

// Depth-parametric SRCNN: conv(first_kernel, 1->F) + ReLU, (n-2) x
// [conv(other_kernel, F->F) + ReLU], conv(other_kernel, F->1), no final ReLU.
struct SrcnnSpec {
    int n_layers = 3; // 2..8 convolutional layers
    int first_kernel = 9;
    int other_kernel = 5;
    int hidden_filters = 32;

    void validate() const;
};

Network<float> build_srcnn(const SrcnnSpec& spec, std::uint64_t seed);

// Half receptive field: interior outputs further than this from a region
// border are unaffected by padding.
int conv_margin(const Network<float>& net);

struct SrPairs {
    std::vector<ImageGrid> lr, hr; // same dimensions pairwise
};

// Minimizes ensemble MSE; returns the best-validation snapshot.
TrainResult train_sr(Network<float>& net, const SrPairs& train, const SrPairs& val,
                     const TrainConfig& config);

ImageGrid super_resolve(const Network<float>& net, const ImageGrid& img);

// Resolve only the central crop (+margin) of img and return the crop; equals
// the same crop of super_resolve(img) whenever margin >= conv_margin(net).
ImageGrid super_resolve_crop(const Network<float>& net, const ImageGrid& img, int crop, int margin);

// Cut aligned patch pairs for training (patch == 0 keeps full images).
SrPairs extract_patch_pairs(const SrPairs& pairs, int patch, int per_image, std::uint64_t seed);

} // namespace tbiq
