#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "core/image.hpp"
#include "core/nn.hpp"
#include "core/observers.hpp"

namespace tbiq {

// ResNet-style classifier: conv3x3 stem + ReLU, n residual blocks
// [conv3x3 + ReLU + conv3x3] with identity skip, global average pool,
// dense(1), sigmoid.
struct LearnedObserverSpec {
    int n_residual_blocks = 2; // one of {2, 4, 6, 8}
    int filters = 32;
    int kernel = 3;
    bool rho_init = false; // seed the stem's first filter from a RHO template

    void validate() const;
};

// rho may be null (random init). When given, its weights must form a square
// image of side `crop`; the central kernel-footprint crop seeds the first
// stem filter (rescaled to the He-init magnitude), the rest stay random.
Network<float> build_learned_observer(const LearnedObserverSpec& spec, const LinearTemplate* rho,
                                      int crop, std::uint64_t seed);

// Sigmoid output of the net as the test statistic, in (0, 1).
double score_learned(const Network<float>& net, const ImageGrid& img);

std::vector<double> score_learned_many(const Network<float>& net,
                                       const std::vector<ImageGrid>& images, int batch = 32);

// Labeled image source for observer training. Images are produced by a
// generator callback so measurement noise can be regenerated per epoch
// ("semi-online" training); epoch -1 requests the canonical realization.
// Optional 4-fold flip augmentation quadruples the index space.
class LabeledImageSource : public DataSource {
public:
    LabeledImageSource(int count, int width, int height,
                       std::function<ImageGrid(int index, int epoch)> generator,
                       std::vector<int> labels, bool flip4);

    // fixed image list convenience
    LabeledImageSource(const std::vector<ImageGrid>& images, std::vector<int> labels, bool flip4);

    int size() const override;
    int sample_channels() const override { return 1; }
    int sample_height() const override { return height_; }
    int sample_width() const override { return width_; }
    void fill(const std::vector<int>& idx, int epoch, Tensor4<float>& x,
              Tensor4<float>& y) const override;

private:
    int count_, width_, height_;
    std::function<ImageGrid(int, int)> gen_;
    std::vector<int> labels_;
    bool flip4_;
};

} // namespace tbiq
