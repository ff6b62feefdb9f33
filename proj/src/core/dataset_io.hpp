#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace tbiq {

// Dataset container file: magic "TBIQ", version, count, dims, one label byte
// per image, then the f32 little-endian pixel payload. Bit-exact round trip.
struct LabeledDataset {
    std::vector<ImageGrid> images;
    std::vector<int> labels;
};

void save_dataset(const std::string& path, const std::vector<ImageGrid>& images,
                  const std::vector<int>& labels);
LabeledDataset load_dataset(const std::string& path);

// header size in bytes for a dataset of `count` images
std::size_t dataset_header_bytes(std::size_t count);

} // namespace tbiq
