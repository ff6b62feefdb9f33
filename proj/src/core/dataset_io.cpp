#include "core/dataset_io.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace tbiq {

std::size_t dataset_header_bytes(std::size_t count) {
    return 4 + 4 + 4 + 4 + 4 + count; // magic, version, count, w, h, labels
}

void save_dataset(const std::string& path, const std::vector<ImageGrid>& images,
                  const std::vector<int>& labels) {
    if (images.empty()) throw std::invalid_argument("save_dataset: empty set");
    if (images.size() != labels.size())
        throw std::invalid_argument("save_dataset: label count mismatch");
    const int w = images[0].width, h = images[0].height;
    for (const auto& img : images)
        if (img.width != w || img.height != h)
            throw std::invalid_argument("save_dataset: inconsistent dimensions");

    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
    auto put = [&](const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f) != n) {
            std::fclose(f);
            throw std::runtime_error("save_dataset: write failed for " + path);
        }
    };
    put("TBIQ", 4);
    const std::uint32_t version = 1, count = static_cast<std::uint32_t>(images.size()),
                        uw = static_cast<std::uint32_t>(w), uh = static_cast<std::uint32_t>(h);
    put(&version, 4);
    put(&count, 4);
    put(&uw, 4);
    put(&uh, 4);
    for (int l : labels) {
        const std::uint8_t b = static_cast<std::uint8_t>(l);
        put(&b, 1);
    }
    for (const auto& img : images) put(img.values.data(), img.size() * sizeof(float));
    std::fclose(f);
}

LabeledDataset load_dataset(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    auto take = [&](void* p, std::size_t n, const char* what) {
        if (std::fread(p, 1, n, f) != n) {
            std::fclose(f);
            throw std::runtime_error(std::string("load_dataset: truncated ") + what + " in " + path);
        }
    };
    char magic[4];
    take(magic, 4, "magic");
    if (std::memcmp(magic, "TBIQ", 4) != 0) {
        std::fclose(f);
        throw std::runtime_error("load_dataset: bad magic in " + path);
    }
    std::uint32_t version, count, w, h;
    take(&version, 4, "version");
    if (version != 1) {
        std::fclose(f);
        throw std::runtime_error("load_dataset: unsupported version in " + path);
    }
    take(&count, 4, "count");
    take(&w, 4, "width");
    take(&h, 4, "height");
    if (count == 0 || w == 0 || h == 0) {
        std::fclose(f);
        throw std::runtime_error("load_dataset: degenerate header in " + path);
    }
    LabeledDataset out;
    out.labels.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint8_t b;
        take(&b, 1, "labels");
        out.labels[i] = b;
    }
    out.images.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        ImageGrid img(static_cast<int>(w), static_cast<int>(h));
        take(img.values.data(), img.size() * sizeof(float), "payload");
        out.images.push_back(std::move(img));
    }
    std::fclose(f);
    return out;
}

} // namespace tbiq
