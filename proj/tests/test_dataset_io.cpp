#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "core/dataset_io.hpp"
#include "core/rng.hpp"

using namespace tbiq;

namespace {

std::string tmp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("bit-exact round trip") {
    const std::string path = tmp_path("tbiq_ds.tbiq");
    std::vector<ImageGrid> imgs;
    std::vector<int> labels;
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        ImageGrid img(12, 9);
        for (auto& v : img.values) v = static_cast<float>(rng.gauss());
        imgs.push_back(std::move(img));
        labels.push_back(i % 2);
    }
    save_dataset(path, imgs, labels);
    const LabeledDataset back = load_dataset(path);
    REQUIRE(back.images.size() == 5);
    CHECK(back.labels == labels);
    for (int i = 0; i < 5; ++i) CHECK(back.images[i].values == imgs[i].values);
    std::filesystem::remove(path);
}

TEST_CASE("file size follows the header arithmetic") {
    const std::string path = tmp_path("tbiq_size.tbiq");
    const int count = 10, w = 32, h = 16;
    std::vector<ImageGrid> imgs(count, ImageGrid(w, h, 1.0f));
    std::vector<int> labels(count, 0);
    save_dataset(path, imgs, labels);
    const auto size = std::filesystem::file_size(path);
    CHECK(size == dataset_header_bytes(count) + static_cast<std::size_t>(count) * w * h * 4);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted magic is reported as a format error") {
    const std::string path = tmp_path("tbiq_bad.tbiq");
    save_dataset(path, {ImageGrid(4, 4, 1.0f)}, {1});
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fwrite("JUNK", 1, 4, f);
    std::fclose(f);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("bad magic"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("truncated payload is rejected") {
    const std::string path = tmp_path("tbiq_trunc.tbiq");
    save_dataset(path, {ImageGrid(8, 8, 2.0f), ImageGrid(8, 8, 3.0f)}, {0, 1});
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 40);
    CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("truncated"), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("inconsistent inputs are rejected on save") {
    CHECK_THROWS(save_dataset(tmp_path("x.tbiq"), {}, {}));
    CHECK_THROWS(save_dataset(tmp_path("x.tbiq"), {ImageGrid(4, 4)}, {0, 1}));
    CHECK_THROWS(save_dataset(tmp_path("x.tbiq"), {ImageGrid(4, 4), ImageGrid(5, 4)}, {0, 1}));
}
