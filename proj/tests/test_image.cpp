#include <doctest.h>

#include "core/image.hpp"

using namespace tbiq;

TEST_CASE("construction and invariants") {
    ImageGrid g(4, 3, 2.0f);
    CHECK(g.width == 4);
    CHECK(g.height == 3);
    CHECK(g.size() == 12);
    CHECK(g.sum() == doctest::Approx(24.0));
    CHECK(g.finite());
    CHECK_THROWS(ImageGrid(0, 5));
}

TEST_CASE("central crop is centered and checked") {
    ImageGrid g(6, 6);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) g.at(x, y) = static_cast<float>(10 * y + x);
    const ImageGrid c = central_crop(g, 2, 2);
    CHECK(c.at(0, 0) == 22.0f);
    CHECK(c.at(1, 1) == 33.0f);
    CHECK_THROWS(central_crop(g, 7, 2));
    const ImageGrid full = central_crop(g, 6, 6);
    CHECK(content_hash(full) == content_hash(g));
}

TEST_CASE("flips are involutions and mirror correctly") {
    ImageGrid g(3, 2);
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = static_cast<float>(i);
    const ImageGrid h = flip_horizontal(g);
    CHECK(h.at(0, 0) == g.at(2, 0));
    CHECK(content_hash(flip_horizontal(h)) == content_hash(g));
    const ImageGrid v = flip_vertical(g);
    CHECK(v.at(0, 0) == g.at(0, 1));
    CHECK(content_hash(flip_vertical(v)) == content_hash(g));
}

TEST_CASE("axpby and hadamard") {
    ImageGrid x(2, 2, 1.0f), y(2, 2, 3.0f);
    const ImageGrid z = axpby(2.0f, x, -1.0f, y);
    CHECK(z.at(0, 0) == -1.0f);
    const ImageGrid p = hadamard(x, y);
    CHECK(p.at(1, 1) == 3.0f);
    ImageGrid w(3, 2);
    CHECK_THROWS(axpby(1.0f, x, 1.0f, w));
}

TEST_CASE("content hash separates different images") {
    ImageGrid a(4, 4, 0.0f), b(4, 4, 0.0f);
    CHECK(content_hash(a) == content_hash(b));
    b.at(3, 3) = 1e-20f;
    CHECK(content_hash(a) != content_hash(b));
}
