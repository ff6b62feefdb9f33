#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "core/signals.hpp"

using namespace tbiq;

namespace {

std::pair<double, double> centroid(const ImageGrid& img) {
    double m = 0.0, mx = 0.0, my = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double v = img.at(x, y);
            m += v;
            mx += v * x;
            my += v * y;
        }
    return {mx / m, my / m};
}

} // namespace

TEST_CASE("spec validation") {
    RayleighSignalSpec s;
    s.signal_length = 2;
    CHECK_THROWS(s.validate());
    s = RayleighSignalSpec{};
    s.amplitude = 0.0;
    CHECK_THROWS(s.validate());
    s = RayleighSignalSpec{};
    s.signal_length = 200;
    CHECK_THROWS(make_rayleigh_signal(s, 128, 128)); // exceeds grid
}

TEST_CASE("L=5 pair before blur is exactly two pixels three apart") {
    RayleighSignalSpec s;
    s.signal_length = 5;
    s.amplitude = 2.5;
    const ImageGrid img = make_rayleigh_impulses(s, 128, 128);
    std::vector<std::pair<int, int>> nz;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
            if (img.at(x, y) != 0.0f) nz.push_back({x, y});
    REQUIRE(nz.size() == 2);
    CHECK(nz[0].second == nz[1].second);
    CHECK(nz[1].first - nz[0].first == 3); // separation L-2
    CHECK(img.at(nz[0].first, nz[0].second) == 2.5f);
}

TEST_CASE("pair signal mass is twice the amplitude after unit-mass blur") {
    RayleighSignalSpec s;
    s.amplitude = 3.0;
    for (int L : {5, 6, 7, 8, 9}) {
        s.signal_length = L;
        s.hypothesis = RayleighHypothesis::PairH0;
        const ImageGrid img = make_rayleigh_signal(s, 128, 128);
        CHECK(img.sum() == doctest::Approx(2.0 * s.amplitude).epsilon(1e-6));
        s.hypothesis = RayleighHypothesis::LineH1;
        const ImageGrid line = make_rayleigh_signal(s, 128, 128);
        CHECK(line.sum() == doctest::Approx(L * s.amplitude).epsilon(1e-6));
    }
}

TEST_CASE("pair signal is symmetric under horizontal reflection") {
    RayleighSignalSpec s;
    s.signal_length = 7;
    const ImageGrid img = make_rayleigh_signal(s, 128, 128);
    const ImageGrid flipped = flip_horizontal(img);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(img.values[i] == doctest::Approx(flipped.values[i]).epsilon(1e-10));
}

TEST_CASE("both hypotheses share the same centroid and blur") {
    RayleighSignalSpec s;
    for (int L : {5, 6, 7, 8, 9}) {
        s.signal_length = L;
        s.hypothesis = RayleighHypothesis::PairH0;
        const auto [c0x, c0y] = centroid(make_rayleigh_signal(s, 128, 128));
        s.hypothesis = RayleighHypothesis::LineH1;
        const auto [c1x, c1y] = centroid(make_rayleigh_signal(s, 128, 128));
        INFO("L = ", L);
        CHECK(c0x == doctest::Approx(c1x).epsilon(1e-9));
        CHECK(c0y == doctest::Approx(c1y).epsilon(1e-9));
        CHECK(c0x == doctest::Approx(63.5).epsilon(1e-9));
    }
}

TEST_CASE("synthetic cluster: determinism, range, zero-blob degenerate") {
    SynthMcParams p;
    CHECK(content_hash(synth_mc_cluster(p, 5)) == content_hash(synth_mc_cluster(p, 5)));
    CHECK(content_hash(synth_mc_cluster(p, 5)) != content_hash(synth_mc_cluster(p, 6)));
    const ImageGrid img = synth_mc_cluster(p, 5);
    CHECK(img.min_value() >= 0.0f);
    CHECK(img.max_value() <= 1.0f);

    SynthMcParams zero = p;
    zero.blobs_lo = zero.blobs_hi = 0;
    const ImageGrid z = synth_mc_cluster(zero, 1);
    CHECK(z.sum() == 0.0);

    SynthMcParams bad = p;
    bad.disk_radius = 1.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("cluster mass equals the sum of the per-blob lattice masses") {
    SynthMcParams p;
    const auto blobs = sample_synth_blobs(p, 42);
    const ImageGrid img = render_synth_blobs(p, blobs);
    // separable lattice sums per blob, computed independently
    double want = 0.0;
    for (const SynthBlob& b : blobs) {
        double sx = 0.0, sy = 0.0;
        for (int i = 0; i < p.size; ++i) {
            sx += std::exp(-(i - b.x) * (i - b.x) / (2.0 * b.sigma * b.sigma));
            sy += std::exp(-(i - b.y) * (i - b.y) / (2.0 * b.sigma * b.sigma));
        }
        want += b.amp * sx * sy;
    }
    CHECK(img.sum() == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("rotation: identity at 0 degrees, zero padding at corners") {
    ImageGrid g(21, 21);
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = static_cast<float>(i % 7);
    const ImageGrid same = rotate_bilinear(g, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(same.values[i] == doctest::Approx(g.values[i]).epsilon(1e-6));
    const ImageGrid r45 = rotate_bilinear(ImageGrid(21, 21, 1.0f), 45.0);
    CHECK(r45.at(0, 0) == 0.0f);   // swung out of the square
    CHECK(r45.at(10, 10) == doctest::Approx(1.0f));
}

TEST_CASE("90-degree rotation maps a marker correctly") {
    ImageGrid g(15, 15, 0.0f);
    g.at(12, 7) = 1.0f; // right of center
    const ImageGrid r = rotate_bilinear(g, 90.0);
    // rotating the image by +90 deg maps (12,7) -> (7, 12)
    CHECK(r.at(7, 12) == doctest::Approx(1.0f).epsilon(1e-6));
}

TEST_CASE("mc insertion identities") {
    ImageGrid bg(64, 64);
    for (std::size_t i = 0; i < bg.size(); ++i) bg.values[i] = 1.0f + 0.01f * (i % 13);
    ImageGrid s(64, 64, 0.5f);
    const ImageGrid same = apply_mc_contrast(bg, ImageGrid(64, 64, 0.0f), 0.07);
    CHECK(content_hash(same) == content_hash(bg)); // s_mc = 0
    const ImageGrid same2 = apply_mc_contrast(bg, s, 0.0);
    CHECK(content_hash(same2) == content_hash(bg)); // c = 0
    const ImageGrid out = apply_mc_contrast(bg, s, 0.1);
    for (std::size_t i = 0; i < bg.size(); ++i)
        CHECK(out.values[i] == doctest::Approx(bg.values[i] * 1.05f).epsilon(1e-6));
}

TEST_CASE("insertion never darkens a nonnegative background") {
    McSignalSpec spec;
    spec.crop_size = 64;
    spec.synth.size = 96;
    spec.synth.disk_radius = 24.0;
    const auto lib = make_mc_library(spec, 1);
    ImageGrid bg(64, 64, 2.0f);
    const ImageGrid out = insert_mc_cluster(bg, lib, spec, 9);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.values[i] >= bg.values[i] - 1e-6f);
}

TEST_CASE("sampled contrast stays inside the configured range") {
    McSignalSpec spec;
    spec.crop_size = 64;
    spec.synth.size = 96;
    spec.synth.disk_radius = 24.0;
    // all-ones source cluster: output pixel = 1 + c wherever the rotated crop is 1
    std::vector<ImageGrid> lib = {ImageGrid(96, 96, 1.0f)};
    ImageGrid bg(64, 64, 1.0f);
    double lo = 1.0, hi = 0.0;
    for (int s = 0; s < 40; ++s) {
        const ImageGrid out = insert_mc_cluster(bg, lib, spec, 100 + s);
        const double c = out.at(32, 32) - 1.0; // rotation keeps the center at 1
        CHECK(c >= 0.05 - 1e-6);
        CHECK(c <= 0.06 + 1e-6);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    CHECK(hi - lo > 0.005); // the range is actually exercised
}

TEST_CASE("empty library and oversize crop are rejected") {
    McSignalSpec spec;
    spec.crop_size = 64;
    std::vector<ImageGrid> empty;
    CHECK_THROWS(insert_mc_cluster(ImageGrid(64, 64, 1.0f), empty, spec, 1));
    std::vector<ImageGrid> small = {ImageGrid(32, 32, 1.0f)};
    CHECK_THROWS(insert_mc_cluster(ImageGrid(64, 64, 1.0f), small, spec, 1));
}

TEST_CASE("raw f32 crop library round trip with normalization") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tbiq_test_lib";
    fs::create_directories(dir);
    {
        std::FILE* f = std::fopen((dir / "a.f32").c_str(), "wb");
        const std::uint32_t wh[2] = {4, 2};
        std::fwrite(wh, 4, 2, f);
        const float vals[8] = {0, 2, 4, 8, 8, 4, 2, 0}; // outside [0,1]: normalized on load
        std::fwrite(vals, 4, 8, f);
        std::fclose(f);
    }
    const auto lib = load_crop_library(dir.string());
    REQUIRE(lib.size() == 1);
    CHECK(lib[0].width == 4);
    CHECK(lib[0].height == 2);
    CHECK(lib[0].min_value() == 0.0f);
    CHECK(lib[0].max_value() == 1.0f);
    CHECK(lib[0].at(1, 0) == doctest::Approx(0.25f));
    fs::remove_all(dir);
}
