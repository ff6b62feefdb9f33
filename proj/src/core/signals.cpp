#include "core/signals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include <png.h>

#include "core/degrade.hpp"
#include "core/rng.hpp"

namespace tbiq {

void RayleighSignalSpec::validate() const {
    if (signal_length < 3) throw std::invalid_argument("RayleighSignalSpec: L must be >= 3");
    if (!(blur_sigma > 0.0)) throw std::invalid_argument("RayleighSignalSpec: blur_sigma must be > 0");
    if (!(amplitude > 0.0)) throw std::invalid_argument("RayleighSignalSpec: amplitude must be > 0");
}

namespace {

// Distribute a point mass at fractional (px, py) over the four neighbours.
void splat(ImageGrid& img, double px, double py, double mass) {
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    for (int i = 0; i < 4; ++i) {
        if (w[i] == 0.0) continue;
        if (xs[i] < 0 || xs[i] >= img.width || ys[i] < 0 || ys[i] >= img.height)
            throw std::invalid_argument("rayleigh signal exceeds grid");
        img.at(xs[i], ys[i]) += static_cast<float>(mass * w[i]);
    }
}

} // namespace

ImageGrid make_rayleigh_impulses(const RayleighSignalSpec& spec, int width, int height) {
    spec.validate();
    const int L = spec.signal_length;
    if (L + 2 > width || height < 3)
        throw std::invalid_argument("rayleigh signal exceeds grid");

    ImageGrid sig(width, height, 0.0f);
    const double cx = (width - 1) / 2.0;
    // even heights have no center row; the row below the geometric center is
    // used for both hypotheses, keeping their centroids identical
    const double cy = (height - 1) / 2;

    if (spec.hypothesis == RayleighHypothesis::PairH0) {
        const double half_sep = (L - 2) / 2.0;
        splat(sig, cx - half_sep, cy, spec.amplitude);
        splat(sig, cx + half_sep, cy, spec.amplitude);
    } else {
        const double start = cx - (L - 1) / 2.0;
        for (int j = 0; j < L; ++j) splat(sig, start + j, cy, spec.amplitude);
    }
    return sig;
}

ImageGrid make_rayleigh_signal(const RayleighSignalSpec& spec, int width, int height) {
    return gaussian_blur(make_rayleigh_impulses(spec, width, height), spec.blur_sigma);
}

void SynthMcParams::validate() const {
    if (size < 8) throw std::invalid_argument("SynthMcParams: size too small");
    if (!(disk_radius > 2.0 * sigma_hi))
        throw std::invalid_argument("SynthMcParams: degenerate disk radius");
    if (disk_radius > size / 2.0 - 8.0 * sigma_hi)
        throw std::invalid_argument("SynthMcParams: disk does not fit the source image");
    if (blobs_lo < 0 || blobs_hi < blobs_lo)
        throw std::invalid_argument("SynthMcParams: invalid blob count range");
    if (!(sigma_lo > 0.0) || sigma_hi < sigma_lo)
        throw std::invalid_argument("SynthMcParams: invalid sigma range");
}

void McSignalSpec::validate() const {
    if (!(contrast_lo > 0.0) || contrast_hi < contrast_lo)
        throw std::invalid_argument("McSignalSpec: need 0 < c_lo <= c_hi");
    if (crop_size < 1) throw std::invalid_argument("McSignalSpec: crop_size must be >= 1");
    if (library_path.empty()) {
        synth.validate();
        if (crop_size > synth.size)
            throw std::invalid_argument("McSignalSpec: crop larger than source image");
        if (synth_library_size < 1)
            throw std::invalid_argument("McSignalSpec: synthetic library must be nonempty");
    }
}

std::vector<SynthBlob> sample_synth_blobs(const SynthMcParams& p, std::uint64_t seed) {
    p.validate();
    Rng rng(seed);
    const int n_blobs =
        p.blobs_lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(p.blobs_hi - p.blobs_lo + 1)));

    std::vector<SynthBlob> blobs;
    const double c = (p.size - 1) / 2.0;
    for (int i = 0; i < n_blobs; ++i) {
        SynthBlob b;
        b.sigma = rng.uniform(p.sigma_lo, p.sigma_hi);
        b.amp = rng.uniform(0.6, 0.99);
        bool placed = false;
        // non-overlapping placement keeps values in [0,1] and blob masses additive
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            const double r = p.disk_radius * std::sqrt(rng.uniform());
            const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            b.x = c + r * std::cos(phi);
            b.y = c + r * std::sin(phi);
            placed = true;
            for (const SynthBlob& o : blobs) {
                const double d2 = (b.x - o.x) * (b.x - o.x) + (b.y - o.y) * (b.y - o.y);
                const double min_d = 4.0 * (b.sigma + o.sigma);
                if (d2 < min_d * min_d) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed)
            throw std::runtime_error("synth_mc_cluster: disk too small to place non-overlapping blobs");
        blobs.push_back(b);
    }
    return blobs;
}

ImageGrid render_synth_blobs(const SynthMcParams& p, const std::vector<SynthBlob>& blobs) {
    ImageGrid out(p.size, p.size, 0.0f);
    std::vector<double> acc(out.size(), 0.0);
    for (const SynthBlob& b : blobs) {
        const double inv2s2 = 1.0 / (2.0 * b.sigma * b.sigma);
        for (int y = 0; y < p.size; ++y)
            for (int x = 0; x < p.size; ++x) {
                const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
                acc[static_cast<std::size_t>(y) * p.size + x] += b.amp * std::exp(-d2 * inv2s2);
            }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = static_cast<float>(acc[i]);
    return out;
}

ImageGrid synth_mc_cluster(const SynthMcParams& p, std::uint64_t seed) {
    return render_synth_blobs(p, sample_synth_blobs(p, seed));
}

namespace {

ImageGrid load_png_gray(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        std::fclose(fp);
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("failed to decode " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error(path + ": only grayscale PNG is supported");
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_swap(png); // little-endian reads
    png_read_update_info(png, info);
    depth = png_get_bit_depth(png, info);

    std::vector<png_byte> rowbuf(png_get_rowbytes(png, info));
    ImageGrid out(static_cast<int>(w), static_cast<int>(h));
    const float scale = depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, rowbuf.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x) {
            if (depth == 16) {
                const std::uint16_t* p16 = reinterpret_cast<const std::uint16_t*>(rowbuf.data());
                out.at(static_cast<int>(x), static_cast<int>(y)) = p16[x] * scale;
            } else {
                out.at(static_cast<int>(x), static_cast<int>(y)) = rowbuf[x] * scale;
            }
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return out;
}

ImageGrid load_raw_f32(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open " + path);
    std::uint32_t wh[2];
    if (std::fread(wh, sizeof(std::uint32_t), 2, fp) != 2) {
        std::fclose(fp);
        throw std::runtime_error(path + ": truncated raw-f32 header");
    }
    if (wh[0] == 0 || wh[1] == 0 || wh[0] > 1u << 16 || wh[1] > 1u << 16) {
        std::fclose(fp);
        throw std::runtime_error(path + ": implausible raw-f32 dimensions");
    }
    ImageGrid out(static_cast<int>(wh[0]), static_cast<int>(wh[1]));
    if (std::fread(out.values.data(), sizeof(float), out.size(), fp) != out.size()) {
        std::fclose(fp);
        throw std::runtime_error(path + ": truncated raw-f32 payload");
    }
    std::fclose(fp);
    // normalize to [0, 1] when outside
    const float lo = out.min_value(), hi = out.max_value();
    if (lo < 0.0f || hi > 1.0f) {
        const float range = hi - lo;
        if (range > 0.0f)
            for (float& v : out.values) v = (v - lo) / range;
        else
            out.fill(0.0f);
    }
    return out;
}

} // namespace

std::vector<ImageGrid> load_crop_library(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("crop library: not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".f32") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    std::vector<ImageGrid> out;
    for (const std::string& f : files) {
        if (f.size() >= 4 && f.substr(f.size() - 4) == ".png")
            out.push_back(load_png_gray(f));
        else
            out.push_back(load_raw_f32(f));
    }
    if (out.empty()) throw std::runtime_error("crop library: no .png or .f32 files in " + dir);
    return out;
}

std::vector<ImageGrid> make_mc_library(const McSignalSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (!spec.library_path.empty()) {
        auto lib = load_crop_library(spec.library_path);
        for (const auto& img : lib)
            if (spec.crop_size > img.width || spec.crop_size > img.height)
                throw std::runtime_error("crop library: crop larger than source image");
        return lib;
    }
    std::vector<ImageGrid> lib;
    lib.reserve(spec.synth_library_size);
    for (int i = 0; i < spec.synth_library_size; ++i)
        lib.push_back(synth_mc_cluster(spec.synth, derive_seed(seed, "mc-library", i)));
    return lib;
}

ImageGrid rotate_bilinear(const ImageGrid& img, double angle_deg) {
    const double a = angle_deg * std::numbers::pi / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    ImageGrid out(img.width, img.height, 0.0f);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse map into the source
            const double dx = x - cx, dy = y - cy;
            const double sx = ca * dx + sa * dy + cx;
            const double sy = -sa * dx + ca * dy + cy;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;
            const double fx = sx - x0, fy = sy - y0;
            auto sample = [&](int xi, int yi) -> double {
                if (xi < 0 || yi < 0 || xi >= img.width || yi >= img.height) return 0.0; // zero pad
                return img.at(xi, yi);
            };
            const double v = (1 - fy) * ((1 - fx) * sample(x0, y0) + fx * sample(x0 + 1, y0)) +
                             fy * ((1 - fx) * sample(x0, y0 + 1) + fx * sample(x0 + 1, y0 + 1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

ImageGrid apply_mc_contrast(const ImageGrid& background, const ImageGrid& s_mc, double contrast) {
    if (!background.same_dims(s_mc))
        throw std::invalid_argument("apply_mc_contrast: dimension mismatch");
    ImageGrid out(background.width, background.height);
    const float c = static_cast<float>(contrast);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = background.values[i] * (c * s_mc.values[i] + 1.0f);
    return out;
}

ImageGrid insert_mc_cluster(const ImageGrid& background, const std::vector<ImageGrid>& library,
                            const McSignalSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (library.empty()) throw std::invalid_argument("insert_mc_cluster: empty cluster library");
    if (background.width != spec.crop_size || background.height != spec.crop_size)
        throw std::invalid_argument("insert_mc_cluster: background does not match crop size");

    Rng rng(seed);
    const auto idx = rng.uniform_int(library.size());
    const double angle = rng.uniform(0.0, 360.0);
    const double c = rng.uniform(spec.contrast_lo, spec.contrast_hi);

    const ImageGrid& src = library[idx];
    if (spec.crop_size > src.width || spec.crop_size > src.height)
        throw std::invalid_argument("insert_mc_cluster: crop larger than rotated image");
    const ImageGrid rotated = rotate_bilinear(src, angle);
    const ImageGrid s_mc = central_crop(rotated, spec.crop_size, spec.crop_size);
    return apply_mc_contrast(background, s_mc, c);
}

} // namespace tbiq
