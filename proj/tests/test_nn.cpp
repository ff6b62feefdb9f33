#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "core/nn.hpp"
#include "core/rng.hpp"

using namespace tbiq;

namespace {

Tensor4<double> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor4<double> t(n, c, h, w);
    Rng rng(seed);
    for (auto& v : t.v) v = rng.gauss();
    return t;
}

double loss_value(const Network<double>& net, const Tensor4<double>& x, const Tensor4<double>& y,
                  LossKind kind) {
    const Tensor4<double> out = net.forward(x);
    return kind == LossKind::Mse ? mse_loss(out, y) : 0.0;
}

// analytic vs central finite differences over every parameter
void gradient_check(Network<double>& net, const Tensor4<double>& x, const Tensor4<double>& y,
                    LossKind kind, double h = 1e-5, double tol = 1e-6) {
    ForwardCache<double> cache;
    net.forward(x, &cache);
    Tensor4<double> grad_out;
    if (kind == LossKind::Mse)
        mse_loss(cache.output, y, &grad_out);
    else
        REQUIRE(false);
    std::vector<double> grads;
    net.backward(cache, grad_out, grads);

    double max_rel = 0.0;
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const double keep = net.params[i];
        net.params[i] = keep + h;
        const double lp = loss_value(net, x, y, kind);
        net.params[i] = keep - h;
        const double lm = loss_value(net, x, y, kind);
        net.params[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(grads[i] - fd) / std::max({std::abs(grads[i]), std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < tol);
}

} // namespace

TEST_CASE("1x1 identity convolution is the identity") {
    Network<double> net = Network<double>::build({LayerDesc::conv(1, 1, 1)}, 0);
    net.params[0] = 1.0; // weight
    net.params[1] = 0.0; // bias
    const Tensor4<double> x = random_tensor(2, 1, 5, 7, 3);
    const Tensor4<double> y = net.forward(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.v[i] == doctest::Approx(x.v[i]));
}

TEST_CASE("unit impulse reproduces the flipped kernel") {
    Network<double> net = Network<double>::build({LayerDesc::conv(3, 1, 1)}, 0);
    for (int i = 0; i < 9; ++i) net.params[i] = i + 1; // kernel rows 1..9
    net.params[9] = 0.0;
    Tensor4<double> x(1, 1, 7, 7);
    x.at(0, 0, 3, 3) = 1.0;
    const Tensor4<double> y = net.forward(x);
    for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
            // cross-correlation: the kernel appears flipped around the impulse
            const double want = net.params[ky * 3 + kx];
            CHECK(y.at(0, 0, 3 - (ky - 1), 3 - (kx - 1)) == doctest::Approx(want));
        }
}

TEST_CASE("convolution matches the naive six-loop oracle") {
    const int k = 3, in_ch = 2, out_ch = 3, H = 5, W = 6;
    Network<double> net = Network<double>::build({LayerDesc::conv(k, in_ch, out_ch)}, 5);
    const Tensor4<double> x = random_tensor(2, in_ch, H, W, 11);
    const Tensor4<double> y = net.forward(x);

    const double* wts = net.params.data();
    const double* bias = wts + out_ch * in_ch * k * k;
    const int p = k / 2;
    for (int n = 0; n < 2; ++n)
        for (int oc = 0; oc < out_ch; ++oc)
            for (int yy = 0; yy < H; ++yy)
                for (int xx = 0; xx < W; ++xx) {
                    double acc = bias[oc];
                    for (int ic = 0; ic < in_ch; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int sy = yy + ky - p, sx = xx + kx - p;
                                if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                                acc += wts[((oc * in_ch + ic) * k + ky) * k + kx] *
                                       x.at(n, ic, sy, sx);
                            }
                    CHECK(y.at(n, oc, yy, xx) == doctest::Approx(acc).epsilon(1e-6));
                }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
    Network<double> net = Network<double>::build(
        {LayerDesc::conv(3, 1, 2), LayerDesc::relu(), LayerDesc::conv(3, 2, 1)}, 7);
    const Tensor4<double> x = random_tensor(1, 1, 6, 6, 13);
    ForwardCache<double> cache;
    net.forward(x, &cache);
    Tensor4<double> zero(1, 1, 6, 6);
    std::vector<double> grads;
    net.backward(cache, zero, grads);
    for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("backward without a cache is rejected") {
    Network<double> net = Network<double>::build({LayerDesc::conv(1, 1, 1)}, 0);
    ForwardCache<double> cache; // never filled
    std::vector<double> grads;
    CHECK_THROWS(net.backward(cache, Tensor4<double>(1, 1, 2, 2), grads));
}

TEST_CASE("single dense layer gradient equals the closed form") {
    Network<double> net = Network<double>::build({LayerDesc::dense(3, 1)}, 1);
    const Tensor4<double> x = random_tensor(4, 3, 1, 1, 17);
    Tensor4<double> y(4, 1, 1, 1);
    for (int i = 0; i < 4; ++i) y.v[i] = 0.5 * i;

    ForwardCache<double> cache;
    net.forward(x, &cache);
    Tensor4<double> grad;
    mse_loss(cache.output, y, &grad);
    std::vector<double> grads;
    net.backward(cache, grad, grads);

    // dL/dW_j = (2/n) sum_i (yhat_i - y_i) x_ij
    for (int j = 0; j < 3; ++j) {
        double want = 0.0;
        for (int i = 0; i < 4; ++i)
            want += 2.0 / 4.0 * (cache.output.v[i] - y.v[i]) * x.at(i, j, 0, 0);
        CHECK(grads[j] == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("finite-difference gradient check per layer type") {
    SUBCASE("conv") {
        Network<double> net = Network<double>::build({LayerDesc::conv(3, 1, 2)}, 21);
        gradient_check(net, random_tensor(2, 1, 5, 5, 1), random_tensor(2, 2, 5, 5, 2),
                       LossKind::Mse);
    }
    SUBCASE("conv+relu") {
        Network<double> net =
            Network<double>::build({LayerDesc::conv(3, 1, 2), LayerDesc::relu()}, 22);
        gradient_check(net, random_tensor(2, 1, 5, 5, 3), random_tensor(2, 2, 5, 5, 4),
                       LossKind::Mse);
    }
    SUBCASE("residual") {
        Network<double> net =
            Network<double>::build({LayerDesc::conv(3, 1, 3), LayerDesc::residual(3, 3)}, 23);
        gradient_check(net, random_tensor(1, 1, 6, 6, 5), random_tensor(1, 3, 6, 6, 6),
                       LossKind::Mse);
    }
    SUBCASE("gap+dense+sigmoid") {
        Network<double> net = Network<double>::build(
            {LayerDesc::conv(3, 1, 3), LayerDesc::global_avg_pool(), LayerDesc::dense(3, 1),
             LayerDesc::sigmoid()},
            24);
        gradient_check(net, random_tensor(3, 1, 5, 5, 7), random_tensor(3, 1, 1, 1, 8),
                       LossKind::Mse);
    }
    SUBCASE("composed deep") {
        Network<double> net = Network<double>::build(
            {LayerDesc::conv(3, 1, 4), LayerDesc::relu(), LayerDesc::residual(3, 4),
             LayerDesc::residual(3, 4), LayerDesc::global_avg_pool(), LayerDesc::dense(4, 1),
             LayerDesc::sigmoid()},
            25);
        gradient_check(net, random_tensor(2, 1, 6, 6, 9), random_tensor(2, 1, 1, 1, 10),
                       LossKind::Mse);
    }
}

TEST_CASE("relu output nonnegative, gradient masked exactly below zero") {
    Network<double> net = Network<double>::build({LayerDesc::relu()}, 0);
    Tensor4<double> x(1, 1, 2, 2);
    x.v = {-1.0, 0.0, 2.0, -3.0};
    ForwardCache<double> cache;
    const Tensor4<double> y = net.forward(x, &cache);
    CHECK(y.v[0] == 0.0);
    CHECK(y.v[1] == 0.0);
    CHECK(y.v[2] == 2.0);
    for (double v : y.v) CHECK(v >= 0.0);
    Tensor4<double> g(1, 1, 2, 2);
    g.v = {1.0, 1.0, 1.0, 1.0};
    std::vector<double> pg;
    const Tensor4<double> gx = net.backward(cache, g, pg);
    CHECK(gx.v[0] == 0.0); // pre-activation < 0
    CHECK(gx.v[1] == 1.0); // exactly zero passes
    CHECK(gx.v[2] == 1.0);
    CHECK(gx.v[3] == 0.0);
}

TEST_CASE("bce with logits is finite and correct across the range") {
    Tensor4<double> z(1, 1, 1, 3);
    z.v = {-50.0, 0.0, 50.0};
    Tensor4<double> y(1, 1, 1, 3);
    y.v = {0.0, 1.0, 1.0};
    Tensor4<double> grad;
    const double l = bce_with_logits_loss(z, y, &grad);
    CHECK(std::isfinite(l));
    // z=-50,y=0 contributes ~0; z=0,y=1 contributes ln 2; z=50,y=1 ~0
    CHECK(l == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-9));
    for (double g : grad.v) CHECK(std::isfinite(g));
}

TEST_CASE("adam: zero gradient leaves parameters, advances t") {
    Network<float> net = Network<float>::build({LayerDesc::dense(2, 1)}, 3);
    const std::vector<float> before = net.params;
    AdamState<float> st;
    st.init(net.params.size());
    adam_step(net, st, std::vector<float>(net.params.size(), 0.0f), 1e-3);
    CHECK(st.t == 1);
    CHECK(net.params == before);
}

TEST_CASE("adam first step moves by ~lr per parameter") {
    Network<float> net = Network<float>::build({LayerDesc::dense(4, 2)}, 5);
    const std::vector<float> before = net.params;
    AdamState<float> st;
    st.init(net.params.size());
    const double lr = 1e-3;
    adam_step(net, st, std::vector<float>(net.params.size(), 0.37f), lr);
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        const double delta = static_cast<double>(before[i]) - net.params[i];
        CHECK(delta == doctest::Approx(lr).epsilon(1e-6));
    }
}

TEST_CASE("adam is deterministic and rejects non-finite gradients") {
    Network<float> a = Network<float>::build({LayerDesc::dense(3, 1)}, 9);
    Network<float> b = a;
    AdamState<float> sa, sb;
    sa.init(a.params.size());
    sb.init(b.params.size());
    std::vector<float> g(a.params.size(), 0.1f);
    adam_step(a, sa, g, 1e-2);
    adam_step(b, sb, g, 1e-2);
    CHECK(a.params == b.params);
    g[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS(adam_step(a, sa, g, 1e-2));
}

namespace {

class VecSource : public DataSource {
public:
    VecSource(std::vector<std::array<float, 2>> xs, std::vector<float> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {}
    int size() const override { return static_cast<int>(xs_.size()); }
    int sample_channels() const override { return 2; }
    int sample_height() const override { return 1; }
    int sample_width() const override { return 1; }
    void fill(const std::vector<int>& idx, int, Tensor4<float>& x, Tensor4<float>& y) const override {
        x = Tensor4<float>(static_cast<int>(idx.size()), 2, 1, 1);
        y = Tensor4<float>(static_cast<int>(idx.size()), 1, 1, 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x.at(static_cast<int>(i), 0, 0, 0) = xs_[idx[i]][0];
            x.at(static_cast<int>(i), 1, 0, 0) = xs_[idx[i]][1];
            y.v[i] = ys_[idx[i]];
        }
    }

private:
    std::vector<std::array<float, 2>> xs_;
    std::vector<float> ys_;
};

VecSource toy_separable(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::array<float, 2>> xs;
    std::vector<float> ys;
    for (int i = 0; i < n; ++i) {
        const int label = i % 2;
        const float cx = label ? 2.0f : -2.0f;
        xs.push_back({cx + static_cast<float>(rng.gauss()) * 0.3f,
                      -cx + static_cast<float>(rng.gauss()) * 0.3f});
        ys.push_back(static_cast<float>(label));
    }
    return VecSource(std::move(xs), std::move(ys));
}

} // namespace

TEST_CASE("training with learning rate zero changes nothing") {
    Network<float> net = Network<float>::build(
        {LayerDesc::dense(2, 1), LayerDesc::sigmoid()}, 2);
    const std::vector<float> before = net.params;
    const VecSource train_src = toy_separable(16, 1), val_src = toy_separable(8, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.loss = LossKind::Bce;
    const TrainResult r = train(net, train_src, val_src, cfg);
    CHECK(net.params == before);
    CHECK(r.train_loss.size() == 1);
}

TEST_CASE("toy separable BCE problem: loss falls monotonically at first") {
    Network<float> net = Network<float>::build(
        {LayerDesc::dense(2, 1), LayerDesc::sigmoid()}, 4);
    const VecSource train_src = toy_separable(32, 3), val_src = toy_separable(16, 4);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 40;
    cfg.batch_size = 32; // full batch keeps the descent clean
    cfg.loss = LossKind::Bce;
    cfg.seed = 5;
    const TrainResult r = train(net, train_src, val_src, cfg);
    REQUIRE(r.train_loss.size() == 40);
    for (int e = 1; e < 10; ++e) CHECK(r.train_loss[e] < r.train_loss[e - 1]);
    CHECK(r.train_loss.back() < 0.15);
}

TEST_CASE("divergence is detected and reported") {
    Network<float> net =
        Network<float>::build({LayerDesc::conv(3, 1, 4), LayerDesc::conv(3, 4, 1)}, 6);
    // targets far away + absurd learning rate force non-finite loss
    class Blowup : public DataSource {
    public:
        int size() const override { return 8; }
        int sample_channels() const override { return 1; }
        int sample_height() const override { return 6; }
        int sample_width() const override { return 6; }
        void fill(const std::vector<int>& idx, int, Tensor4<float>& x,
                  Tensor4<float>& y) const override {
            x = Tensor4<float>(static_cast<int>(idx.size()), 1, 6, 6);
            y = Tensor4<float>(static_cast<int>(idx.size()), 1, 6, 6);
            for (auto& v : x.v) v = 1e18f;
            for (auto& v : y.v) v = -1e18f;
        }
    } src;
    TrainConfig cfg;
    cfg.learning_rate = 1e6;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    CHECK_THROWS(train(net, src, src, cfg));
}

TEST_CASE("forward is batch-order independent per sample") {
    Network<float> net = Network<float>::build(
        {LayerDesc::conv(3, 1, 4), LayerDesc::relu(), LayerDesc::residual(3, 4),
         LayerDesc::global_avg_pool(), LayerDesc::dense(4, 1), LayerDesc::sigmoid()},
        8);
    Rng rng(10);
    Tensor4<float> ab(2, 1, 8, 8), ba(2, 1, 8, 8);
    for (std::size_t i = 0; i < ab.plane(); ++i) {
        ab.v[i] = static_cast<float>(rng.gauss());
        ab.v[ab.plane() + i] = static_cast<float>(rng.gauss());
    }
    for (std::size_t i = 0; i < ab.plane(); ++i) {
        ba.v[i] = ab.v[ab.plane() + i];
        ba.v[ab.plane() + i] = ab.v[i];
    }
    const Tensor4<float> y_ab = net.forward(ab);
    const Tensor4<float> y_ba = net.forward(ba);
    CHECK(y_ab.v[0] == y_ba.v[1]); // bitwise: evaluation is per sample
    CHECK(y_ab.v[1] == y_ba.v[0]);
}

TEST_CASE("checkpoint: bit-exact round trip with and without Adam state") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "tbiq_ckpt.olnn").string();
    Network<float> net = Network<float>::build(
        {LayerDesc::conv(9, 1, 8), LayerDesc::relu(), LayerDesc::conv(5, 8, 1)}, 77);
    AdamState<float> st;
    st.init(net.params.size());
    std::vector<float> g(net.params.size(), 0.25f);
    adam_step(net, st, g, 1e-3);

    save_network(path, net, &st);
    AdamState<float> st2;
    const Network<float> back = load_network(path, &st2);
    CHECK(back.params == net.params);
    CHECK(back.layers.size() == net.layers.size());
    CHECK(st2.t == st.t);
    CHECK(st2.m == st.m);
    CHECK(st2.v == st.v);

    // corrupted magic is rejected
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fwrite("XXXX", 1, 4, f);
    std::fclose(f);
    CHECK_THROWS(load_network(path));
    fs::remove(path);
}
