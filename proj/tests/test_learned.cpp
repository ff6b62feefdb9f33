#include <doctest.h>

#include <cmath>

#include "core/learned.hpp"
#include "core/rng.hpp"
#include "core/roc.hpp"

using namespace tbiq;

TEST_CASE("spec validation pins the depth set") {
    LearnedObserverSpec s;
    for (int b : {2, 4, 6, 8}) {
        s.n_residual_blocks = b;
        CHECK_NOTHROW(build_learned_observer(s, nullptr, 32, 1));
    }
    s.n_residual_blocks = 3;
    CHECK_THROWS(s.validate());
}

TEST_CASE("block count equals the number of skip connections") {
    LearnedObserverSpec s;
    s.n_residual_blocks = 2;
    const Network<float> net = build_learned_observer(s, nullptr, 32, 1);
    int residuals = 0;
    for (const auto& d : net.layers) residuals += d.kind == LayerKind::Residual;
    CHECK(residuals == 2);
    CHECK(net.layers.back().kind == LayerKind::Sigmoid);
}

TEST_CASE("zeroing both convolutions turns a block into the identity") {
    Network<double> net = Network<double>::build({LayerDesc::residual(3, 4)}, 3);
    for (auto& p : net.params) p = 0.0;
    Tensor4<double> x(1, 4, 6, 6);
    Rng rng(7);
    for (auto& v : x.v) v = rng.gauss();
    const Tensor4<double> y = net.forward(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.v[i] == x.v[i]);
}

TEST_CASE("untrained zero-weight observer scores one half everywhere") {
    LearnedObserverSpec s;
    Network<float> net = build_learned_observer(s, nullptr, 16, 5);
    for (auto& p : net.params) p = 0.0f;
    Rng rng(9);
    for (int i = 0; i < 3; ++i) {
        ImageGrid img(16, 16);
        for (auto& v : img.values) v = static_cast<float>(rng.gauss());
        CHECK(score_learned(net, img) == doctest::Approx(0.5));
    }
}

TEST_CASE("scores are deterministic and inside (0,1)") {
    LearnedObserverSpec s;
    const Network<float> net = build_learned_observer(s, nullptr, 16, 6);
    ImageGrid img(16, 16);
    Rng rng(10);
    for (auto& v : img.values) v = static_cast<float>(rng.gauss());
    const double a = score_learned(net, img);
    CHECK(a == score_learned(net, img));
    CHECK(a > 0.0);
    CHECK(a < 1.0);
}

TEST_CASE("rho template seeds the first stem filter") {
    LinearTemplate rho;
    rho.weights = Eigen::VectorXd::Zero(16 * 16);
    // recognizable pattern at the crop center: the central 3x3 footprint of a
    // 16-wide template covers columns/rows 6..8, centered at (7,7)
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) rho.weights[y * 16 + x] = (x == 7 && y == 7) ? 5.0 : 0.0;
    LearnedObserverSpec s;
    s.rho_init = true;
    const Network<float> net = build_learned_observer(s, &rho, 16, 7);
    // stem filter 0 is the rescaled central 3x3 crop: a single positive peak
    const float* w0 = net.params.data();
    int nonzero = 0;
    for (int i = 0; i < 9; ++i) nonzero += w0[i] != 0.0f;
    CHECK(nonzero == 1);
    CHECK(w0[4] > 0.0f); // the peak lands at the kernel center
    // mismatched template is rejected
    CHECK_THROWS(build_learned_observer(s, &rho, 32, 7));
    CHECK_THROWS(build_learned_observer(s, nullptr, 16, 7));
}

TEST_CASE("flip augmentation quadruples the index space deterministically") {
    std::vector<ImageGrid> imgs;
    ImageGrid img(4, 4);
    for (int i = 0; i < 16; ++i) img.values[i] = static_cast<float>(i);
    imgs.push_back(img);
    LabeledImageSource src(imgs, {1}, true);
    CHECK(src.size() == 4);
    Tensor4<float> x, y;
    src.fill({0, 1, 2, 3}, 0, x, y);
    CHECK(x.at(0, 0, 0, 0) == 0.0f);
    CHECK(x.at(1, 0, 0, 3) == 0.0f);  // horizontal flip
    CHECK(x.at(2, 0, 3, 0) == 0.0f);  // vertical flip
    CHECK(x.at(3, 0, 3, 3) == 0.0f);  // both
    for (int i = 0; i < 4; ++i) CHECK(y.v[i] == 1.0f);
}

TEST_CASE("on-the-fly generator receives the epoch and the canonical view") {
    std::vector<int> epochs_seen;
    auto gen = [&epochs_seen](int, int epoch) {
        epochs_seen.push_back(epoch);
        return ImageGrid(4, 4, static_cast<float>(epoch));
    };
    LabeledImageSource src(2, 4, 4, gen, {0, 1}, false);
    Tensor4<float> x, y;
    src.fill({0, 1}, 5, x, y);
    CHECK(x.v[0] == 5.0f);
    src.fill({0}, -1, x, y);
    CHECK(x.v[0] == -1.0f);
    CHECK(epochs_seen == std::vector<int>{5, 5, -1});
}

TEST_CASE("trained observer separates an easy toy task") {
    // class 1 carries a bright centered bump, class 0 is pure noise
    const int n_train = 64, n_val = 32, n_test = 60, side = 16;
    auto make = [&](int count, std::uint64_t seed, std::vector<ImageGrid>& imgs,
                    std::vector<int>& labels) {
        Rng rng(seed);
        for (int i = 0; i < count; ++i) {
            const int label = i % 2;
            ImageGrid img(side, side);
            for (auto& v : img.values) v = static_cast<float>(0.3 * rng.gauss());
            if (label)
                for (int y = 5; y < 11; ++y)
                    for (int x = 5; x < 11; ++x) img.at(x, y) += 1.0f;
            imgs.push_back(std::move(img));
            labels.push_back(label);
        }
    };
    std::vector<ImageGrid> tr, va, te;
    std::vector<int> trl, val, tel;
    make(n_train, 1, tr, trl);
    make(n_val, 2, va, val);
    make(n_test, 3, te, tel);

    LearnedObserverSpec spec;
    spec.filters = 8;
    Network<float> net = build_learned_observer(spec, nullptr, side, 11);
    LabeledImageSource train_src(tr, trl, false), val_src(va, val, false);
    TrainConfig cfg;
    cfg.learning_rate = 2e-3;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.loss = LossKind::Bce;
    cfg.seed = 12;
    train(net, train_src, val_src, cfg);

    std::vector<double> s0, s1;
    for (int i = 0; i < n_test; ++i)
        (tel[i] == 0 ? s0 : s1).push_back(score_learned(net, te[i]));
    CHECK(auc_point(s0, s1) > 0.95);
}
