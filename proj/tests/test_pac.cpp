#include "doctest.h"

#include <cmath>

#include "fuzconv/errors.hpp"
#include "fuzconv/model.hpp"
#include "fuzconv/pac.hpp"
#include "fuzconv/util.hpp"

using namespace fuzconv;

namespace {

Tensor random_map(Rng& rng, int b, int c, int h, int w) {
    std::vector<double> data(static_cast<std::size_t>(b) * c * h * w);
    for (auto& v : data) v = uniform(rng, -1.5, 1.5);
    return Tensor::from_data({b, c, h, w}, std::move(data));
}

} // namespace

TEST_CASE("pac_stage_channels: growth rounding with floor at 1") {
    CHECK(pac_stage_channels(1, 2.0, 0) == 1);
    CHECK(pac_stage_channels(1, 2.0, 1) == 2);
    CHECK(pac_stage_channels(1, 2.0, 3) == 8);
    CHECK(pac_stage_channels(1, 1.5, 1) == 2);  // round(1.5)
    CHECK(pac_stage_channels(1, 1.2, 1) == 1);  // round(1.2)
    CHECK(pac_stage_channels(3, 1.5, 2) == 7);  // round(6.75)
}

TEST_CASE("pac_output_shape and spatial underflow") {
    PacConfig cfg;
    cfg.depth = 2;
    cfg.v_len = 3;
    cfg.h_len = 2;
    auto shape = pac_output_shape(cfg, 1, 10, 7);
    CHECK(shape.height == 6);
    CHECK(shape.width == 5);
    CHECK(shape.channels == 4);
    CHECK_THROWS_AS((void)pac_output_shape(cfg, 1, 4, 7), Error);
    try {
        (void)pac_output_shape(cfg, 1, 4, 7);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpatialUnderflow);
    }
}

TEST_CASE("resolve_auto_depth keeps both dims at least 2") {
    PacConfig cfg;
    cfg.v_len = 3;
    cfg.h_len = 2;
    CHECK(resolve_auto_depth(cfg, 10, 7) == 4); // min((10-2)/2, (7-2)/1) = 4
    CHECK(resolve_auto_depth(cfg, 5, 9) == 1);
    cfg.v_len = 1;
    cfg.h_len = 1;
    CHECK(resolve_auto_depth(cfg, 4, 4) == 1); // pointwise stages never shrink
}

TEST_CASE("pac_branch: ones input, ones kernels, hand-counted output") {
    PacConfig cfg;
    cfg.depth = 1;
    cfg.v_len = 2;
    cfg.h_len = 3;
    cfg.growth = 1.0;
    Rng rng(61);
    PacState st = make_pac_state(cfg, 1, 4, 6, rng);
    st.vertical_kernels[0].data().assign(st.vertical_kernels[0].size(), 1.0);
    st.horizontal_kernels[0].data().assign(st.horizontal_kernels[0].size(), 1.0);
    auto x = Tensor::from_data({1, 1, 4, 6}, std::vector<double>(24, 1.0));
    auto y = pac_branch(x, cfg, st);
    REQUIRE(y.shape() == Shape{1, 1, 3, 4});
    for (double v : y.data()) CHECK(v == doctest::Approx(6.0)); // 2 * 3 ones
}

TEST_CASE("pac_branch: pointwise identity stage") {
    PacConfig cfg;
    cfg.depth = 1;
    cfg.v_len = 1;
    cfg.h_len = 1;
    cfg.growth = 1.0;
    Rng rng(62);
    PacState st = make_pac_state(cfg, 1, 3, 5, rng);
    st.vertical_kernels[0].data() = {1.0};
    st.horizontal_kernels[0].data() = {1.0};
    auto x = random_map(rng, 2, 1, 3, 5);
    auto y = pac_branch(x, cfg, st);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("pac_branch: rank-1 stages degenerate to full square convolution") {
    Rng rng(63);
    for (int v : {2, 3}) {
        PacConfig cfg;
        cfg.depth = 1;
        cfg.v_len = v;
        cfg.h_len = v;
        cfg.growth = 1.0;
        PacState st = make_pac_state(cfg, 1, 7, 7, rng);
        std::vector<double> col(v), row(v), full;
        for (auto& x : col) x = uniform(rng, -2, 2);
        for (auto& x : row) x = uniform(rng, -2, 2);
        for (int i = 0; i < v; ++i)
            for (int j = 0; j < v; ++j) full.push_back(col[i] * row[j]);
        st.vertical_kernels[0] = Tensor::from_data({1, 1, v, 1}, col, true);
        st.horizontal_kernels[0] = Tensor::from_data({1, 1, 1, v}, row, true);

        auto x = random_map(rng, 1, 1, 7, 7);
        auto seq = pac_branch(x, cfg, st);
        auto direct = conv2d_valid(x, Tensor::from_data({1, 1, v, v}, full));
        REQUIRE(seq.shape() == direct.shape());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const double rel = std::abs(seq.data()[i] - direct.data()[i]) /
                               std::max(1.0, std::abs(direct.data()[i]));
            CHECK(rel <= 1e-10);
        }
    }
}

TEST_CASE("pac_branch: receptive field probed with an impulse") {
    PacConfig cfg;
    cfg.depth = 2;
    cfg.v_len = 3;
    cfg.h_len = 2;
    cfg.growth = 1.0;
    Rng rng(64);
    PacState st = make_pac_state(cfg, 1, 11, 11, rng);
    for (auto& k : st.vertical_kernels) k.data().assign(k.size(), 1.0);
    for (auto& k : st.horizontal_kernels) k.data().assign(k.size(), 1.0);

    std::vector<double> data(11 * 11, 0.0);
    data[5 * 11 + 5] = 1.0; // single impulse in the middle
    auto y = pac_branch(Tensor::from_data({1, 1, 11, 11}, data), cfg, st);
    // nonzero support must be exactly (K*(V-1)+1) x (K*(H-1)+1) = 5 x 3
    const int oh = y.shape()[2], ow = y.shape()[3];
    int min_r = oh, max_r = -1, min_c = ow, max_c = -1;
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            if (y.data()[r * ow + c] != 0.0) {
                min_r = std::min(min_r, r);
                max_r = std::max(max_r, r);
                min_c = std::min(min_c, c);
                max_c = std::max(max_c, c);
            }
        }
    }
    CHECK(max_r - min_r + 1 == 5);
    CHECK(max_c - min_c + 1 == 3);
}

TEST_CASE("residual_branch: constants map to constants, shapes match pac_branch") {
    Rng rng(65);
    PacConfig cfg;
    cfg.depth = 1;
    cfg.v_len = 1;
    cfg.h_len = 1;
    cfg.growth = 1.0;
    PacState st = make_pac_state(cfg, 1, 3, 4, rng);
    st.conv1x1.data() = {0.5};
    st.residual_bn.training = false;
    st.residual_bn.running_mean = {0.0};
    st.residual_bn.running_var = {1.0 - st.residual_bn.epsilon};
    auto x = Tensor::from_data({1, 1, 3, 4}, std::vector<double>(12, 3.0));
    auto y = residual_branch(x, cfg, st);
    REQUIRE(y.shape() == Shape{1, 1, 3, 4}); // 1x1 pooling is a no-op
    for (double v : y.data()) CHECK(v == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("residual_branch output shape equals pac_branch output shape") {
    Rng rng(66);
    for (int rep = 0; rep < 50; ++rep) {
        PacConfig cfg;
        cfg.depth = 1 + static_cast<int>(uniform_index(rng, 3));
        cfg.v_len = 1 + static_cast<int>(uniform_index(rng, 3));
        cfg.h_len = 1 + static_cast<int>(uniform_index(rng, 3));
        cfg.growth = 1.0 + uniform(rng, 0.0, 1.5);
        const int h = cfg.depth * (cfg.v_len - 1) + 2 + static_cast<int>(uniform_index(rng, 4));
        const int w = cfg.depth * (cfg.h_len - 1) + 2 + static_cast<int>(uniform_index(rng, 4));
        PacState st = make_pac_state(cfg, 1, h, w, rng);
        auto x = random_map(rng, 2, 1, h, w);
        auto y1 = pac_branch(x, cfg, st);
        auto y2 = residual_branch(x, cfg, st);
        CHECK(y1.shape() == y2.shape());
    }
}

TEST_CASE("fuse_and_predict: zero second branch reduces to the head alone") {
    Rng rng(67);
    PacConfig cfg;
    cfg.depth = 1;
    cfg.v_len = 2;
    cfg.h_len = 2;
    cfg.growth = 2.0;
    cfg.head_hidden = 8;
    PacState st = make_pac_state(cfg, 1, 4, 5, rng);
    auto y1 = random_map(rng, 3, 2, 3, 4);
    auto zero = Tensor({3, 2, 3, 4}, 0.0);
    auto out = fuse_and_predict(y1, zero, st);
    auto direct = bilinear_head(flatten_rows(y1), st.head_w1, st.head_b1, st.head_w2, st.head_b2);
    REQUIRE(out.shape() == Shape{3, 1});
    for (int i = 0; i < 3; ++i) CHECK(out.data()[i] == direct.data()[i]);

    // commutativity of the fusion
    auto y2 = random_map(rng, 3, 2, 3, 4);
    auto ab = fuse_and_predict(y1, y2, st);
    auto ba = fuse_and_predict(y2, y1, st);
    for (int i = 0; i < 3; ++i) CHECK(ab.data()[i] == ba.data()[i]);
}

TEST_CASE("fuse_and_predict: matches explicit dense-algebra reference") {
    Rng rng(68);
    PacConfig cfg;
    cfg.depth = 1;
    cfg.v_len = 1;
    cfg.h_len = 1;
    cfg.growth = 1.0;
    cfg.head_hidden = 4;
    PacState st = make_pac_state(cfg, 1, 2, 3, rng);
    auto a = random_map(rng, 1, 1, 2, 3);
    auto b = random_map(rng, 1, 1, 2, 3);
    auto out = fuse_and_predict(a, b, st);

    // explicit reference: sum, two affine maps with a rectifier between
    std::vector<double> fused(6);
    for (int i = 0; i < 6; ++i) fused[i] = a.data()[i] + b.data()[i];
    std::vector<double> hidden(4);
    for (int o = 0; o < 4; ++o) {
        double acc = st.head_b1.data()[o];
        for (int d = 0; d < 6; ++d) acc += st.head_w1.data()[o * 6 + d] * fused[d];
        hidden[o] = std::max(0.0, acc);
    }
    double ref = st.head_b2.data()[0];
    for (int o = 0; o < 4; ++o) ref += st.head_w2.data()[o] * hidden[o];
    CHECK(out.data()[0] == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("model: forward shape, determinism, gradcheck of the full composite") {
    ModelConfig cfg;
    cfg.window_size = 6;
    cfg.baa.filter_length = 2;
    cfg.baa.stride = 1;
    cfg.pac.depth = 1;
    cfg.pac.v_len = 3;
    cfg.pac.h_len = 2;
    cfg.pac.growth = 2.0;
    cfg.pac.head_hidden = 8;
    cfg.seed = 77;

    ForecastModel model(cfg, 3); // input width 7
    Rng rng(70);
    std::vector<double> data(2 * 6 * 7);
    for (auto& v : data) v = uniform(rng, -1, 1);
    auto x = Tensor::from_data({2, 1, 6, 7}, data);
    auto y = model.forward(x);
    REQUIRE(y.shape() == Shape{2, 1});

    // same seed, same architecture -> identical parameters and outputs
    ForecastModel model2(cfg, 3);
    auto y2 = model2.forward(x);
    CHECK(y.data() == y2.data());

    // full-composite gradient check
    std::vector<double> coeffs{0.7, -0.3};
    auto fn = [&]() { return weighted_sum(flatten_rows(model.forward(x)), coeffs); };
    auto rep = grad_check(fn, model.parameters());
    CHECK(rep.worst() <= 1e-4);
}

TEST_CASE("model: state export/load round-trips and fingerprints discriminate") {
    ModelConfig cfg;
    cfg.window_size = 5;
    cfg.baa.filter_length = 2;
    cfg.baa.stride = 1;
    cfg.pac.depth = 1;
    cfg.pac.v_len = 2;
    cfg.pac.h_len = 2;
    cfg.pac.head_hidden = 4;
    cfg.seed = 99;
    ForecastModel a(cfg, 3);

    ModelConfig cfg2 = cfg;
    cfg2.seed = 100;
    ForecastModel b(cfg2, 3);
    CHECK(a.fingerprint() != b.fingerprint());

    auto state = a.export_state();
    b = ForecastModel(cfg, 3);
    // perturb b's parameters, then restore from a's state
    for (auto& p : b.parameters()) {
        for (auto& v : p.value.data()) v += 0.123;
    }
    b.load_state(state);
    Rng rng(71);
    std::vector<double> data(1 * 5 * 7);
    for (auto& v : data) v = uniform(rng, -1, 1);
    auto x = Tensor::from_data({1, 1, 5, 7}, data);
    a.set_training(false);
    b.set_training(false);
    CHECK(a.forward(x).data() == b.forward(x).data());
}

TEST_CASE("model: window size 1 is rejected naming the divisor") {
    ModelConfig cfg;
    cfg.window_size = 1;
    try {
        cfg.validate();
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("window_size - 1") != std::string::npos);
    }
}
