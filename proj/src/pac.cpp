#include "fuzconv/pac.hpp"

#include <cmath>

#include "fuzconv/errors.hpp"

namespace fuzconv {

void PacConfig::validate() const {
    if (depth < 1 && !depth_auto) {
        raise(ErrorCode::InvalidConfig, "pac depth must be >= 1");
    }
    if (v_len < 1 || h_len < 1) {
        raise(ErrorCode::InvalidConfig, "pac filter lengths must be >= 1");
    }
    if (growth < 1.0) {
        raise(ErrorCode::InvalidConfig, "pac growth rate must be >= 1");
    }
    if (head_hidden < 1) {
        raise(ErrorCode::InvalidConfig, "pac head_hidden must be >= 1");
    }
}

int pac_stage_channels(int base_channels, double growth, int stage) {
    const double c = base_channels * std::pow(growth, stage);
    return std::max(1, static_cast<int>(std::llround(c)));
}

PacShape pac_output_shape(const PacConfig& cfg, int in_channels, int in_h, int in_w) {
    int h = in_h, w = in_w;
    for (int k = 1; k <= cfg.depth; ++k) {
        h -= cfg.v_len - 1;
        w -= cfg.h_len - 1;
        if (h < 1 || w < 1) {
            raise(ErrorCode::SpatialUnderflow,
                  "stage " + std::to_string(k) + " would shrink the feature map to " +
                      std::to_string(h) + "x" + std::to_string(w));
        }
    }
    return {pac_stage_channels(in_channels, cfg.growth, cfg.depth), h, w};
}

int resolve_auto_depth(const PacConfig& cfg, int in_h, int in_w) {
    int k = INT32_MAX;
    if (cfg.v_len > 1) k = std::min(k, (in_h - 2) / (cfg.v_len - 1));
    if (cfg.h_len > 1) k = std::min(k, (in_w - 2) / (cfg.h_len - 1));
    if (k == INT32_MAX) k = 1; // pointwise stages never shrink the map
    return std::max(1, k);
}

namespace {

Tensor init_conv_kernel(int f, int c, int kh, int kw, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c) * kh * kw);
    std::vector<double> w(static_cast<std::size_t>(f) * c * kh * kw);
    for (auto& v : w) v = uniform(rng, -bound, bound);
    return Tensor::from_data({f, c, kh, kw}, std::move(w), true);
}

Tensor init_linear_weight(int o, int d, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> w(static_cast<std::size_t>(o) * d);
    for (auto& v : w) v = uniform(rng, -bound, bound);
    return Tensor::from_data({o, d}, std::move(w), true);
}

} // namespace

PacState make_pac_state(const PacConfig& cfg, int in_channels, int in_h, int in_w, Rng& rng) {
    cfg.validate();
    const PacShape out = pac_output_shape(cfg, in_channels, in_h, in_w);

    PacState st;
    int f_prev = in_channels;
    for (int k = 1; k <= cfg.depth; ++k) {
        const int f_next = pac_stage_channels(in_channels, cfg.growth, k);
        st.vertical_kernels.push_back(init_conv_kernel(f_next, f_prev, cfg.v_len, 1, rng));
        st.horizontal_kernels.push_back(init_conv_kernel(f_next, f_next, 1, cfg.h_len, rng));
        f_prev = f_next;
    }
    st.conv1x1 = init_conv_kernel(out.channels, in_channels, 1, 1, rng);
    st.residual_bn = BatchNormState(out.channels);

    const int flat = out.channels * out.height * out.width;
    st.head_w1 = init_linear_weight(cfg.head_hidden, flat, rng);
    st.head_b1 = Tensor({cfg.head_hidden}, 0.0, true);
    st.head_w2 = init_linear_weight(1, cfg.head_hidden, rng);
    st.head_b2 = Tensor({1}, 0.0, true);
    return st;
}

Tensor pac_branch(const Tensor& input, const PacConfig& cfg, const PacState& state) {
    if (static_cast<int>(state.vertical_kernels.size()) != cfg.depth) {
        raise(ErrorCode::ShapeMismatch, "pac state depth differs from config depth");
    }
    Tensor y = input;
    for (int k = 0; k < cfg.depth; ++k) {
        y = conv2d_valid(y, state.vertical_kernels[k]);   // V x 1 first
        y = conv2d_valid(y, state.horizontal_kernels[k]); // then 1 x H
    }
    return y;
}

Tensor residual_branch(const Tensor& input, const PacConfig& cfg, PacState& state) {
    const int ph = cfg.depth * (cfg.v_len - 1) + 1;
    const int pw = cfg.depth * (cfg.h_len - 1) + 1;
    Tensor pooled = avg_pool2d(input, ph, pw);
    Tensor mapped = conv2d_valid(pooled, state.conv1x1);
    return batch_norm(mapped, state.residual_bn);
}

Tensor fuse_and_predict(const Tensor& y1, const Tensor& y2, const PacState& state) {
    if (y1.shape() != y2.shape()) {
        raise(ErrorCode::ShapeMismatch, "fuse_and_predict: branch shapes differ");
    }
    Tensor fused = add(y1, y2);
    Tensor flat = flatten_rows(fused);
    return bilinear_head(flat, state.head_w1, state.head_b1, state.head_w2, state.head_b2);
}

std::vector<NamedParam> pac_parameters(const PacState& state, const std::string& prefix) {
    std::vector<NamedParam> out;
    for (std::size_t k = 0; k < state.vertical_kernels.size(); ++k) {
        out.push_back({prefix + ".stage" + std::to_string(k) + ".vertical", state.vertical_kernels[k]});
        out.push_back({prefix + ".stage" + std::to_string(k) + ".horizontal", state.horizontal_kernels[k]});
    }
    out.push_back({prefix + ".residual.conv1x1", state.conv1x1});
    out.push_back({prefix + ".residual.bn.gamma", state.residual_bn.gamma});
    out.push_back({prefix + ".residual.bn.beta", state.residual_bn.beta});
    out.push_back({prefix + ".head.w1", state.head_w1});
    out.push_back({prefix + ".head.b1", state.head_b1});
    out.push_back({prefix + ".head.w2", state.head_w2});
    out.push_back({prefix + ".head.b2", state.head_b2});
    return out;
}

} // namespace fuzconv
