#include "fuzconv/model.hpp"

#include <cstdio>

#include "fuzconv/errors.hpp"

namespace fuzconv {

void ModelConfig::validate() const {
    if (window_size < 2) {
        raise(ErrorCode::InvalidConfig,
              "window_size must be >= 2: tendency accumulation divides by window_size - 1");
    }
    if (baa.filter_length < 1 || baa.stride < 1) {
        raise(ErrorCode::InvalidConfig, "baa filter_length and stride must be >= 1");
    }
    pac.validate();
    if (seed == 0) {
        raise(ErrorCode::InvalidConfig, "seed must be nonzero");
    }
}

std::string canonical_config_string(const ModelConfig& cfg, int resolved_depth, int side_length) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "S=%d;baaK=%d;baaS=%d;baaShared=%d;pacK=%d;V=%d;H=%d;eta=%.12g;hidden=%d;"
                  "seed=%llu;SL=%d",
                  cfg.window_size, cfg.baa.filter_length, cfg.baa.stride,
                  cfg.baa.shared_filter ? 1 : 0, resolved_depth, cfg.pac.v_len, cfg.pac.h_len,
                  cfg.pac.growth, cfg.pac.head_hidden,
                  static_cast<unsigned long long>(cfg.seed), side_length);
    return std::string(buf);
}

namespace {

PacConfig resolved_pac(const ModelConfig& cfg, int side_length, int* depth_out) {
    PacConfig pac = cfg.pac;
    BaaConfig baa = cfg.baa;
    baa.validate_for_side_length(side_length);
    const int baa_width = 2 * (side_length - (baa.filter_length - 1) * baa.stride) + 1;
    if (pac.depth_auto) {
        pac.depth = resolve_auto_depth(pac, cfg.window_size, baa_width);
    }
    // shape feasibility check up-front so errors carry config context
    (void)pac_output_shape(pac, 1, cfg.window_size, baa_width);
    *depth_out = pac.depth;
    return pac;
}

} // namespace

ForecastModel::ForecastModel(const ModelConfig& cfg, int side_length)
    : config_(cfg), side_length_(side_length), resolved_depth_(0) {
    config_.validate();
    PacConfig pac_cfg = resolved_pac(cfg, side_length, &resolved_depth_);

    Rng rng(cfg.seed);
    baa_ = BaaBlock(cfg.baa, rng);
    const int baa_width = baa_.output_width(input_width());
    pac_ = make_pac_state(pac_cfg, 1, cfg.window_size, baa_width, rng);
    config_.pac = pac_cfg; // carry the resolved depth
    set_training(true);
}

Tensor ForecastModel::forward(const Tensor& x) {
    if (x.rank() != 4 || x.shape()[1] != 1 || x.shape()[2] != config_.window_size ||
        x.shape()[3] != input_width()) {
        raise(ErrorCode::ShapeMismatch, "model input must be [B,1," +
                                            std::to_string(config_.window_size) + "," +
                                            std::to_string(input_width()) + "]");
    }
    Tensor y = baa_.forward(x);
    Tensor y1 = pac_branch(y, config_.pac, pac_);
    Tensor y2 = residual_branch(y, config_.pac, pac_);
    return fuse_and_predict(y1, y2, pac_);
}

Tensor ForecastModel::stack_windows(const std::vector<const FuzzyWindowTensor*>& windows) {
    if (windows.empty()) {
        raise(ErrorCode::EmptyInput, "cannot stack zero windows");
    }
    const int rows = static_cast<int>(windows.front()->rows);
    const int cols = static_cast<int>(windows.front()->cols);
    std::vector<double> data;
    data.reserve(windows.size() * windows.front()->data.size());
    for (const auto* w : windows) {
        if (static_cast<int>(w->rows) != rows || static_cast<int>(w->cols) != cols) {
            raise(ErrorCode::ShapeMismatch, "window tensors have differing shapes");
        }
        data.insert(data.end(), w->data.begin(), w->data.end());
    }
    return Tensor::from_data({static_cast<int>(windows.size()), 1, rows, cols}, std::move(data));
}

void ForecastModel::set_training(bool training) {
    training_ = training;
    baa_.set_training(training);
    pac_.residual_bn.training = training;
}

std::vector<NamedParam> ForecastModel::parameters() const {
    std::vector<NamedParam> out = baa_.parameters("baa");
    auto pac = pac_parameters(pac_, "pac");
    out.insert(out.end(), pac.begin(), pac.end());
    return out;
}

std::vector<NamedBlob> ForecastModel::export_state() const {
    std::vector<NamedBlob> out;
    for (const auto& p : parameters()) {
        out.push_back({p.name, p.value.shape(), p.value.data()});
    }
    auto push_stats = [&out](const std::string& name, const std::vector<double>& v) {
        out.push_back({name, Shape{static_cast<int>(v.size())}, v});
    };
    push_stats("baa.bn1.running_mean", baa_.bn1.running_mean);
    push_stats("baa.bn1.running_var", baa_.bn1.running_var);
    push_stats("baa.bn2.running_mean", baa_.bn2.running_mean);
    push_stats("baa.bn2.running_var", baa_.bn2.running_var);
    push_stats("pac.residual.bn.running_mean", pac_.residual_bn.running_mean);
    push_stats("pac.residual.bn.running_var", pac_.residual_bn.running_var);
    return out;
}

void ForecastModel::load_state(const std::vector<NamedBlob>& blobs) {
    auto find = [&blobs](const std::string& name) -> const NamedBlob& {
        for (const auto& b : blobs) {
            if (b.name == name) return b;
        }
        raise(ErrorCode::CheckpointMismatch, "missing state entry '" + name + "'");
    };
    for (auto& p : parameters()) {
        const NamedBlob& b = find(p.name);
        if (b.shape != p.value.shape()) {
            raise(ErrorCode::CheckpointMismatch, "state entry '" + p.name + "' has wrong shape");
        }
        p.value.data() = b.data;
    }
    auto load_stats = [&find](const std::string& name, std::vector<double>& v) {
        const NamedBlob& b = find(name);
        if (b.data.size() != v.size()) {
            raise(ErrorCode::CheckpointMismatch, "state entry '" + name + "' has wrong length");
        }
        v = b.data;
    };
    load_stats("baa.bn1.running_mean", baa_.bn1.running_mean);
    load_stats("baa.bn1.running_var", baa_.bn1.running_var);
    load_stats("baa.bn2.running_mean", baa_.bn2.running_mean);
    load_stats("baa.bn2.running_var", baa_.bn2.running_var);
    load_stats("pac.residual.bn.running_mean", pac_.residual_bn.running_mean);
    load_stats("pac.residual.bn.running_var", pac_.residual_bn.running_var);
}

std::uint64_t ForecastModel::fingerprint() const {
    return fnv1a64(canonical_config_string(config_, resolved_depth_, side_length_));
}

} // namespace fuzconv
