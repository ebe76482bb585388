#include "fuzconv/baa.hpp"

#include <cmath>

#include "fuzconv/errors.hpp"

namespace fuzconv {

void BaaConfig::validate_for_side_length(int side_length) const {
    if (filter_length < 1) {
        raise(ErrorCode::InvalidConfig, "baa filter_length must be >= 1");
    }
    if (stride < 1) {
        raise(ErrorCode::InvalidConfig, "baa stride must be >= 1");
    }
    const int span = (filter_length - 1) * stride + 1;
    if (span > side_length) {
        raise(ErrorCode::FlankTooShort, "baa filter span " + std::to_string(span) +
                                            " exceeds flank length " + std::to_string(side_length));
    }
}

namespace {

Tensor init_filter(int k, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(k));
    std::vector<double> w(static_cast<std::size_t>(k));
    for (auto& v : w) v = uniform(rng, -bound, bound);
    return Tensor::from_data({k}, std::move(w), true);
}

} // namespace

BaaBlock::BaaBlock(const BaaConfig& cfg, Rng& rng)
    : config(cfg), bn1(1), bn2(1), filter_left(init_filter(cfg.filter_length, rng)) {
    filter_right = cfg.shared_filter ? filter_left : init_filter(cfg.filter_length, rng);
}

int BaaBlock::output_width(int input_width) const {
    const int flank = (input_width - 1) / 2;
    return 2 * (flank - (config.filter_length - 1) * config.stride) + 1;
}

BaaBlock::Parts BaaBlock::forward_parts(const Tensor& x) {
    Parts parts;
    parts.activated = relu(batch_norm(x, bn1));
    parts.reassembled = baa_flank_filter(parts.activated, filter_left, filter_right, config.stride);
    parts.output = batch_norm(parts.reassembled, bn2);
    return parts;
}

void BaaBlock::set_training(bool training) {
    bn1.training = training;
    bn2.training = training;
}

std::vector<NamedParam> BaaBlock::parameters(const std::string& prefix) const {
    std::vector<NamedParam> out;
    out.push_back({prefix + ".bn1.gamma", bn1.gamma});
    out.push_back({prefix + ".bn1.beta", bn1.beta});
    out.push_back({prefix + ".filter", filter_left});
    if (!config.shared_filter) {
        out.push_back({prefix + ".filter_right", filter_right});
    }
    out.push_back({prefix + ".bn2.gamma", bn2.gamma});
    out.push_back({prefix + ".bn2.beta", bn2.beta});
    return out;
}

Tensor baa_forward(const Tensor& x, const BaaConfig& cfg, BatchNormState& bn1,
                   BatchNormState& bn2, const Tensor& filter) {
    cfg.validate_for_side_length((x.shape().back() - 1) / 2);
    Tensor activated = relu(batch_norm(x, bn1));
    Tensor reassembled = baa_flank_filter(activated, filter, filter, cfg.stride);
    return batch_norm(reassembled, bn2);
}

} // namespace fuzconv
