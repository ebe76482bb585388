#ifndef FUZCONV_MODEL_HPP
#define FUZCONV_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fuzconv/baa.hpp"
#include "fuzconv/fuzzifier.hpp"
#include "fuzconv/pac.hpp"
#include "fuzconv/tensor.hpp"

namespace fuzconv {

struct ModelConfig {
    int window_size = 10; // S
    BaaConfig baa;
    PacConfig pac;
    std::uint64_t seed = 42;

    /// Static validation (window size, filter lengths, growth rate).
    void validate() const;
};

/// Canonical one-line rendering of the architecture for fingerprinting;
/// includes the resolved depth and the data-derived input width.
std::string canonical_config_string(const ModelConfig& cfg, int resolved_depth, int side_length);

struct NamedBlob {
    std::string name;
    Shape shape;
    std::vector<double> data;
};

/**
 * @brief The full forecasting network: bilateral Atrous block, partially
 * asymmetric stack with its pooling residual branch, and the two-layer head.
 *
 * Input is a batch of fuzzified windows [B,1,S,W] with W = 2*SL+1; output is
 * one predicted diff per window as [B,1].
 */
class ForecastModel {
public:
    ForecastModel(const ModelConfig& cfg, int side_length);

    Tensor forward(const Tensor& x);

    void set_training(bool training);
    bool training() const { return training_; }

    std::vector<NamedParam> parameters() const;

    /// Learnable parameters plus batch-norm running statistics, for
    /// checkpointing. Order is fixed.
    std::vector<NamedBlob> export_state() const;
    void load_state(const std::vector<NamedBlob>& blobs);

    const ModelConfig& config() const { return config_; }
    int side_length() const { return side_length_; }
    int input_width() const { return 2 * side_length_ + 1; }
    int resolved_depth() const { return resolved_depth_; }
    std::uint64_t fingerprint() const;

    /// Stack a set of windows into a [B,1,S,W] input tensor.
    static Tensor stack_windows(const std::vector<const FuzzyWindowTensor*>& windows);

private:
    ModelConfig config_;
    int side_length_;
    int resolved_depth_;
    bool training_ = true;
    BaaBlock baa_;
    PacState pac_;
};

} // namespace fuzconv

#endif
