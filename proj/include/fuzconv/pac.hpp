#ifndef FUZCONV_PAC_HPP
#define FUZCONV_PAC_HPP

#include <string>
#include <vector>

#include "fuzconv/tensor.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

/**
 * @brief Partially asymmetric convolution stack configuration.
 *
 * Each of the `depth` stages applies a vertical V x 1 filter and then a
 * horizontal 1 x H filter; the vertical pass multiplies the channel count by
 * `growth`. The vertical axis spans window elements (sub-windows), the
 * horizontal axis spans global-context positions.
 */
struct PacConfig {
    int depth = 2;           // K, number of (vertical, horizontal) stages
    bool depth_auto = false; // pick the largest K keeping both spatial dims >= 2
    int v_len = 3;           // V
    int h_len = 2;           // H
    double growth = 2.0;     // eta, per-stage channel multiplier
    int head_hidden = 64;

    void validate() const;
};

/// Channel count after `stage` growth applications: round(base * eta^stage), floored at 1.
int pac_stage_channels(int base_channels, double growth, int stage);

struct PacShape {
    int channels = 0;
    int height = 0;
    int width = 0;
};

/// Spatial/channel shape after the K-stage stack; throws SpatialUnderflow if
/// any stage would shrink a dimension below 1.
PacShape pac_output_shape(const PacConfig& cfg, int in_channels, int in_h, int in_w);

/// Largest depth that keeps both spatial dims >= 2 (at least 1).
int resolve_auto_depth(const PacConfig& cfg, int in_h, int in_w);

struct PacState {
    std::vector<Tensor> vertical_kernels;   // stage k: [F_{k+1}, F_k, V, 1]
    std::vector<Tensor> horizontal_kernels; // stage k: [F_{k+1}, F_{k+1}, 1, H]
    Tensor conv1x1;                         // [F_K, F_in, 1, 1] on the residual branch
    BatchNormState residual_bn;             // channels F_K
    Tensor head_w1, head_b1;                // hidden x D, hidden
    Tensor head_w2, head_b2;                // 1 x hidden, 1
};

/// Build all learnable state for the given input dims (fan-in scaled uniform
/// weights, zero biases, unit batch-norm).
PacState make_pac_state(const PacConfig& cfg, int in_channels, int in_h, int in_w, Rng& rng);

/// K sequential vertical-then-horizontal stages.
Tensor pac_branch(const Tensor& input, const PacConfig& cfg, const PacState& state);

/// Average pooling sized to the stack's receptive field, then a 1x1 channel
/// map and batch norm; output is shape-compatible with pac_branch.
Tensor residual_branch(const Tensor& input, const PacConfig& cfg, PacState& state);

/// Element-wise fusion of the two branches followed by the two-layer head;
/// returns one prediction per batch row as [B,1].
Tensor fuse_and_predict(const Tensor& y1, const Tensor& y2, const PacState& state);

std::vector<NamedParam> pac_parameters(const PacState& state, const std::string& prefix);

} // namespace fuzconv

#endif
