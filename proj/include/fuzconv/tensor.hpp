#ifndef FUZCONV_TENSOR_HPP
#define FUZCONV_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fuzconv {

using Shape = std::vector<int>;

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;     // sized on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::size_t size() const { return value.size(); }
    bool has_graph() const { return static_cast<bool>(backward_fn); }
};

} // namespace detail

/**
 * @brief Dense real tensor of rank <= 4 with reverse-mode differentiation.
 *
 * Tensors are cheap handles over shared storage. Operations on tensors that
 * require gradients record a tape; backward() walks it in reverse
 * topological order. Feature maps use a batch x channels x height x width
 * layout.
 */
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    std::size_t size() const { return node_->value.size(); }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    double scalar() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) { node_->requires_grad = rg; }

    /// Accumulated gradient; empty until backward has reached this tensor.
    const std::vector<double>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Temporarily disables tape recording (inference / rollout).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// ---------------------------------------------------------------------------
// Operations. All are valid-extent, stride-1 unless stated otherwise;
// convolution is cross-correlation (no kernel flip).
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b); // elementwise, same shape
Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& x);
Tensor sum(const Tensor& x);
/// Scalar dot product of a tensor with fixed coefficients (same length).
Tensor weighted_sum(const Tensor& x, std::vector<double> coeffs);
/// Collapse all trailing dimensions: [B, ...] -> [B, D].
Tensor flatten_rows(const Tensor& x);

/**
 * 2-D valid cross-correlation. Input may be [H,W], [C,H,W] or [B,C,H,W];
 * kernel [kh,kw] (single in/out channel) or [F,C,kh,kw]. The output keeps the
 * input's layout convention.
 */
Tensor conv2d_valid(const Tensor& input, const Tensor& kernel);

/// 1-D dilated valid correlation: out[i] = sum_k input[i + stride*k] * filter[k].
Tensor conv1d_dilated(const Tensor& input, const Tensor& filter, int stride);

/// Window mean over kh x kw patches, stride 1, valid extent. [C,H,W] or [B,C,H,W].
Tensor avg_pool2d(const Tensor& input, int kh, int kw);

/// x [B,D] (or [D]) times weight [O,D] plus bias [O] -> [B,O].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Two stacked affine layers with a rectifier between: affine -> relu -> affine.
Tensor bilinear_head(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                     const Tensor& b2);

/**
 * Dilated-filter the two flanks around the preserved center column of a
 * [B,C,H,W] map (W odd). Each row's left flank (columns 0..L-1, L = (W-1)/2)
 * and right flank (columns L+1..W-1) are correlated independently with their
 * filter; the center column is copied through untouched. Pass the same tensor
 * twice to share one filter.
 */
Tensor baa_flank_filter(const Tensor& x, const Tensor& filter_left, const Tensor& filter_right,
                        int stride);

/// Mean absolute deviation of predictions from fixed targets -> scalar.
Tensor l1_loss(const Tensor& pred, const std::vector<double>& target);

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

struct BatchNormState {
    Tensor gamma;  // [C], learnable scale
    Tensor beta;   // [C], learnable shift
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double epsilon = 1e-5;
    double momentum = 0.1;
    bool training = true;

    BatchNormState() = default;
    explicit BatchNormState(int channels);
    int channels() const { return static_cast<int>(running_mean.size()); }
};

/**
 * Per-channel batch normalization over [C,H,W] or [B,C,H,W]. Training mode
 * normalizes by the current batch's population statistics and updates the
 * running ones with `momentum`; eval mode uses the running statistics.
 */
Tensor batch_norm(const Tensor& x, BatchNormState& state);

// ---------------------------------------------------------------------------
// Reverse-mode differentiation
// ---------------------------------------------------------------------------

/// Populate gradients of everything the scalar `loss` depends on. Gradients
/// accumulate; call zero_grad on parameters between steps.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Multiply-accumulate accounting (convolutions and affine layers)
// ---------------------------------------------------------------------------

namespace macs {
void reset();
std::uint64_t total();
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

struct NamedParam {
    std::string name;
    Tensor value;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_dev = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst() const;
    bool pass(double tolerance) const { return worst() <= tolerance; }
};

/**
 * Compare analytic gradients of `loss_fn` against central finite differences
 * (step h) for every parameter that requires gradients. `loss_fn` must
 * rebuild the graph from current parameter values on each call. Deviation is
 * |analytic - numeric| / max(|analytic|, |numeric|, 1e-2).
 */
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedParam>& params, double h = 1e-4);

} // namespace fuzconv

#endif
