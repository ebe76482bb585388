#include "fuzconv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "fuzconv/errors.hpp"

namespace fuzconv {

namespace {

thread_local bool g_grad_enabled = true;
thread_local std::uint64_t g_mac_total = 0;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
}

void check_shape(const Shape& s) {
    if (s.empty() || s.size() > 4) {
        raise(ErrorCode::ShapeMismatch, "tensor rank must be 1..4, got " + std::to_string(s.size()));
    }
    for (int d : s) {
        if (d < 1) raise(ErrorCode::ShapeMismatch, "tensor dimensions must be positive");
    }
}

std::vector<double>& grad_buf(Node& n) {
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

Tensor make_op(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
               std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    if (g_grad_enabled && rg) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

struct Dims4 {
    int b, c, h, w;
};

Dims4 as_bchw(const Shape& s, const char* what) {
    switch (s.size()) {
        case 2: return {1, 1, s[0], s[1]};
        case 3: return {1, s[0], s[1], s[2]};
        case 4: return {s[0], s[1], s[2], s[3]};
        default:
            raise(ErrorCode::ShapeMismatch,
                  std::string(what) + ": expected rank 2, 3 or 4, got rank " +
                      std::to_string(s.size()));
    }
}

} // namespace

Tensor::Tensor(Shape shape, double fill, bool requires_grad) {
    check_shape(shape);
    node_ = std::make_shared<Node>();
    node_->value.assign(shape_size(shape), fill);
    node_->shape = std::move(shape);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
    check_shape(shape);
    if (shape_size(shape) != data.size()) {
        raise(ErrorCode::ShapeMismatch, "data length " + std::to_string(data.size()) +
                                            " does not match shape product " +
                                            std::to_string(shape_size(shape)));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

double Tensor::scalar() const {
    if (size() != 1) {
        raise(ErrorCode::ShapeMismatch, "scalar() on tensor of size " + std::to_string(size()));
    }
    return node_->value[0];
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------
// Elementwise and reduction ops
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        raise(ErrorCode::ShapeMismatch, "add: operand shapes differ");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& self) {
        const auto& g = self.grad;
        if (pa->requires_grad) {
            auto& ga = grad_buf(*pa);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (pb->requires_grad) {
            auto& gb = grad_buf(*pb);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        raise(ErrorCode::ShapeMismatch, "mul: operand shapes differ");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto pa = a.node();
    auto pb = b.node();
    return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb](Node& self) {
        const auto& g = self.grad;
        if (pa->requires_grad) {
            auto& ga = grad_buf(*pa);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            auto& gb = grad_buf(*pb);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
    auto pa = a.node();
    return make_op(a.shape(), std::move(out), {pa}, [pa, factor](Node& self) {
        auto& ga = grad_buf(*pa);
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * factor;
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    auto px = x.node();
    return make_op(x.shape(), std::move(out), {px}, [px](Node& self) {
        auto& gx = grad_buf(*px);
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (px->value[i] > 0.0) gx[i] += self.grad[i];
        }
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    auto px = x.node();
    return make_op({1}, {total}, {px}, [px](Node& self) {
        auto& gx = grad_buf(*px);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0];
    });
}

Tensor weighted_sum(const Tensor& x, std::vector<double> coeffs) {
    if (coeffs.size() != x.size()) {
        raise(ErrorCode::ShapeMismatch, "weighted_sum: coefficient count differs from tensor size");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) total += x.data()[i] * coeffs[i];
    auto px = x.node();
    return make_op({1}, {total}, {px}, [px, c = std::move(coeffs)](Node& self) {
        auto& gx = grad_buf(*px);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[0] * c[i];
    });
}

Tensor flatten_rows(const Tensor& x) {
    if (x.rank() < 2) {
        raise(ErrorCode::ShapeMismatch, "flatten_rows: need rank >= 2");
    }
    const int b = x.shape()[0];
    const int d = static_cast<int>(x.size()) / b;
    auto px = x.node();
    std::vector<double> out = x.data();
    return make_op({b, d}, std::move(out), {px}, [px](Node& self) {
        auto& gx = grad_buf(*px);
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor l1_loss(const Tensor& pred, const std::vector<double>& target) {
    if (pred.size() == 0 || target.empty()) {
        raise(ErrorCode::EmptyInput, "l1_loss: empty input");
    }
    if (pred.size() != target.size()) {
        raise(ErrorCode::LengthMismatch, "l1_loss: prediction and target lengths differ");
    }
    const double inv_n = 1.0 / static_cast<double>(target.size());
    double total = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) total += std::abs(pred.data()[i] - target[i]);
    auto pp = pred.node();
    return make_op({1}, {total * inv_n}, {pp}, [pp, t = target, inv_n](Node& self) {
        auto& gp = grad_buf(*pp);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double d = pp->value[i] - t[i];
            const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            gp[i] += self.grad[0] * s * inv_n;
        }
    });
}

// ---------------------------------------------------------------------------
// Convolutions and pooling
// ---------------------------------------------------------------------------

Tensor conv2d_valid(const Tensor& input, const Tensor& kernel) {
    const Dims4 in = as_bchw(input.shape(), "conv2d_valid input");

    int f = 1, kc = 1, kh = 0, kw = 0;
    if (kernel.rank() == 2) {
        kh = kernel.shape()[0];
        kw = kernel.shape()[1];
    } else if (kernel.rank() == 4) {
        f = kernel.shape()[0];
        kc = kernel.shape()[1];
        kh = kernel.shape()[2];
        kw = kernel.shape()[3];
    } else {
        raise(ErrorCode::ShapeMismatch, "conv2d_valid: kernel must be rank 2 or 4");
    }
    if (kc != in.c) {
        raise(ErrorCode::ShapeMismatch, "conv2d_valid: kernel channels " + std::to_string(kc) +
                                            " != input channels " + std::to_string(in.c));
    }
    if (kh > in.h || kw > in.w) {
        raise(ErrorCode::ShapeMismatch, "conv2d_valid: kernel larger than input");
    }

    const int oh = in.h - kh + 1;
    const int ow = in.w - kw + 1;
    std::vector<double> out(static_cast<std::size_t>(in.b) * f * oh * ow, 0.0);

    const auto& xv = input.data();
    const auto& kv = kernel.data();
    std::uint64_t macs = 0;
    for (int b = 0; b < in.b; ++b) {
        for (int fo = 0; fo < f; ++fo) {
            for (int i = 0; i < oh; ++i) {
                for (int j = 0; j < ow; ++j) {
                    double acc = 0.0;
                    for (int c = 0; c < in.c; ++c) {
                        const std::size_t xbase =
                            ((static_cast<std::size_t>(b) * in.c + c) * in.h) * in.w;
                        const std::size_t kbase =
                            ((static_cast<std::size_t>(fo) * kc + c) * kh) * kw;
                        for (int p = 0; p < kh; ++p) {
                            for (int q = 0; q < kw; ++q) {
                                acc += xv[xbase + static_cast<std::size_t>(i + p) * in.w + (j + q)] *
                                       kv[kbase + static_cast<std::size_t>(p) * kw + q];
                                ++macs;
                            }
                        }
                    }
                    out[((static_cast<std::size_t>(b) * f + fo) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    g_mac_total += macs;

    Shape out_shape;
    if (input.rank() == 2 && kernel.rank() == 2) {
        out_shape = {oh, ow};
    } else if (input.rank() <= 3) {
        out_shape = {f, oh, ow};
    } else {
        out_shape = {in.b, f, oh, ow};
    }

    auto px = input.node();
    auto pk = kernel.node();
    const Dims4 ind = in;
    return make_op(std::move(out_shape), std::move(out), {px, pk},
                   [px, pk, ind, f, kc, kh, kw, oh, ow](Node& self) {
                       const auto& g = self.grad;
                       const bool need_x = px->requires_grad;
                       const bool need_k = pk->requires_grad;
                       auto* gx = need_x ? &grad_buf(*px) : nullptr;
                       auto* gk = need_k ? &grad_buf(*pk) : nullptr;
                       for (int b = 0; b < ind.b; ++b) {
                           for (int fo = 0; fo < f; ++fo) {
                               for (int i = 0; i < oh; ++i) {
                                   for (int j = 0; j < ow; ++j) {
                                       const double go =
                                           g[((static_cast<std::size_t>(b) * f + fo) * oh + i) * ow + j];
                                       if (go == 0.0) continue;
                                       for (int c = 0; c < ind.c; ++c) {
                                           const std::size_t xbase =
                                               ((static_cast<std::size_t>(b) * ind.c + c) * ind.h) * ind.w;
                                           const std::size_t kbase =
                                               ((static_cast<std::size_t>(fo) * kc + c) * kh) * kw;
                                           for (int p = 0; p < kh; ++p) {
                                               for (int q = 0; q < kw; ++q) {
                                                   const std::size_t xi =
                                                       xbase + static_cast<std::size_t>(i + p) * ind.w +
                                                       (j + q);
                                                   const std::size_t ki =
                                                       kbase + static_cast<std::size_t>(p) * kw + q;
                                                   if (need_x) (*gx)[xi] += go * pk->value[ki];
                                                   if (need_k) (*gk)[ki] += go * px->value[xi];
                                               }
                                           }
                                       }
                                   }
                               }
                           }
                       }
                   });
}

Tensor conv1d_dilated(const Tensor& input, const Tensor& filter, int stride) {
    if (input.rank() != 1 || filter.rank() != 1) {
        raise(ErrorCode::ShapeMismatch, "conv1d_dilated: input and filter must be rank 1");
    }
    if (stride < 1) {
        raise(ErrorCode::InvalidConfig, "conv1d_dilated: stride must be >= 1");
    }
    const int len = input.shape()[0];
    const int k = filter.shape()[0];
    const int span = (k - 1) * stride + 1;
    if (len < span) {
        raise(ErrorCode::InputTooShort, "conv1d_dilated: input length " + std::to_string(len) +
                                            " < filter span " + std::to_string(span));
    }
    const int olen = len - span + 1;
    std::vector<double> out(static_cast<std::size_t>(olen), 0.0);
    for (int i = 0; i < olen; ++i) {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += input.data()[i + stride * j] * filter.data()[j];
        out[i] = acc;
    }
    g_mac_total += static_cast<std::uint64_t>(olen) * k;

    auto px = input.node();
    auto pf = filter.node();
    return make_op({olen}, std::move(out), {px, pf}, [px, pf, olen, k, stride](Node& self) {
        const bool need_x = px->requires_grad;
        const bool need_f = pf->requires_grad;
        auto* gx = need_x ? &grad_buf(*px) : nullptr;
        auto* gf = need_f ? &grad_buf(*pf) : nullptr;
        for (int i = 0; i < olen; ++i) {
            const double go = self.grad[i];
            if (go == 0.0) continue;
            for (int j = 0; j < k; ++j) {
                if (need_x) (*gx)[i + stride * j] += go * pf->value[j];
                if (need_f) (*gf)[j] += go * px->value[i + stride * j];
            }
        }
    });
}

Tensor avg_pool2d(const Tensor& input, int kh, int kw) {
    const Dims4 in = as_bchw(input.shape(), "avg_pool2d input");
    if (kh < 1 || kw < 1 || kh > in.h || kw > in.w) {
        raise(ErrorCode::ShapeMismatch, "avg_pool2d: kernel does not fit input");
    }
    const int oh = in.h - kh + 1;
    const int ow = in.w - kw + 1;
    const double inv = 1.0 / (static_cast<double>(kh) * kw);
    std::vector<double> out(static_cast<std::size_t>(in.b) * in.c * oh * ow, 0.0);
    for (int b = 0; b < in.b; ++b) {
        for (int c = 0; c < in.c; ++c) {
            const std::size_t xbase = (static_cast<std::size_t>(b) * in.c + c) * in.h * in.w;
            const std::size_t obase = (static_cast<std::size_t>(b) * in.c + c) * oh * ow;
            for (int i = 0; i < oh; ++i) {
                for (int j = 0; j < ow; ++j) {
                    double acc = 0.0;
                    for (int p = 0; p < kh; ++p) {
                        for (int q = 0; q < kw; ++q) {
                            acc += input.data()[xbase + static_cast<std::size_t>(i + p) * in.w + (j + q)];
                        }
                    }
                    out[obase + static_cast<std::size_t>(i) * ow + j] = acc * inv;
                }
            }
        }
    }

    Shape out_shape;
    if (input.rank() == 2) {
        out_shape = {oh, ow};
    } else if (input.rank() == 3) {
        out_shape = {in.c, oh, ow};
    } else {
        out_shape = {in.b, in.c, oh, ow};
    }

    auto px = input.node();
    const Dims4 ind = in;
    return make_op(std::move(out_shape), std::move(out), {px},
                   [px, ind, kh, kw, oh, ow, inv](Node& self) {
                       auto& gx = grad_buf(*px);
                       for (int b = 0; b < ind.b; ++b) {
                           for (int c = 0; c < ind.c; ++c) {
                               const std::size_t xbase =
                                   (static_cast<std::size_t>(b) * ind.c + c) * ind.h * ind.w;
                               const std::size_t obase =
                                   (static_cast<std::size_t>(b) * ind.c + c) * oh * ow;
                               for (int i = 0; i < oh; ++i) {
                                   for (int j = 0; j < ow; ++j) {
                                       const double go =
                                           self.grad[obase + static_cast<std::size_t>(i) * ow + j] * inv;
                                       if (go == 0.0) continue;
                                       for (int p = 0; p < kh; ++p) {
                                           for (int q = 0; q < kw; ++q) {
                                               gx[xbase + static_cast<std::size_t>(i + p) * ind.w +
                                                  (j + q)] += go;
                                           }
                                       }
                                   }
                               }
                           }
                       }
                   });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2 || bias.rank() != 1) {
        raise(ErrorCode::ShapeMismatch, "linear: weight must be [O,D], bias [O]");
    }
    const int o = weight.shape()[0];
    const int d = weight.shape()[1];
    if (bias.shape()[0] != o) {
        raise(ErrorCode::ShapeMismatch, "linear: bias length differs from output count");
    }
    int b = 1;
    if (x.rank() == 1) {
        if (x.shape()[0] != d) raise(ErrorCode::ShapeMismatch, "linear: input length != D");
    } else if (x.rank() == 2) {
        b = x.shape()[0];
        if (x.shape()[1] != d) raise(ErrorCode::ShapeMismatch, "linear: input width != D");
    } else {
        raise(ErrorCode::ShapeMismatch, "linear: input must be rank 1 or 2");
    }

    std::vector<double> out(static_cast<std::size_t>(b) * o, 0.0);
    for (int r = 0; r < b; ++r) {
        for (int i = 0; i < o; ++i) {
            double acc = bias.data()[i];
            const std::size_t wbase = static_cast<std::size_t>(i) * d;
            const std::size_t xbase = static_cast<std::size_t>(r) * d;
            for (int j = 0; j < d; ++j) acc += x.data()[xbase + j] * weight.data()[wbase + j];
            out[static_cast<std::size_t>(r) * o + i] = acc;
        }
    }
    g_mac_total += static_cast<std::uint64_t>(b) * o * d;

    Shape out_shape = (x.rank() == 1) ? Shape{o} : Shape{b, o};
    auto px = x.node();
    auto pw = weight.node();
    auto pb = bias.node();
    return make_op(std::move(out_shape), std::move(out), {px, pw, pb},
                   [px, pw, pb, b, o, d](Node& self) {
                       const bool need_x = px->requires_grad;
                       const bool need_w = pw->requires_grad;
                       const bool need_b = pb->requires_grad;
                       auto* gx = need_x ? &grad_buf(*px) : nullptr;
                       auto* gw = need_w ? &grad_buf(*pw) : nullptr;
                       auto* gb = need_b ? &grad_buf(*pb) : nullptr;
                       for (int r = 0; r < b; ++r) {
                           for (int i = 0; i < o; ++i) {
                               const double go = self.grad[static_cast<std::size_t>(r) * o + i];
                               if (go == 0.0) continue;
                               if (need_b) (*gb)[i] += go;
                               const std::size_t wbase = static_cast<std::size_t>(i) * d;
                               const std::size_t xbase = static_cast<std::size_t>(r) * d;
                               for (int j = 0; j < d; ++j) {
                                   if (need_x) (*gx)[xbase + j] += go * pw->value[wbase + j];
                                   if (need_w) (*gw)[wbase + j] += go * px->value[xbase + j];
                               }
                           }
                       }
                   });
}

Tensor bilinear_head(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                     const Tensor& b2) {
    return linear(relu(linear(x, w1, b1)), w2, b2);
}

Tensor baa_flank_filter(const Tensor& x, const Tensor& filter_left, const Tensor& filter_right,
                        int stride) {
    if (x.rank() != 4) {
        raise(ErrorCode::ShapeMismatch, "baa_flank_filter: input must be [B,C,H,W]");
    }
    if (filter_left.rank() != 1 || filter_right.rank() != 1 ||
        filter_left.shape() != filter_right.shape()) {
        raise(ErrorCode::ShapeMismatch, "baa_flank_filter: filters must be rank 1 and equal length");
    }
    if (stride < 1) {
        raise(ErrorCode::InvalidConfig, "baa_flank_filter: stride must be >= 1");
    }
    const int b = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
    if (w < 3 || w % 2 == 0) {
        raise(ErrorCode::ShapeMismatch, "baa_flank_filter: width must be odd and >= 3");
    }
    const int flank = (w - 1) / 2; // SL
    const int k = filter_left.shape()[0];
    const int span = (k - 1) * stride + 1;
    if (span > flank) {
        raise(ErrorCode::FlankTooShort, "filter span " + std::to_string(span) +
                                            " exceeds flank length " + std::to_string(flank));
    }
    const int oflank = flank - (k - 1) * stride; // outputs per side
    const int ow = 2 * oflank + 1;

    std::vector<double> out(static_cast<std::size_t>(b) * c * h * ow, 0.0);
    const auto& xv = x.data();
    const auto& fl = filter_left.data();
    const auto& fr = filter_right.data();
    for (int bi = 0; bi < b; ++bi) {
        for (int ci = 0; ci < c; ++ci) {
            for (int hi = 0; hi < h; ++hi) {
                const std::size_t xrow =
                    ((static_cast<std::size_t>(bi) * c + ci) * h + hi) * static_cast<std::size_t>(w);
                const std::size_t orow =
                    ((static_cast<std::size_t>(bi) * c + ci) * h + hi) * static_cast<std::size_t>(ow);
                for (int j = 0; j < oflank; ++j) {
                    double acc = 0.0;
                    for (int m = 0; m < k; ++m) acc += xv[xrow + j + stride * m] * fl[m];
                    out[orow + j] = acc;
                }
                out[orow + oflank] = xv[xrow + flank]; // center passes through
                for (int j = 0; j < oflank; ++j) {
                    double acc = 0.0;
                    for (int m = 0; m < k; ++m) acc += xv[xrow + flank + 1 + j + stride * m] * fr[m];
                    out[orow + oflank + 1 + j] = acc;
                }
            }
        }
    }
    g_mac_total += static_cast<std::uint64_t>(b) * c * h * 2 * oflank * k;

    auto px = x.node();
    auto pl = filter_left.node();
    auto pr = filter_right.node();
    return make_op({b, c, h, ow}, std::move(out), {px, pl, pr},
                   [px, pl, pr, b, c, h, w, ow, flank, oflank, k, stride](Node& self) {
                       const bool need_x = px->requires_grad;
                       auto* gx = need_x ? &grad_buf(*px) : nullptr;
                       auto* gl = pl->requires_grad ? &grad_buf(*pl) : nullptr;
                       auto* gr = pr->requires_grad ? &grad_buf(*pr) : nullptr;
                       for (int bi = 0; bi < b; ++bi) {
                           for (int ci = 0; ci < c; ++ci) {
                               for (int hi = 0; hi < h; ++hi) {
                                   const std::size_t xrow =
                                       ((static_cast<std::size_t>(bi) * c + ci) * h + hi) *
                                       static_cast<std::size_t>(w);
                                   const std::size_t orow =
                                       ((static_cast<std::size_t>(bi) * c + ci) * h + hi) *
                                       static_cast<std::size_t>(ow);
                                   for (int j = 0; j < oflank; ++j) {
                                       const double go = self.grad[orow + j];
                                       if (go == 0.0) continue;
                                       for (int m = 0; m < k; ++m) {
                                           if (need_x) (*gx)[xrow + j + stride * m] += go * pl->value[m];
                                           if (gl != nullptr)
                                               (*gl)[m] += go * px->value[xrow + j + stride * m];
                                       }
                                   }
                                   if (need_x) (*gx)[xrow + flank] += self.grad[orow + oflank];
                                   for (int j = 0; j < oflank; ++j) {
                                       const double go = self.grad[orow + oflank + 1 + j];
                                       if (go == 0.0) continue;
                                       for (int m = 0; m < k; ++m) {
                                           const std::size_t xi = xrow + flank + 1 + j + stride * m;
                                           if (need_x) (*gx)[xi] += go * pr->value[m];
                                           if (gr != nullptr) (*gr)[m] += go * px->value[xi];
                                       }
                                   }
                               }
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

BatchNormState::BatchNormState(int channels)
    : gamma(Tensor({channels}, 1.0, true)),
      beta(Tensor({channels}, 0.0, true)),
      running_mean(static_cast<std::size_t>(channels), 0.0),
      running_var(static_cast<std::size_t>(channels), 1.0) {}

Tensor batch_norm(const Tensor& x, BatchNormState& state) {
    const Dims4 in = as_bchw(x.shape(), "batch_norm input");
    if (x.rank() == 2) {
        raise(ErrorCode::ShapeMismatch, "batch_norm: input must be [C,H,W] or [B,C,H,W]");
    }
    if (in.c != state.channels()) {
        raise(ErrorCode::ShapeMismatch, "batch_norm: input channels " + std::to_string(in.c) +
                                            " != state channels " + std::to_string(state.channels()));
    }
    const int m = in.b * in.h * in.w; // elements per channel
    const std::size_t plane = static_cast<std::size_t>(in.h) * in.w;

    std::vector<double> mean(in.c, 0.0), var(in.c, 0.0);
    if (state.training) {
        for (int c = 0; c < in.c; ++c) {
            double acc = 0.0;
            for (int b = 0; b < in.b; ++b) {
                const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) acc += x.data()[base + i];
            }
            mean[c] = acc / m;
            double vacc = 0.0;
            for (int b = 0; b < in.b; ++b) {
                const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = x.data()[base + i] - mean[c];
                    vacc += d * d;
                }
            }
            var[c] = vacc / m; // population variance
        }
        for (int c = 0; c < in.c; ++c) {
            state.running_mean[c] =
                (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
            state.running_var[c] =
                (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c];
        }
    } else {
        mean = state.running_mean;
        var = state.running_var;
    }

    std::vector<double> inv_std(in.c);
    for (int c = 0; c < in.c; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + state.epsilon);

    std::vector<double> xhat(x.size());
    std::vector<double> out(x.size());
    for (int b = 0; b < in.b; ++b) {
        for (int c = 0; c < in.c; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * in.c + c) * plane;
            const double g = state.gamma.data()[c];
            const double bt = state.beta.data()[c];
            for (std::size_t i = 0; i < plane; ++i) {
                const double xh = (x.data()[base + i] - mean[c]) * inv_std[c];
                xhat[base + i] = xh;
                out[base + i] = g * xh + bt;
            }
        }
    }

    auto px = x.node();
    auto pg = state.gamma.node();
    auto pb = state.beta.node();
    const bool training = state.training;
    const Dims4 ind = in;
    return make_op(x.shape(), std::move(out), {px, pg, pb},
                   [px, pg, pb, ind, plane, m, training, xh = std::move(xhat),
                    istd = std::move(inv_std)](Node& self) {
                       const auto& g = self.grad;
                       auto* gx = px->requires_grad ? &grad_buf(*px) : nullptr;
                       auto* gg = pg->requires_grad ? &grad_buf(*pg) : nullptr;
                       auto* gb = pb->requires_grad ? &grad_buf(*pb) : nullptr;
                       for (int c = 0; c < ind.c; ++c) {
                           double sum_g = 0.0, sum_gx = 0.0;
                           for (int b = 0; b < ind.b; ++b) {
                               const std::size_t base = (static_cast<std::size_t>(b) * ind.c + c) * plane;
                               for (std::size_t i = 0; i < plane; ++i) {
                                   sum_g += g[base + i];
                                   sum_gx += g[base + i] * xh[base + i];
                               }
                           }
                           if (gb != nullptr) (*gb)[c] += sum_g;
                           if (gg != nullptr) (*gg)[c] += sum_gx;
                           if (gx != nullptr) {
                               const double gamma_c = pg->value[c];
                               if (training) {
                                   const double mg = sum_g / m;
                                   const double mgx = sum_gx / m;
                                   for (int b = 0; b < ind.b; ++b) {
                                       const std::size_t base =
                                           (static_cast<std::size_t>(b) * ind.c + c) * plane;
                                       for (std::size_t i = 0; i < plane; ++i) {
                                           (*gx)[base + i] += gamma_c * istd[c] *
                                                              (g[base + i] - mg - xh[base + i] * mgx);
                                       }
                                   }
                               } else {
                                   for (int b = 0; b < ind.b; ++b) {
                                       const std::size_t base =
                                           (static_cast<std::size_t>(b) * ind.c + c) * plane;
                                       for (std::size_t i = 0; i < plane; ++i) {
                                           (*gx)[base + i] += gamma_c * istd[c] * g[base + i];
                                       }
                                   }
                               }
                           }
                       }
                   });
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
    if (loss.size() != 1) {
        raise(ErrorCode::ShapeMismatch, "backward: loss must be a scalar");
    }
    NodePtr root = loss.node();
    if (!root->has_graph()) {
        if (root->requires_grad) {
            grad_buf(*root)[0] += 1.0;
            return;
        }
        raise(ErrorCode::UnrecordedTensor, "backward: loss has no recorded graph");
    }

    // Iterative post-order DFS over parent links. Reverse post-order visits
    // every node before any of its parents, which is the backward schedule.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::unordered_set<Node*> on_stack;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    visited.insert(root.get());
    on_stack.insert(root.get());
    while (!stack.empty()) {
        Frame& fr = stack.back();
        if (fr.next_parent < fr.node->parents.size()) {
            Node* parent = fr.node->parents[fr.next_parent++].get();
            if (on_stack.count(parent) != 0) {
                raise(ErrorCode::GraphCycle, "backward: cycle detected in tape");
            }
            if (visited.insert(parent).second) {
                stack.push_back({parent, 0});
                on_stack.insert(parent);
            }
        } else {
            order.push_back(fr.node);
            on_stack.erase(fr.node);
            stack.pop_back();
        }
    }

    grad_buf(*root)[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && !n->grad.empty()) {
            n->backward_fn(*n);
        }
    }
}

// ---------------------------------------------------------------------------
// MAC accounting
// ---------------------------------------------------------------------------

namespace macs {
void reset() { g_mac_total = 0; }
std::uint64_t total() { return g_mac_total; }
} // namespace macs

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

double GradCheckReport::worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_dev);
    return w;
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn,
                           const std::vector<NamedParam>& params, double h) {
    GradCheckReport report;
    std::vector<NamedParam> active;
    for (const auto& p : params) {
        if (p.value.requires_grad()) active.push_back(p);
    }
    if (active.empty()) return report;

    for (auto& p : active) p.value.zero_grad();
    backward(loss_fn());
    std::vector<std::vector<double>> analytic;
    analytic.reserve(active.size());
    for (auto& p : active) {
        analytic.push_back(p.value.grad().empty()
                               ? std::vector<double>(p.value.size(), 0.0)
                               : p.value.grad());
    }

    for (std::size_t pi = 0; pi < active.size(); ++pi) {
        Tensor t = active[pi].value;
        double worst = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t.data()[i];
            t.data()[i] = orig + h;
            const double fp = loss_fn().scalar();
            t.data()[i] = orig - h;
            const double fm = loss_fn().scalar();
            t.data()[i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double dev =
                std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-2});
            worst = std::max(worst, dev);
        }
        report.entries.push_back({active[pi].name, worst});
    }
    return report;
}

} // namespace fuzconv
