/* Copyright 2026 the cmgan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cmgan/tensor.hpp"

namespace cmgan {

/// One value in the computation graph. Leaves over long-lived parameters
/// hold a view instead of a copy; `value()` reads whichever is set.
/// `backward` scatters `grad` into the gradients of whatever produced it.
struct Node {
  Tensor owned;
  const Tensor* viewed = nullptr;
  Tensor grad;
  bool requires_grad = false;
  std::function<void()> backward;  // empty for leaves

  const Tensor& val() const { return viewed ? *viewed : owned; }
};

/// Append-only reverse-mode tape. Ops push nodes in evaluation order;
/// backward() walks them in reverse. One tape per training step. Parameter
/// values referenced by a tape must stay untouched until after backward().
class Tape {
 public:
  /// Data leaf: no gradient flows into it.
  Node* leaf(Tensor value) {
    return push(std::move(value), false);
  }

  /// Constant view of a parameter's value, gradient not accumulated.
  Node* frozen(const Parameter& p) { return push_view(p.value, false); }

  /// Trainable leaf: after backward(), the node's gradient is added to
  /// `p.grad`.
  Node* param(Parameter& p) {
    Node* n = push_view(p.value, true);
    Parameter* pp = &p;
    n->backward = [n, pp]() {
      for (std::size_t i = 0; i < n->grad.v.size(); ++i) pp->grad.v[i] += n->grad.v[i];
    };
    return n;
  }

  /// Seeds the (scalar) root with gradient 1 and runs the whole tape.
  void backward(Node* root) {
    if (root->val().size() != 1)
      throw InternalError("backward root must be scalar, got shape " + root->val().shape_str());
    root->grad.v[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node* n = it->get();
      if (n->requires_grad && n->backward) n->backward();
    }
  }

  Node* push(Tensor value, bool requires_grad) {
    nodes_.push_back(std::make_unique<Node>());
    Node* n = nodes_.back().get();
    n->grad = Tensor::zeros(value.shape);
    n->owned = std::move(value);
    n->requires_grad = requires_grad;
    return n;
  }

  Node* push_view(const Tensor& value, bool requires_grad) {
    nodes_.push_back(std::make_unique<Node>());
    Node* n = nodes_.back().get();
    n->grad = Tensor::zeros(value.shape);
    n->viewed = &value;
    n->requires_grad = requires_grad;
    return n;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

namespace ops {

/// Output extent of a convolution axis: floor((H + 2*pad - K)/stride) + 1.
inline int conv_out_extent(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

/// 2-D cross-correlation with bias. input (N,Cin,H,W), weights
/// (Cout,Cin,KH,KW), bias (Cout) -> (N,Cout,OH,OW).
inline Node* conv2d(Tape& tape, Node* input, Node* weights, Node* bias, int stride, int pad) {
  const Tensor& x = input->val();
  const Tensor& w = weights->val();
  const Tensor& b = bias->val();
  if (x.rank() != 4 || w.rank() != 4)
    detail::fail_input("conv2d expects 4-d input and weights, got input ", x.shape_str(),
                       " weights ", w.shape_str());
  if (x.dim(1) != w.dim(1))
    detail::fail_input("conv2d channel mismatch: input ", x.shape_str(), " vs weights ",
                       w.shape_str());
  if (b.rank() != 1 || b.dim(0) != w.dim(0))
    detail::fail_input("conv2d bias shape ", b.shape_str(), " does not match weights ",
                       w.shape_str());
  if (stride < 1) detail::fail_input("conv2d stride must be positive");
  if (pad < 0) detail::fail_input("conv2d pad must be non-negative");

  const int n_batch = x.dim(0), c_in = x.dim(1), h_in = x.dim(2), w_in = x.dim(3);
  const int c_out = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int h_out = conv_out_extent(h_in, kh, stride, pad);
  const int w_out = conv_out_extent(w_in, kw, stride, pad);
  if (h_out < 1 || w_out < 1)
    detail::fail_input("conv2d output would be empty for input ", x.shape_str(), " weights ",
                       w.shape_str(), " stride ", std::to_string(stride), " pad ",
                       std::to_string(pad));

  // per-tap output-column bounds keeping ow*stride - pad + c inside the row
  const auto ow_lo = [&](int c) {
    const int num = pad - c;
    return num <= 0 ? 0 : (num + stride - 1) / stride;
  };
  const auto ow_hi = [&](int c, int w_in_, int w_out_) {
    const int num = w_in_ - 1 - c + pad;
    return num < 0 ? 0 : std::min(w_out_, num / stride + 1);
  };

  Tensor out = Tensor::zeros({n_batch, c_out, h_out, w_out});
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < n_batch; ++n) {
    for (int oc = 0; oc < c_out; ++oc) {
      double* obase = &out.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_out + oc) * h_out * w_out)];
      const double bias_v = b.v[static_cast<std::size_t>(oc)];
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(h_out) * w_out; ++i) obase[i] = bias_v;
      for (int ic = 0; ic < c_in; ++ic) {
        const double* xbase = &x.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_in + ic) * h_in * w_in)];
        for (int r = 0; r < kh; ++r) {
          const double* wrow = &w.v[static_cast<std::size_t>(((static_cast<std::int64_t>(oc) * c_in + ic) * kh + r) * kw)];
          for (int oh = 0; oh < h_out; ++oh) {
            const int ih = oh * stride - pad + r;
            if (ih < 0 || ih >= h_in) continue;
            const double* xrow = xbase + static_cast<std::int64_t>(ih) * w_in;
            double* orow = obase + static_cast<std::int64_t>(oh) * w_out;
            for (int c = 0; c < kw; ++c) {
              const double w_s = wrow[c];
              if (w_s == 0.0) continue;
              const int lo = ow_lo(c), hi = ow_hi(c, w_in, w_out);
              const double* xoff = xrow + c - pad;
              for (int ow = lo; ow < hi; ++ow) orow[ow] += w_s * xoff[static_cast<std::int64_t>(ow) * stride];
            }
          }
        }
      }
    }
  }

  Node* node = tape.push(std::move(out), input->requires_grad || weights->requires_grad || bias->requires_grad);
  node->backward = [node, input, weights, bias, stride, pad]() {
    const Tensor& x = input->val();
    const Tensor& w = weights->val();
    const Tensor& g = node->grad;
    const int n_batch = x.dim(0), c_in = x.dim(1), h_in = x.dim(2), w_in = x.dim(3);
    const int c_out = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int h_out = g.dim(2), w_out = g.dim(3);

    const auto ow_lo = [&](int c) {
      const int num = pad - c;
      return num <= 0 ? 0 : (num + stride - 1) / stride;
    };
    const auto ow_hi = [&](int c) {
      const int num = w_in - 1 - c + pad;
      return num < 0 ? 0 : std::min(w_out, num / stride + 1);
    };

    if (weights->requires_grad) {
      Tensor& dw = weights->grad;
#pragma omp parallel for schedule(static)
      for (int oc = 0; oc < c_out; ++oc) {
        for (int n = 0; n < n_batch; ++n) {
          const double* gbase = &g.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_out + oc) * h_out * w_out)];
          for (int ic = 0; ic < c_in; ++ic) {
            const double* xbase = &x.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_in + ic) * h_in * w_in)];
            for (int r = 0; r < kh; ++r) {
              double* dwrow = &dw.v[static_cast<std::size_t>(((static_cast<std::int64_t>(oc) * c_in + ic) * kh + r) * kw)];
              for (int oh = 0; oh < h_out; ++oh) {
                const int ih = oh * stride - pad + r;
                if (ih < 0 || ih >= h_in) continue;
                const double* grow = gbase + static_cast<std::int64_t>(oh) * w_out;
                const double* xrow = xbase + static_cast<std::int64_t>(ih) * w_in;
                for (int c = 0; c < kw; ++c) {
                  const int lo = ow_lo(c), hi = ow_hi(c);
                  const double* xoff = xrow + c - pad;
                  double acc = 0.0;
                  for (int ow = lo; ow < hi; ++ow) acc += grow[ow] * xoff[static_cast<std::int64_t>(ow) * stride];
                  dwrow[c] += acc;
                }
              }
            }
          }
        }
      }
    }
    if (bias->requires_grad) {
      for (int n = 0; n < n_batch; ++n)
        for (int oc = 0; oc < c_out; ++oc) {
          double acc = 0.0;
          for (int oh = 0; oh < h_out; ++oh)
            for (int ow = 0; ow < w_out; ++ow) acc += g.at(n, oc, oh, ow);
          bias->grad.v[static_cast<std::size_t>(oc)] += acc;
        }
    }
    if (input->requires_grad) {
      Tensor& dx = input->grad;
#pragma omp parallel for collapse(2) schedule(static)
      for (int n = 0; n < n_batch; ++n) {
        for (int ic = 0; ic < c_in; ++ic) {
          double* dxbase = &dx.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_in + ic) * h_in * w_in)];
          for (int oc = 0; oc < c_out; ++oc) {
            const double* gbase = &g.v[static_cast<std::size_t>((static_cast<std::int64_t>(n) * c_out + oc) * h_out * w_out)];
            for (int r = 0; r < kh; ++r) {
              const double* wrow = &w.v[static_cast<std::size_t>(((static_cast<std::int64_t>(oc) * c_in + ic) * kh + r) * kw)];
              for (int oh = 0; oh < h_out; ++oh) {
                const int ih = oh * stride - pad + r;
                if (ih < 0 || ih >= h_in) continue;
                const double* grow = gbase + static_cast<std::int64_t>(oh) * w_out;
                double* dxrow = dxbase + static_cast<std::int64_t>(ih) * w_in;
                for (int c = 0; c < kw; ++c) {
                  const double w_s = wrow[c];
                  if (w_s == 0.0) continue;
                  const int lo = ow_lo(c), hi = ow_hi(c);
                  double* dxoff = dxrow + c - pad;
                  for (int ow = lo; ow < hi; ++ow) dxoff[static_cast<std::int64_t>(ow) * stride] += w_s * grow[ow];
                }
              }
            }
          }
        }
      }
    }
  };
  return node;
}

/// Elementwise max(x, slope*x). Backward uses the slope branch at exactly 0.
inline Node* leaky_relu(Tape& tape, Node* input, double slope) {
  if (!(slope > 0.0 && slope < 1.0))
    detail::fail_input("leaky_relu slope must lie in (0, 1), got ", std::to_string(slope));
  Tensor out = input->val();
  for (double& x : out.v)
    if (x <= 0.0) x *= slope;
  Node* node = tape.push(std::move(out), input->requires_grad);
  node->backward = [node, input, slope]() {
    if (!input->requires_grad) return;
    for (std::size_t i = 0; i < node->grad.v.size(); ++i) {
      const double factor = input->val().v[i] > 0.0 ? 1.0 : slope;
      input->grad.v[i] += node->grad.v[i] * factor;
    }
  };
  return node;
}

/// Per-(sample, channel) standardization with affine gain/offset.
/// gain and offset have shape (C). eps stabilizes constant planes.
inline Node* instance_norm(Tape& tape, Node* input, Node* gain, Node* offset, double eps = 1e-5) {
  const Tensor& x = input->val();
  if (x.rank() != 4)
    detail::fail_input("instance_norm expects a 4-d input, got ", x.shape_str());
  const int n_batch = x.dim(0), chans = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (plane < 1) detail::fail_input("instance_norm needs at least one spatial element");
  if (gain->val().size() != chans || offset->val().size() != chans)
    detail::fail_input("instance_norm gain/offset must have one entry per channel (",
                       std::to_string(chans), "), got ", gain->val().shape_str(), " and ",
                       offset->val().shape_str());

  // keep the standardized activations for the backward pass
  auto xhat = std::make_shared<Tensor>(Tensor::zeros(x.shape));
  auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n_batch) * chans);
  Tensor out = Tensor::zeros(x.shape);
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < chans; ++c) {
      const std::size_t base = static_cast<std::size_t>((static_cast<std::int64_t>(n) * chans + c) * plane);
      double mean = 0.0;
      for (int i = 0; i < plane; ++i) mean += x.v[base + static_cast<std::size_t>(i)];
      mean /= plane;
      double var = 0.0;
      for (int i = 0; i < plane; ++i) {
        const double d = x.v[base + static_cast<std::size_t>(i)] - mean;
        var += d * d;
      }
      var /= plane;
      const double is = 1.0 / std::sqrt(var + eps);
      (*inv_sigma)[static_cast<std::size_t>(n) * chans + c] = is;
      const double gc = gain->val().v[static_cast<std::size_t>(c)];
      const double oc = offset->val().v[static_cast<std::size_t>(c)];
      for (int i = 0; i < plane; ++i) {
        const double xh = (x.v[base + static_cast<std::size_t>(i)] - mean) * is;
        xhat->v[base + static_cast<std::size_t>(i)] = xh;
        out.v[base + static_cast<std::size_t>(i)] = gc * xh + oc;
      }
    }
  }

  Node* node = tape.push(std::move(out),
                         input->requires_grad || gain->requires_grad || offset->requires_grad);
  node->backward = [node, input, gain, offset, xhat, inv_sigma]() {
    const Tensor& g = node->grad;
    const int n_batch = g.dim(0), chans = g.dim(1), plane = g.dim(2) * g.dim(3);
    for (int n = 0; n < n_batch; ++n) {
      for (int c = 0; c < chans; ++c) {
        const std::size_t base = static_cast<std::size_t>((static_cast<std::int64_t>(n) * chans + c) * plane);
        double sum_g = 0.0, sum_gx = 0.0;
        for (int i = 0; i < plane; ++i) {
          sum_g += g.v[base + static_cast<std::size_t>(i)];
          sum_gx += g.v[base + static_cast<std::size_t>(i)] * xhat->v[base + static_cast<std::size_t>(i)];
        }
        if (gain->requires_grad) gain->grad.v[static_cast<std::size_t>(c)] += sum_gx;
        if (offset->requires_grad) offset->grad.v[static_cast<std::size_t>(c)] += sum_g;
        if (input->requires_grad) {
          const double gc = gain->val().v[static_cast<std::size_t>(c)];
          const double is = (*inv_sigma)[static_cast<std::size_t>(n) * chans + c];
          const double mg = sum_g / plane;
          const double mgx = sum_gx / plane;
          for (int i = 0; i < plane; ++i) {
            const double xh = xhat->v[base + static_cast<std::size_t>(i)];
            input->grad.v[base + static_cast<std::size_t>(i)] +=
                gc * is * (g.v[base + static_cast<std::size_t>(i)] - mg - xh * mgx);
          }
        }
      }
    }
  };
  return node;
}

/// Nearest-neighbor 2x upsampling, (N,C,H,W) -> (N,C,2H,2W).
inline Node* upsample2x(Tape& tape, Node* input) {
  const Tensor& x = input->val();
  if (x.rank() != 4) detail::fail_input("upsample2x expects a 4-d input, got ", x.shape_str());
  const int n_batch = x.dim(0), chans = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = Tensor::zeros({n_batch, chans, 2 * h, 2 * w});
  for (int n = 0; n < n_batch; ++n)
    for (int c = 0; c < chans; ++c)
      for (int i = 0; i < 2 * h; ++i)
        for (int j = 0; j < 2 * w; ++j) out.at(n, c, i, j) = x.at(n, c, i / 2, j / 2);
  Node* node = tape.push(std::move(out), input->requires_grad);
  node->backward = [node, input]() {
    if (!input->requires_grad) return;
    const Tensor& g = node->grad;
    const int n_batch = g.dim(0), chans = g.dim(1), h2 = g.dim(2), w2 = g.dim(3);
    for (int n = 0; n < n_batch; ++n)
      for (int c = 0; c < chans; ++c)
        for (int i = 0; i < h2; ++i)
          for (int j = 0; j < w2; ++j) input->grad.at(n, c, i / 2, j / 2) += g.at(n, c, i, j);
  };
  return node;
}

/// Concatenate two tensors along the channel axis.
inline Node* concat_channels(Tape& tape, Node* a, Node* b) {
  const Tensor& xa = a->val();
  const Tensor& xb = b->val();
  if (xa.rank() != 4 || xb.rank() != 4 || xa.dim(0) != xb.dim(0) || xa.dim(2) != xb.dim(2) ||
      xa.dim(3) != xb.dim(3))
    detail::fail_input("concat_channels operands disagree: ", xa.shape_str(), " vs ",
                       xb.shape_str());
  const int n_batch = xa.dim(0), ca = xa.dim(1), cb = xb.dim(1), h = xa.dim(2), w = xa.dim(3);
  Tensor out = Tensor::zeros({n_batch, ca + cb, h, w});
  for (int n = 0; n < n_batch; ++n) {
    for (int c = 0; c < ca; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(n, c, i, j) = xa.at(n, c, i, j);
    for (int c = 0; c < cb; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(n, ca + c, i, j) = xb.at(n, c, i, j);
  }
  Node* node = tape.push(std::move(out), a->requires_grad || b->requires_grad);
  node->backward = [node, a, b]() {
    const Tensor& g = node->grad;
    const int n_batch = g.dim(0), ca = a->val().dim(1), cb = b->val().dim(1);
    const int h = g.dim(2), w = g.dim(3);
    for (int n = 0; n < n_batch; ++n) {
      if (a->requires_grad)
        for (int c = 0; c < ca; ++c)
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) a->grad.at(n, c, i, j) += g.at(n, c, i, j);
      if (b->requires_grad)
        for (int c = 0; c < cb; ++c)
          for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) b->grad.at(n, c, i, j) += g.at(n, ca + c, i, j);
    }
  };
  return node;
}

/// Arithmetic mean over all elements -> scalar node.
inline Node* mean_all(Tape& tape, Node* input) {
  const std::int64_t n = input->val().size();
  double acc = 0.0;
  for (double x : input->val().v) acc += x;
  Node* node = tape.push(Tensor::scalar(acc / static_cast<double>(n)), input->requires_grad);
  node->backward = [node, input, n]() {
    if (!input->requires_grad) return;
    const double g = node->grad.v[0] / static_cast<double>(n);
    for (double& d : input->grad.v) d += g;
  };
  return node;
}

/// mean((x - target)^2) -> scalar node; the LSGAN building block.
inline Node* square_diff_mean(Tape& tape, Node* input, double target) {
  const std::int64_t n = input->val().size();
  double acc = 0.0;
  for (double x : input->val().v) acc += (x - target) * (x - target);
  Node* node = tape.push(Tensor::scalar(acc / static_cast<double>(n)), input->requires_grad);
  node->backward = [node, input, target, n]() {
    if (!input->requires_grad) return;
    const double g = node->grad.v[0];
    for (std::size_t i = 0; i < input->grad.v.size(); ++i)
      input->grad.v[i] += g * 2.0 * (input->val().v[i] - target) / static_cast<double>(n);
  };
  return node;
}

/// Scalar (or same-shape elementwise) addition.
inline Node* add(Tape& tape, Node* a, Node* b) {
  if (!a->val().same_shape(b->val()))
    detail::fail_input("add operands disagree: ", a->val().shape_str(), " vs ",
                       b->val().shape_str());
  Tensor out = a->val();
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += b->val().v[i];
  Node* node = tape.push(std::move(out), a->requires_grad || b->requires_grad);
  node->backward = [node, a, b]() {
    for (std::size_t i = 0; i < node->grad.v.size(); ++i) {
      if (a->requires_grad) a->grad.v[i] += node->grad.v[i];
      if (b->requires_grad) b->grad.v[i] += node->grad.v[i];
    }
  };
  return node;
}

/// Numerically stable sigmoid cross entropy of a logit against a 0/1 target.
inline double sigmoid_ce(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Segmentation loss: mean over pixels and the three foreground channels of
/// sigmoid cross entropy against one-hot targets. Pixels whose mask id is 0
/// (background) contribute zero everywhere. scores (N,4,H,W), ids N*H*W.
inline double seg_loss_value(const Tensor& scores, const std::vector<std::uint8_t>& ids) {
  if (scores.rank() != 4 || scores.dim(1) != 4)
    detail::fail_input("seg_loss expects (N,4,H,W) scores, got ", scores.shape_str());
  const int n_batch = scores.dim(0), h = scores.dim(2), w = scores.dim(3);
  if (static_cast<std::int64_t>(ids.size()) != static_cast<std::int64_t>(n_batch) * h * w)
    detail::fail_input("seg_loss mask size does not match scores ", scores.shape_str());
  double acc = 0.0;
  for (int n = 0; n < n_batch; ++n)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const std::uint8_t id = ids[static_cast<std::size_t>((static_cast<std::int64_t>(n) * h + i) * w + j)];
        if (id == 0) continue;
        for (int c = 1; c <= 3; ++c)
          acc += sigmoid_ce(scores.at(n, c, i, j), id == c ? 1.0 : 0.0);
      }
  return acc / (static_cast<double>(n_batch) * 3.0 * h * w);
}

/// Tape version of seg_loss_value; mask ids are captured by value.
inline Node* seg_loss(Tape& tape, Node* scores, std::vector<std::uint8_t> ids) {
  const double value = seg_loss_value(scores->val(), ids);
  Node* node = tape.push(Tensor::scalar(value), scores->requires_grad);
  auto ids_held = std::make_shared<std::vector<std::uint8_t>>(std::move(ids));
  node->backward = [node, scores, ids_held]() {
    if (!scores->requires_grad) return;
    const Tensor& s = scores->val();
    const int n_batch = s.dim(0), h = s.dim(2), w = s.dim(3);
    const double g = node->grad.v[0] / (static_cast<double>(n_batch) * 3.0 * h * w);
    for (int n = 0; n < n_batch; ++n)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
          const std::uint8_t id =
              (*ids_held)[static_cast<std::size_t>((static_cast<std::int64_t>(n) * h + i) * w + j)];
          if (id == 0) continue;
          for (int c = 1; c <= 3; ++c) {
            const double t = id == c ? 1.0 : 0.0;
            scores->grad.at(n, c, i, j) += g * (sigmoid(s.at(n, c, i, j)) - t);
          }
        }
  };
  return node;
}

}  // namespace ops
}  // namespace cmgan
