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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cmgan/adam.hpp"
#include "cmgan/autodiff.hpp"
#include "cmgan/gan.hpp"  // normalized_tensor
#include "cmgan/image.hpp"
#include "cmgan/rng.hpp"
#include "cmgan/tiling.hpp"

namespace cmgan {

// --- augmentation ------------------------------------------------------------

enum class FlipMode { kNone = 0, kHorizontal = 1, kVertical = 2 };

/// One augmentation draw: a flip composed with a counter-clockwise rotation.
/// Flips apply before rotation.
struct AugmentDraw {
  FlipMode flip = FlipMode::kNone;
  int quarter_turns = 0;  // 0..3, counter-clockwise
};

inline AugmentDraw random_augment_draw(Rng& rng) {
  AugmentDraw d;
  d.flip = static_cast<FlipMode>(rng.uniform_below(3));
  d.quarter_turns = static_cast<int>(rng.uniform_below(4));
  return d;
}

namespace detail {

inline std::vector<std::uint8_t>& plane_data(RasterImage& x) { return x.data; }
inline const std::vector<std::uint8_t>& plane_data(const RasterImage& x) { return x.data; }
inline std::vector<std::uint8_t>& plane_data(LabelMask& x) { return x.ids; }
inline const std::vector<std::uint8_t>& plane_data(const LabelMask& x) { return x.ids; }

// out[r][c] = in[R-1-c][r]; one counter-clockwise quarter turn, so input
// corner (0,0) lands at (0, 1) on a 2x2 patch.
template <typename Plane>
Plane rotate_ccw(const Plane& in, int channels) {
  Plane out(in.width, in.height);
  for (int r = 0; r < out.height; ++r)
    for (int c = 0; c < out.width; ++c) {
      const int sr = in.height - 1 - c;
      const int sc = r;
      for (int ch = 0; ch < channels; ++ch)
        plane_data(out)[(static_cast<std::size_t>(r) * out.width + c) * channels + ch] =
            plane_data(in)[(static_cast<std::size_t>(sr) * in.width + sc) * channels + ch];
    }
  return out;
}

template <typename Plane>
Plane flip_plane(const Plane& in, int channels, FlipMode mode) {
  if (mode == FlipMode::kNone) return in;
  Plane out(in.height, in.width);
  for (int r = 0; r < in.height; ++r)
    for (int c = 0; c < in.width; ++c) {
      const int sr = mode == FlipMode::kVertical ? in.height - 1 - r : r;
      const int sc = mode == FlipMode::kHorizontal ? in.width - 1 - c : c;
      for (int ch = 0; ch < channels; ++ch)
        plane_data(out)[(static_cast<std::size_t>(r) * in.width + c) * channels + ch] =
            plane_data(in)[(static_cast<std::size_t>(sr) * in.width + sc) * channels + ch];
    }
  return out;
}

template <typename Plane>
Plane augment_plane(const Plane& in, int channels, AugmentDraw draw) {
  Plane out = flip_plane(in, channels, draw.flip);
  for (int i = 0; i < (draw.quarter_turns & 3); ++i) out = rotate_ccw(out, channels);
  return out;
}

}  // namespace detail

/// Applies the same flip+rotation to an image/mask pair.
inline std::pair<RasterImage, LabelMask> augment(const RasterImage& patch, const LabelMask& mask,
                                                 AugmentDraw draw) {
  if (patch.height != mask.height || patch.width != mask.width)
    detail::fail_input("augment: image ", std::to_string(patch.height), "x",
                       std::to_string(patch.width), " and mask ", std::to_string(mask.height),
                       "x", std::to_string(mask.width), " disagree");
  return {detail::augment_plane(patch, 3, draw), detail::augment_plane(mask, 1, draw)};
}

// --- the network -------------------------------------------------------------

struct SegNetConfig {
  int depth = 3;       // down/up levels
  int base_width = 16; // channels at full resolution
  int kernel = 3;      // odd; 1 gives a pointwise net

  void validate() const {
    if (depth < 0) detail::fail_input("segmenter depth must be non-negative");
    if (base_width < 1) detail::fail_input("segmenter width must be positive");
    if (kernel < 1 || kernel % 2 == 0) detail::fail_input("segmenter kernel must be odd");
  }
};

/// Encoder-decoder segmenter with skip connections and one score channel per
/// class. No normalization layers; leaky-ReLU activations throughout.
class SegNet {
 public:
  static constexpr double kSlope = 0.2;

  SegNet(Rng& rng, SegNetConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    const int k = cfg_.kernel;
    add_conv("seg.stem", 3, width(0), k, rng);
    for (int l = 1; l <= cfg_.depth; ++l) {
      add_conv("seg.down" + std::to_string(l), width(l - 1), width(l), k, rng);
      add_conv("seg.mix" + std::to_string(l), width(l), width(l), k, rng);
    }
    for (int l = cfg_.depth; l >= 1; --l)
      add_conv("seg.up" + std::to_string(l), width(l) + width(l - 1), width(l - 1), k, rng);
    add_conv("seg.head", width(0), kNumClasses, 1, rng);
  }

  const SegNetConfig& config() const { return cfg_; }
  int extent_divisor() const { return 1 << cfg_.depth; }

  /// Class scores (N,4,H,W) for a normalized (N,3,H,W) input. Spatial extent
  /// is preserved; H and W must be divisible by 2^depth.
  Node* forward(Tape& tape, Node* input, bool trainable = true) {
    const Tensor& x = input->val();
    if (x.rank() != 4 || x.dim(1) != 3)
      detail::fail_input("segmenter expects (N,3,H,W) input, got ", x.shape_str());
    if (x.dim(2) % extent_divisor() || x.dim(3) % extent_divisor())
      detail::fail_input("segmenter input extent ", std::to_string(x.dim(2)), "x",
                         std::to_string(x.dim(3)), " must be divisible by ",
                         std::to_string(extent_divisor()));
    auto p = [&](int i) { return trainable ? tape.param(params_[static_cast<std::size_t>(i)])
                                           : tape.frozen(params_[static_cast<std::size_t>(i)]); };
    const int pad = cfg_.kernel / 2;
    int pi = 0;
    Node* h = ops::leaky_relu(tape, ops::conv2d(tape, input, p(pi), p(pi + 1), 1, pad), kSlope);
    pi += 2;
    std::vector<Node*> skips{h};
    for (int l = 1; l <= cfg_.depth; ++l) {
      h = ops::leaky_relu(tape, ops::conv2d(tape, h, p(pi), p(pi + 1), 2, pad), kSlope);
      pi += 2;
      h = ops::leaky_relu(tape, ops::conv2d(tape, h, p(pi), p(pi + 1), 1, pad), kSlope);
      pi += 2;
      skips.push_back(h);
    }
    for (int l = cfg_.depth; l >= 1; --l) {
      Node* up = ops::upsample2x(tape, h);
      Node* cat = ops::concat_channels(tape, up, skips[static_cast<std::size_t>(l - 1)]);
      h = ops::leaky_relu(tape, ops::conv2d(tape, cat, p(pi), p(pi + 1), 1, pad), kSlope);
      pi += 2;
    }
    return ops::conv2d(tape, h, p(pi), p(pi + 1), 1, 0);  // head, linear scores
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

 private:
  int width(int level) const { return cfg_.base_width << level; }

  void add_conv(const std::string& name, int in_ch, int out_ch, int k, Rng& rng) {
    Tensor w = Tensor::zeros({out_ch, in_ch, k, k});
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in_ch) * k * k));
    for (double& x : w.v) x = rng.normal(0.0, stddev);
    params_.emplace_back(name + ".w", std::move(w));
    params_.emplace_back(name + ".b", Tensor::zeros({out_ch}));
  }

  SegNetConfig cfg_;
  std::vector<Parameter> params_;
};

// --- training ----------------------------------------------------------------

struct SegTrainConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 32;
  int iterations = 2500;  // 750 is the fine-tuning convention
  std::uint64_t seed = 0;
  int log_every = 100;
  std::function<void(int, double)> log;  // iteration, loss

  void validate() const {
    if (!(lr > 0.0)) detail::fail_input("learning rate must be positive");
    if (batch < 1) detail::fail_input("batch size must be >= 1");
    if (iterations < 1) detail::fail_input("iteration budget must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      detail::fail_input("Adam decay rates must lie in [0, 1)");
  }
};

using SegSample = std::pair<RasterImage, LabelMask>;

/// Seeded minibatch Adam training with flip/rotation augmentation.
/// Identical seeds and data give identical final weights.
inline std::vector<double> train_segmenter(const std::vector<SegSample>& data, SegNet& net,
                                           const SegTrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) detail::fail_input("train_segmenter needs a non-empty data set");
  const int h = data[0].first.height, w = data[0].first.width;
  for (const auto& [img, mask] : data)
    if (img.height != h || img.width != w || mask.height != h || mask.width != w)
      detail::fail_input("train_segmenter patches must share one extent");

  Rng rng(cfg.seed);
  std::vector<Parameter*> params = net.parameters();
  std::vector<AdamState> opt;
  opt.reserve(params.size());
  for (Parameter* p : params) {
    opt.emplace_back(p->value.shape, cfg.lr, cfg.beta1, cfg.beta2);
    opt.back().eps = cfg.adam_eps;
  }

  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    Tensor batch = Tensor::zeros({cfg.batch, 3, h, w});
    std::vector<std::uint8_t> ids(static_cast<std::size_t>(cfg.batch) * h * w);
    for (int b = 0; b < cfg.batch; ++b) {
      const auto& [img, mask] = data[rng.uniform_below(data.size())];
      const auto [aug_img, aug_mask] = augment(img, mask, random_augment_draw(rng));
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const auto* px = aug_img.pixel(r, c);
          for (int ch = 0; ch < 3; ++ch) batch.at(b, ch, r, c) = normalize_level(px[ch]);
          ids[static_cast<std::size_t>((static_cast<std::int64_t>(b) * h + r) * w + c)] =
              aug_mask.at(r, c);
        }
    }
    Tape tape;
    Node* scores = net.forward(tape, tape.leaf(std::move(batch)), /*trainable=*/true);
    Node* loss = ops::seg_loss(tape, scores, std::move(ids));
    history.push_back(loss->val().v[0]);
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i], opt[i]);
    if (cfg.log && cfg.log_every > 0 && (iter + 1) % cfg.log_every == 0)
      cfg.log(iter + 1, history.back());
  }
  return history;
}

/// Continues training an already-trained net on recolored patches with the
/// original masks.
inline std::vector<double> finetune(SegNet& net, const std::vector<SegSample>& fake_data,
                                    const SegTrainConfig& cfg) {
  return train_segmenter(fake_data, net, cfg);
}

// --- prediction --------------------------------------------------------------

/// Foreground sigmoid scores (3,h,w) of one patch.
inline Tensor patch_scores(SegNet& net, const RasterImage& patch) {
  Tape tape;
  Node* scores = net.forward(tape, tape.leaf(normalized_tensor(patch)), /*trainable=*/false);
  const Tensor& s = scores->val();
  Tensor out = Tensor::zeros({3, patch.height, patch.width});
  for (int c = 1; c <= 3; ++c)
    for (int r = 0; r < patch.height; ++r)
      for (int j = 0; j < patch.width; ++j)
        out.v[static_cast<std::size_t>((static_cast<std::int64_t>(c - 1) * patch.height + r) * patch.width + j)] =
            ops::sigmoid(s.at(0, c, r, j));
  return out;
}

/// Decision rule on stitched foreground probabilities: argmax of the three
/// sigmoids where the max exceeds 0.5, else background. Ties go to the
/// smaller class id.
inline LabelMask decide_mask(const Tensor& probs) {
  const int h = probs.dim(1), w = probs.dim(2);
  LabelMask mask(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      int best = 0;
      double best_p = 0.5;
      for (int cls = 0; cls < 3; ++cls) {
        const double p = probs.v[static_cast<std::size_t>((static_cast<std::int64_t>(cls) * h + r) * w + c)];
        if (p > best_p) {
          best_p = p;
          best = cls + 1;
        }
      }
      mask.at(r, c) = static_cast<std::uint8_t>(best);
    }
  return mask;
}

/// Tiled prediction: per-patch sigmoid scores, averaged over overlaps, then
/// the fixed decision rule.
inline LabelMask predict(SegNet& net, const RasterImage& image, const TileGrid& grid) {
  if (grid.image_height != image.height || grid.image_width != image.width)
    detail::fail_input("predict: grid extent ", std::to_string(grid.image_height), "x",
                       std::to_string(grid.image_width), " does not match image ",
                       std::to_string(image.height), "x", std::to_string(image.width));
  std::vector<Tensor> scores;
  scores.reserve(grid.origins.size());
  for (const auto& [r, c] : grid.origins)
    scores.push_back(patch_scores(net, extract_patch(image, r, c, grid.patch_size)));
  return decide_mask(stitch_scores(grid, scores));
}

inline LabelMask predict(SegNet& net, const RasterImage& image, int patch_size, int overlap) {
  return predict(net, image, make_tile_grid(image.height, image.width, patch_size, overlap));
}

}  // namespace cmgan
