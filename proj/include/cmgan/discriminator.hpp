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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cmgan/autodiff.hpp"
#include "cmgan/rng.hpp"

namespace cmgan {

/// PatchGAN discriminator: five 4x4 convolutions (strides 2,2,2,1,1, pad 1),
/// channel widths w/2w/4w/8w/1, leaky-ReLU 0.2 after all but the last layer,
/// instance norm on the hidden blocks except the first. Emits a 2-D score
/// map judging local patches plus the scalar mean of the map.
class Discriminator {
 public:
  static constexpr int kKernel = 4;
  static constexpr int kPad = 1;
  static constexpr double kSlope = 0.2;

  explicit Discriminator(Rng& rng, int base_width = 64, bool instance_norm = true)
      : base_width_(base_width) {
    if (base_width < 1) detail::fail_input("discriminator width must be positive");
    const int w = base_width;
    add_conv("d.conv1", 3, w, rng);
    add_conv("d.conv2", w, 2 * w, rng);
    if (instance_norm) add_norm("d.norm2", 2 * w);
    add_conv("d.conv3", 2 * w, 4 * w, rng);
    if (instance_norm) add_norm("d.norm3", 4 * w);
    add_conv("d.conv4", 4 * w, 8 * w, rng);
    if (instance_norm) add_norm("d.norm4", 8 * w);
    add_conv("d.conv5", 8 * w, 1, rng);
  }

  int base_width() const { return base_width_; }

  /// Smallest square input that still yields a non-empty score map.
  int min_input() const {
    // invert the stack: each layer needs out >= 1 working backwards
    int need = 1;
    const int strides[5] = {2, 2, 2, 1, 1};
    for (int l = 4; l >= 0; --l)
      need = (need - 1) * strides[l] + kKernel - 2 * kPad;
    return need;
  }

  /// Score map node for a (1,3,H,W) input. With `trainable` false the
  /// weights enter the tape as frozen leaves, so gradient flows through the
  /// stack into the input but not into the discriminator.
  Node* score_map(Tape& tape, Node* input, bool trainable = true) {
    const int h = input->val().dim(2), w = input->val().dim(3);
    if (h < min_input() || w < min_input())
      detail::fail_input("discriminator input ", std::to_string(h), "x", std::to_string(w),
                         " is below the minimum supported extent ", std::to_string(min_input()));
    auto p = [&](Parameter& par) { return trainable ? tape.param(par) : tape.frozen(par); };
    const int strides[5] = {2, 2, 2, 1, 1};
    Node* x = input;
    for (int l = 0; l < 5; ++l) {
      x = ops::conv2d(tape, x, p(params_[conv_off_[l]]), p(params_[conv_off_[l] + 1]), strides[l],
                      kPad);
      if (norm_off_[l] >= 0)
        x = ops::instance_norm(tape, x, p(params_[norm_off_[l]]), p(params_[norm_off_[l] + 1]));
      if (l < 4) x = ops::leaky_relu(tape, x, kSlope);
    }
    return x;
  }

  /// (score map, scalar mean score).
  std::pair<Node*, Node*> discriminate(Tape& tape, Node* input, bool trainable = true) {
    Node* map = score_map(tape, input, trainable);
    return {map, ops::mean_all(tape, map)};
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

 private:
  void add_conv(const std::string& name, int in_ch, int out_ch, Rng& rng) {
    Tensor w = Tensor::zeros({out_ch, in_ch, kKernel, kKernel});
    // small init keeps the young critic gentle; it sharpens as it trains,
    // which lets the color entries travel before being policed
    for (double& x : w.v) x = rng.normal(0.0, 0.02);
    conv_off_[n_conv_++] = static_cast<int>(params_.size());
    params_.emplace_back(name + ".w", std::move(w));
    params_.emplace_back(name + ".b", Tensor::zeros({out_ch}));
  }

  void add_norm(const std::string& name, int chans) {
    norm_off_[n_conv_ - 1] = static_cast<int>(params_.size());
    params_.emplace_back(name + ".gain", Tensor::full({chans}, 1.0));
    params_.emplace_back(name + ".offset", Tensor::zeros({chans}));
  }

  int base_width_;
  std::vector<Parameter> params_;
  int n_conv_ = 0;
  int conv_off_[5] = {0, 0, 0, 0, 0};
  int norm_off_[5] = {-1, -1, -1, -1, -1};
};

}  // namespace cmgan
