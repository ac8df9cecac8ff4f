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

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmgan/adam.hpp"
#include "cmgan/colormap.hpp"
#include "cmgan/discriminator.hpp"
#include "cmgan/rng.hpp"

namespace cmgan {

/// Least-squares discriminator objective: real patches are pushed to score 1,
/// generator outputs to score 0.
inline double d_loss(const std::vector<double>& scores_real,
                     const std::vector<double>& scores_fake) {
  if (scores_real.empty() || scores_fake.empty())
    detail::fail_input("d_loss needs non-empty score sets");
  double real = 0.0, fake = 0.0;
  for (double s : scores_real) real += (s - 1.0) * (s - 1.0);
  for (double s : scores_fake) fake += s * s;
  return real / static_cast<double>(scores_real.size()) +
         fake / static_cast<double>(scores_fake.size());
}

/// Least-squares generator objective: fool the discriminator toward 1.
inline double g_loss(const std::vector<double>& scores_fake) {
  if (scores_fake.empty()) detail::fail_input("g_loss needs a non-empty score set");
  double fake = 0.0;
  for (double s : scores_fake) fake += (s - 1.0) * (s - 1.0);
  return fake / static_cast<double>(scores_fake.size());
}

struct GanTrainConfig {
  double g_lr = 5e-4;
  double d_lr = 1e-4;
  int iterations = 8000;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // sparse per-color moments see short, bursty gradient streams; a larger
  // stabilizer keeps entries from random-walking once they reach equilibrium
  double g_adam_eps = 1e-4;
  int disc_base_width = 64;
  // instance norm removes the per-channel means the discriminator needs to
  // spot a color shift; the stack trains far better without it here
  bool disc_instance_norm = false;
  // the returned map is a Polyak average of the live entries, which cancels
  // the oscillation of the adversarial equilibrium; 0 returns the raw map
  double g_ema_decay = 0.998;
  std::uint64_t seed = 0;
  int log_every = 100;
  std::function<void(int, double, double)> log;  // iteration, d_loss, g_loss

  void validate() const {
    if (!(g_lr > 0.0) || !(d_lr > 0.0)) detail::fail_input("learning rates must be positive");
    if (iterations < 0) detail::fail_input("iteration count must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      detail::fail_input("Adam decay rates must lie in [0, 1)");
    if (g_ema_decay < 0.0 || g_ema_decay >= 1.0)
      detail::fail_input("averaging decay must lie in [0, 1)");
    if (disc_base_width < 1) detail::fail_input("discriminator width must be positive");
  }
};

struct GanTrainResult {
  ColorMap map;
  std::vector<std::pair<double, double>> history;  // (d_loss, g_loss) per iteration
};

/// Normalized (1,3,H,W) tensor of a raster.
inline Tensor normalized_tensor(const RasterImage& image) {
  Tensor t = Tensor::zeros({1, 3, image.height, image.width});
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      const auto* p = image.pixel(r, c);
      for (int ch = 0; ch < 3; ++ch) t.at(0, ch, r, c) = normalize_level(p[ch]);
    }
  return t;
}

/// Generator output as a (1,3,H,W) tensor without building a tape.
inline Tensor recolored_tensor(const ColorMap& map, const RasterImage& patch) {
  Tensor t = Tensor::zeros({1, 3, patch.height, patch.width});
  const std::vector<ColorIndex> idx = pixel_color_indices(patch);
  for (int r = 0; r < patch.height; ++r)
    for (int c = 0; c < patch.width; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * patch.width + c;
      const ColorEntry e = map.lookup(idx[p]);
      for (int ch = 0; ch < 3; ++ch)
        t.at(0, ch, r, c) = clamp_unit(
            normalize_level(patch.data[p * 3 + static_cast<std::size_t>(ch)]) *
                e.w[static_cast<std::size_t>(ch)] +
            e.k[static_cast<std::size_t>(ch)]);
    }
  return t;
}

namespace detail {

/// Lazily materialized Adam moments for the sparse color entries; bias
/// correction uses the shared step counter. Gradients are normalized by the
/// pixel count behind them, so every color sees the same gradient scale and
/// one epsilon damps the equilibrium noise of common and rare colors alike.
struct SparseAdam {
  std::unordered_map<ColorIndex, std::array<double, 12>> moments;  // m[0..5], v[6..11]
  std::int64_t t = 0;

  void step(ColorMap& map, const ColorMapGrad& grads, double lr, double beta1, double beta2,
            double eps) {
    t += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    std::vector<ColorIndex> order;
    order.reserve(grads.g.size());
    for (const auto& [idx, g6] : grads.g) order.push_back(idx);
    std::sort(order.begin(), order.end());
    for (ColorIndex idx : order) {
      const auto& g6 = grads.g.at(idx);
      const bool all_zero = g6 == std::array<double, 6>{};
      auto st = moments.find(idx);
      if (all_zero && st == moments.end()) continue;  // keep identity entries virtual
      if (st == moments.end()) st = moments.emplace(idx, std::array<double, 12>{}).first;
      auto& mv = st->second;
      ColorEntry& e = map.touch(idx);
      const auto np = grads.pixels.find(idx);
      const double denom = np == grads.pixels.end() || np->second < 1
                               ? 1.0
                               : static_cast<double>(np->second);
      for (int c = 0; c < 6; ++c) {
        const double g = g6[static_cast<std::size_t>(c)] / denom;
        double& m = mv[static_cast<std::size_t>(c)];
        double& v = mv[static_cast<std::size_t>(c) + 6];
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        const double delta = lr * (m / c1) / (std::sqrt(v / c2) + eps);
        if (c < 3)
          e.w[static_cast<std::size_t>(c)] -= delta;
        else
          e.k[static_cast<std::size_t>(c) - 3] -= delta;
      }
    }
  }
};

}  // namespace detail

/// ColorMapGAN training: per iteration, sample one source and one target
/// patch, update the discriminator on (target = real, recolored source =
/// fake), then update the touched color entries against the frozen
/// discriminator. Bit-reproducible for a fixed seed.
inline GanTrainResult train_colormapgan(const std::vector<RasterImage>& source,
                                        const std::vector<RasterImage>& target,
                                        const GanTrainConfig& cfg) {
  cfg.validate();
  if (source.empty() || target.empty())
    detail::fail_input("train_colormapgan needs non-empty source and target patch sets");

  Rng rng(cfg.seed);
  Discriminator disc(rng, cfg.disc_base_width, cfg.disc_instance_norm);
  std::vector<Parameter*> d_params = disc.parameters();
  std::vector<AdamState> d_opt;
  d_opt.reserve(d_params.size());
  for (Parameter* p : d_params) {
    d_opt.emplace_back(p->value.shape, cfg.d_lr, cfg.beta1, cfg.beta2);
    d_opt.back().eps = cfg.adam_eps;
  }

  GanTrainResult result;
  ColorMap live;
  detail::SparseAdam g_opt;
  ColorMapGrad sink;
  std::unordered_map<ColorIndex, std::array<double, 6>> averaged;  // w then k

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const auto& src = source[rng.uniform_below(source.size())];
    const auto& tgt = target[rng.uniform_below(target.size())];

    // discriminator step: least-squares objective on
    // (real = target, fake = current recoloring of the source patch)
    double d_loss_value;
    {
      Tape tape;
      Node* real_in = tape.leaf(normalized_tensor(tgt));
      Node* fake_in = tape.leaf(recolored_tensor(live, src));
      auto [real_map, real_score] = disc.discriminate(tape, real_in, /*trainable=*/true);
      auto [fake_map, fake_score] = disc.discriminate(tape, fake_in, /*trainable=*/true);
      (void)real_map;
      (void)fake_map;
      Node* loss = ops::add(tape, ops::square_diff_mean(tape, real_score, 1.0),
                            ops::square_diff_mean(tape, fake_score, 0.0));
      d_loss_value = loss->val().v[0];
      tape.backward(loss);
      for (std::size_t i = 0; i < d_params.size(); ++i) adam_step(*d_params[i], d_opt[i]);
    }

    // generator step: push D(G(source)) toward 1 through the frozen stack
    double g_loss_value;
    {
      Tape tape;
      sink.clear();
      Node* fake = apply_node(tape, live, src, sink);
      auto [fake_map, fake_score] = disc.discriminate(tape, fake, /*trainable=*/false);
      (void)fake_map;
      Node* loss = ops::square_diff_mean(tape, fake_score, 1.0);
      g_loss_value = loss->val().v[0];
      tape.backward(loss);
      g_opt.step(live, sink, cfg.g_lr, cfg.beta1, cfg.beta2, cfg.g_adam_eps);
    }

    if (cfg.g_ema_decay > 0.0) {
      for (const auto& [idx, e] : live.entries()) {
        auto it = averaged.find(idx);
        if (it == averaged.end()) {
          averaged.emplace(idx, std::array<double, 6>{e.w[0], e.w[1], e.w[2], e.k[0], e.k[1], e.k[2]});
        } else {
          auto& a = it->second;
          for (int c = 0; c < 3; ++c) {
            a[static_cast<std::size_t>(c)] = cfg.g_ema_decay * a[static_cast<std::size_t>(c)] +
                                             (1.0 - cfg.g_ema_decay) * e.w[static_cast<std::size_t>(c)];
            a[static_cast<std::size_t>(c) + 3] =
                cfg.g_ema_decay * a[static_cast<std::size_t>(c) + 3] +
                (1.0 - cfg.g_ema_decay) * e.k[static_cast<std::size_t>(c)];
          }
        }
      }
    }

    result.history.emplace_back(d_loss_value, g_loss_value);
    if (cfg.log && cfg.log_every > 0 && (iter + 1) % cfg.log_every == 0)
      cfg.log(iter + 1, d_loss_value, g_loss_value);
  }

  if (cfg.g_ema_decay > 0.0) {
    for (const auto& [idx, a] : averaged) {
      ColorEntry e;
      e.w = {a[0], a[1], a[2]};
      e.k = {a[3], a[4], a[5]};
      result.map.set(idx, e);
    }
  } else {
    result.map = live;
  }
  return result;
}

}  // namespace cmgan
