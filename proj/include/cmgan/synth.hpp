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
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cmgan/config.hpp"
#include "cmgan/image.hpp"
#include "cmgan/rng.hpp"

namespace cmgan {

/// Per-domain rendering style: an affine shift of the shared palette plus
/// white integer noise.
struct DomainStyle {
  std::array<double, 3> scale{1.0, 1.0, 1.0};   // a
  std::array<double, 3> offset{0.0, 0.0, 0.0};  // b
  int noise_amp = 0;                            // uniform integer in [-amp, amp]
};

/// Dual-domain synthetic scene layout: rectangular buildings, straight road
/// strips, round tree blobs on a flat background. Both domains share exact
/// geometry and differ only in style.
struct SynthConfig {
  int height = 256;
  int width = 256;
  std::array<std::array<int, 3>, kNumClasses> palette = {{
      {100, 130, 150},  // background
      {166, 130, 78},   // building
      {130, 130, 110},  // road
      {60, 96, 60},     // tree
  }};
  int buildings = 14;
  int building_min = 10;
  int building_max = 36;
  int roads = 4;
  int road_min = 4;
  int road_max = 9;
  int trees = 30;
  int tree_min = 3;
  int tree_max = 9;
  DomainStyle domain_a;
  DomainStyle domain_b;
  std::uint64_t seed = 0;

  void validate() const {
    if (height < 1 || width < 1)
      detail::fail_input("synth scene size must be positive, got height=", std::to_string(height),
                         " width=", std::to_string(width));
    if (buildings < 0 || roads < 0 || trees < 0)
      detail::fail_input("synth object counts must be non-negative");
    if (building_min < 1 || building_min > building_max ||
        road_min < 1 || road_min > road_max || tree_min < 1 || tree_min > tree_max)
      detail::fail_input("synth size ranges must satisfy 1 <= min <= max");
    for (const auto& color : palette)
      for (int c : color)
        if (c < 0 || c > 255) detail::fail_input("palette components must lie in [0, 255]");
    for (const DomainStyle* s : {&domain_a, &domain_b}) {
      if (s->noise_amp < 0) detail::fail_input("noise amplitude must be non-negative");
      for (int cls = 0; cls < kNumClasses; ++cls)
        for (int ch = 0; ch < 3; ++ch) {
          const double expected = s->scale[static_cast<std::size_t>(ch)] *
                                      palette[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)] +
                                  s->offset[static_cast<std::size_t>(ch)];
          if (expected < 0.0 || expected > 255.0)
            detail::fail_input("domain shift pushes class ", kClassNames[cls], " channel ",
                               std::to_string(ch), " to ", std::to_string(expected),
                               ", outside [0, 255]");
        }
    }
  }
};

struct SynthScene {
  RasterImage image_a;
  LabelMask mask_a;
  RasterImage image_b;
  LabelMask mask_b;
};

namespace detail {

inline LabelMask synth_geometry(const SynthConfig& cfg, Rng& rng) {
  LabelMask mask(cfg.height, cfg.width, kBackground);
  // roads: full-extent strips
  for (int i = 0; i < cfg.roads; ++i) {
    const bool horizontal = rng.uniform_below(2) == 0;
    const int thickness = rng.uniform_int(cfg.road_min, cfg.road_max);
    if (horizontal) {
      const int r0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.height)));
      for (int r = r0; r < std::min(r0 + thickness, cfg.height); ++r)
        for (int c = 0; c < cfg.width; ++c) mask.at(r, c) = kRoad;
    } else {
      const int c0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.width)));
      for (int c = c0; c < std::min(c0 + thickness, cfg.width); ++c)
        for (int r = 0; r < cfg.height; ++r) mask.at(r, c) = kRoad;
    }
  }
  // tree blobs: filled disks
  for (int i = 0; i < cfg.trees; ++i) {
    const int radius = rng.uniform_int(cfg.tree_min, cfg.tree_max);
    const int cr = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.height)));
    const int cc = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.width)));
    for (int r = std::max(0, cr - radius); r <= std::min(cfg.height - 1, cr + radius); ++r)
      for (int c = std::max(0, cc - radius); c <= std::min(cfg.width - 1, cc + radius); ++c)
        if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) mask.at(r, c) = kTree;
  }
  // buildings: axis-aligned rectangles, painted last
  for (int i = 0; i < cfg.buildings; ++i) {
    const int bh = rng.uniform_int(cfg.building_min, cfg.building_max);
    const int bw = rng.uniform_int(cfg.building_min, cfg.building_max);
    const int r0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.height)));
    const int c0 = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.width)));
    for (int r = r0; r < std::min(r0 + bh, cfg.height); ++r)
      for (int c = c0; c < std::min(c0 + bw, cfg.width); ++c) mask.at(r, c) = kBuilding;
  }
  return mask;
}

inline RasterImage synth_render(const SynthConfig& cfg, const LabelMask& mask,
                                const DomainStyle& style, Rng& noise_rng) {
  RasterImage img(cfg.height, cfg.width);
  for (int r = 0; r < cfg.height; ++r)
    for (int c = 0; c < cfg.width; ++c) {
      const int cls = mask.at(r, c);
      auto* px = img.pixel(r, c);
      // brightness jitter: one draw per pixel, shared across channels
      const int eta =
          style.noise_amp > 0 ? noise_rng.uniform_int(-style.noise_amp, style.noise_amp) : 0;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::nearbyint(
                             style.scale[static_cast<std::size_t>(ch)] *
                                 cfg.palette[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)] +
                             style.offset[static_cast<std::size_t>(ch)]) +
                         eta;
        px[ch] = static_cast<std::uint8_t>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
      }
    }
  return img;
}

}  // namespace detail

/// Deterministic dual-domain scene: bit-identical masks, per-domain style.
inline SynthScene synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng noise_a = rng.fork(0xA);
  Rng noise_b = rng.fork(0xB);
  SynthScene scene;
  scene.mask_a = detail::synth_geometry(cfg, rng);
  scene.mask_b = scene.mask_a;
  scene.image_a = detail::synth_render(cfg, scene.mask_a, cfg.domain_a, noise_a);
  scene.image_b = detail::synth_render(cfg, scene.mask_b, cfg.domain_b, noise_b);
  return scene;
}

// --- dataset statistics ------------------------------------------------------

struct DatasetStats {
  std::array<std::uint64_t, kNumClasses> class_pixels{};
  std::uint64_t total_pixels = 0;
  int patch_count = 0;

  std::array<double, kNumClasses> percent() const {
    std::array<double, kNumClasses> out{};
    for (int c = 0; c < kNumClasses; ++c)
      out[static_cast<std::size_t>(c)] =
          100.0 * static_cast<double>(class_pixels[static_cast<std::size_t>(c)]) /
          static_cast<double>(total_pixels);
    return out;
  }
};

inline DatasetStats dataset_stats(const std::vector<LabelMask>& masks) {
  if (masks.empty()) detail::fail_input("dataset_stats needs at least one mask");
  DatasetStats stats;
  stats.patch_count = static_cast<int>(masks.size());
  for (const auto& mask : masks) {
    stats.total_pixels += mask.pixel_count();
    for (std::uint8_t id : mask.ids) {
      if (id >= kNumClasses)
        detail::fail_input("dataset_stats: mask id ", std::to_string(id), " out of range");
      stats.class_pixels[id] += 1;
    }
  }
  return stats;
}

// --- config file binding -----------------------------------------------------

inline SynthConfig synth_config_from(const KeyValueConfig& kv) {
  SynthConfig cfg;
  cfg.height = static_cast<int>(kv.get_int("height", cfg.height));
  cfg.width = static_cast<int>(kv.get_int("width", cfg.width));
  const char* class_keys[kNumClasses] = {"palette.background", "palette.building",
                                         "palette.road", "palette.tree"};
  for (int cls = 0; cls < kNumClasses; ++cls) {
    std::array<double, 3> fallback{};
    for (int ch = 0; ch < 3; ++ch)
      fallback[static_cast<std::size_t>(ch)] =
          cfg.palette[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)];
    const auto got = kv.get_triple(class_keys[cls], fallback);
    for (int ch = 0; ch < 3; ++ch)
      cfg.palette[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)] =
          static_cast<int>(got[static_cast<std::size_t>(ch)]);
  }
  cfg.buildings = static_cast<int>(kv.get_int("buildings", cfg.buildings));
  cfg.building_min = static_cast<int>(kv.get_int("building_min", cfg.building_min));
  cfg.building_max = static_cast<int>(kv.get_int("building_max", cfg.building_max));
  cfg.roads = static_cast<int>(kv.get_int("roads", cfg.roads));
  cfg.road_min = static_cast<int>(kv.get_int("road_min", cfg.road_min));
  cfg.road_max = static_cast<int>(kv.get_int("road_max", cfg.road_max));
  cfg.trees = static_cast<int>(kv.get_int("trees", cfg.trees));
  cfg.tree_min = static_cast<int>(kv.get_int("tree_min", cfg.tree_min));
  cfg.tree_max = static_cast<int>(kv.get_int("tree_max", cfg.tree_max));
  cfg.domain_a.scale = kv.get_triple("domain_a.scale", cfg.domain_a.scale);
  cfg.domain_a.offset = kv.get_triple("domain_a.offset", cfg.domain_a.offset);
  cfg.domain_a.noise_amp = static_cast<int>(kv.get_int("domain_a.noise", cfg.domain_a.noise_amp));
  cfg.domain_b.scale = kv.get_triple("domain_b.scale", cfg.domain_b.scale);
  cfg.domain_b.offset = kv.get_triple("domain_b.offset", cfg.domain_b.offset);
  cfg.domain_b.noise_amp = static_cast<int>(kv.get_int("domain_b.noise", cfg.domain_b.noise_amp));
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
  return cfg;
}

inline KeyValueConfig synth_config_to_kv(const SynthConfig& cfg) {
  KeyValueConfig kv;
  kv.set("height", static_cast<std::int64_t>(cfg.height));
  kv.set("width", static_cast<std::int64_t>(cfg.width));
  const char* class_keys[kNumClasses] = {"palette.background", "palette.building",
                                         "palette.road", "palette.tree"};
  for (int cls = 0; cls < kNumClasses; ++cls) {
    std::string triple;
    for (int ch = 0; ch < 3; ++ch) {
      if (ch) triple += ",";
      triple += std::to_string(cfg.palette[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)]);
    }
    kv.set(class_keys[cls], triple);
  }
  kv.set("buildings", static_cast<std::int64_t>(cfg.buildings));
  kv.set("building_min", static_cast<std::int64_t>(cfg.building_min));
  kv.set("building_max", static_cast<std::int64_t>(cfg.building_max));
  kv.set("roads", static_cast<std::int64_t>(cfg.roads));
  kv.set("road_min", static_cast<std::int64_t>(cfg.road_min));
  kv.set("road_max", static_cast<std::int64_t>(cfg.road_max));
  kv.set("trees", static_cast<std::int64_t>(cfg.trees));
  kv.set("tree_min", static_cast<std::int64_t>(cfg.tree_min));
  kv.set("tree_max", static_cast<std::int64_t>(cfg.tree_max));
  auto set_triple = [&](const std::string& key, const std::array<double, 3>& t) {
    std::ostringstream ss;
    ss.precision(17);
    ss << t[0] << "," << t[1] << "," << t[2];
    kv.set(key, ss.str());
  };
  set_triple("domain_a.scale", cfg.domain_a.scale);
  set_triple("domain_a.offset", cfg.domain_a.offset);
  kv.set("domain_a.noise", static_cast<std::int64_t>(cfg.domain_a.noise_amp));
  set_triple("domain_b.scale", cfg.domain_b.scale);
  set_triple("domain_b.offset", cfg.domain_b.offset);
  kv.set("domain_b.noise", static_cast<std::int64_t>(cfg.domain_b.noise_amp));
  kv.set("seed", static_cast<std::int64_t>(cfg.seed));
  return kv;
}

}  // namespace cmgan
