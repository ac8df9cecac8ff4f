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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmgan/autodiff.hpp"
#include "cmgan/bytes.hpp"
#include "cmgan/image.hpp"

namespace cmgan {

/// 24-bit color flattened to r*65536 + g*256 + b.
using ColorIndex = std::uint32_t;
inline constexpr ColorIndex kColorIndexCount = 256u * 256u * 256u;

inline ColorIndex color_index(int r, int g, int b) {
  if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
    detail::fail_input("color component out of range: (", std::to_string(r), ", ",
                       std::to_string(g), ", ", std::to_string(b), ")");
  return static_cast<ColorIndex>(r) * 65536u + static_cast<ColorIndex>(g) * 256u +
         static_cast<ColorIndex>(b);
}

inline std::array<int, 3> color_from_index(ColorIndex idx) {
  return {static_cast<int>(idx >> 16), static_cast<int>((idx >> 8) & 0xFF),
          static_cast<int>(idx & 0xFF)};
}

/// Per-color affine transform in normalized color units.
struct ColorEntry {
  std::array<double, 3> w{1.0, 1.0, 1.0};
  std::array<double, 3> k{0.0, 0.0, 0.0};

  bool is_identity() const {
    return w[0] == 1.0 && w[1] == 1.0 && w[2] == 1.0 && k[0] == 0.0 && k[1] == 0.0 && k[2] == 0.0;
  }
  bool operator==(const ColorEntry& o) const { return w == o.w && k == o.k; }
};

/// Sparse per-color scale/shift table over the 24-bit color cube; the
/// generator's entire learnable state. Colors without an entry map through
/// the identity, and identity entries are never materialized.
class ColorMap {
 public:
  ColorEntry lookup(ColorIndex idx) const {
    const auto it = entries_.find(idx);
    return it == entries_.end() ? ColorEntry{} : it->second;
  }

  bool has_entry(ColorIndex idx) const { return entries_.count(idx) != 0; }

  void set(ColorIndex idx, const ColorEntry& e) {
    if (idx >= kColorIndexCount)
      detail::fail_input("color index ", std::to_string(idx), " out of range");
    if (e.is_identity())
      entries_.erase(idx);
    else
      entries_[idx] = e;
  }

  /// Mutable access for training; materializes the entry on first touch.
  ColorEntry& touch(ColorIndex idx) {
    if (idx >= kColorIndexCount)
      detail::fail_input("color index ", std::to_string(idx), " out of range");
    return entries_[idx];
  }

  std::size_t entry_count() const { return entries_.size(); }

  std::vector<ColorIndex> sorted_indices() const {
    std::vector<ColorIndex> out;
    out.reserve(entries_.size());
    for (const auto& [idx, e] : entries_) out.push_back(idx);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::unordered_map<ColorIndex, ColorEntry>& entries() const { return entries_; }

  bool operator==(const ColorMap& o) const { return entries_ == o.entries_; }

 private:
  std::unordered_map<ColorIndex, ColorEntry> entries_;
};

/// (H, W, 3) reals in [-1, 1], interleaved like the raster it came from.
struct NormalizedPatch {
  int height = 0;
  int width = 0;
  std::vector<double> v;  // height * width * 3

  NormalizedPatch() = default;
  NormalizedPatch(int height, int width) : height(height), width(width) {
    v.assign(static_cast<std::size_t>(height) * width * 3, 0.0);
  }
};

/// v -> v/127.5 - 1, mapping 0..255 onto [-1, 1].
inline double normalize_level(std::uint8_t level) { return level / 127.5 - 1.0; }

inline NormalizedPatch normalize(const RasterImage& image) {
  NormalizedPatch out(image.height, image.width);
  for (std::size_t i = 0; i < image.data.size(); ++i) out.v[i] = normalize_level(image.data[i]);
  return out;
}

// floor((p+1)*127.5) evaluated in doubles loses the integer round trip for
// 20 of the 256 levels (the product lands a few ulps below the integer); the
// guard keeps the floor of the intended real value.
inline constexpr double kDenormFloorGuard = 1e-9;

inline std::uint8_t denormalize_level(double p, const char* who = "denormalize") {
  if (!(p >= -1.0 && p <= 1.0))
    detail::fail_input(who, ": value ", std::to_string(p),
                       " outside [-1, 1]; clipping must happen before denormalization");
  const double scaled = std::floor((p + 1.0) * 127.5 + kDenormFloorGuard);
  const double clipped = scaled < 0.0 ? 0.0 : (scaled > 255.0 ? 255.0 : scaled);
  return static_cast<std::uint8_t>(clipped);
}

inline RasterImage denormalize(const NormalizedPatch& patch) {
  RasterImage out(patch.height, patch.width);
  for (std::size_t i = 0; i < patch.v.size(); ++i)
    out.data[i] = denormalize_level(patch.v[i]);
  return out;
}

/// ColorIndex of every pixel, row-major; must come from the same 8-bit image
/// the normalized patch was derived from.
inline std::vector<ColorIndex> pixel_color_indices(const RasterImage& image) {
  std::vector<ColorIndex> out(image.pixel_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* p = &image.data[i * 3];
    out[i] = (static_cast<ColorIndex>(p[0]) << 16) | (static_cast<ColorIndex>(p[1]) << 8) |
             static_cast<ColorIndex>(p[2]);
  }
  return out;
}

/// Sorted, duplicate-free indices of the colors present in a patch.
inline std::vector<ColorIndex> touched_indices(const RasterImage& image) {
  std::vector<ColorIndex> idx = pixel_color_indices(image);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

/// out = clamp(in * w + k, -1, 1) per pixel and channel, with the entry
/// selected by the pixel's ColorIndex.
inline NormalizedPatch apply(const ColorMap& map, const NormalizedPatch& patch,
                             const std::vector<ColorIndex>& index_of) {
  if (index_of.size() != static_cast<std::size_t>(patch.height) * patch.width)
    detail::fail_input("apply: index vector length ", std::to_string(index_of.size()),
                       " does not match patch ", std::to_string(patch.height), "x",
                       std::to_string(patch.width));
  NormalizedPatch out(patch.height, patch.width);
  for (std::size_t p = 0; p < index_of.size(); ++p) {
    const ColorEntry e = map.lookup(index_of[p]);
    for (int c = 0; c < 3; ++c)
      out.v[p * 3 + c] = clamp_unit(patch.v[p * 3 + c] * e.w[c] + e.k[c]);
  }
  return out;
}

/// Gradient accumulator for (w, k) over the touched entries only, with the
/// pixel count behind each accumulation (for per-pixel normalization in the
/// optimizer).
struct ColorMapGrad {
  // dw in [0..2], dk in [3..5]
  std::unordered_map<ColorIndex, std::array<double, 6>> g;
  std::unordered_map<ColorIndex, std::int64_t> pixels;

  void clear() {
    g.clear();
    pixels.clear();
  }
};

/// Tape node for the generator forward pass: normalized source patch in,
/// clamped recolored patch out as a (1,3,H,W) tensor. Backward accumulates
/// into `sink` for the touched entries; the clamp passes gradient only
/// strictly inside (-1, 1).
inline Node* apply_node(Tape& tape, const ColorMap& map, const RasterImage& patch,
                        ColorMapGrad& sink) {
  const int h = patch.height, w = patch.width;
  auto indices = std::make_shared<std::vector<ColorIndex>>(pixel_color_indices(patch));
  auto input = std::make_shared<Tensor>(Tensor::zeros({1, 3, h, w}));
  Tensor out = Tensor::zeros({1, 3, h, w});
  auto pass = std::make_shared<std::vector<std::uint8_t>>(out.v.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t p = static_cast<std::size_t>(r) * w + c;
      const ColorEntry e = map.lookup((*indices)[p]);
      for (int ch = 0; ch < 3; ++ch) {
        const double x = normalize_level(patch.data[p * 3 + static_cast<std::size_t>(ch)]);
        const std::size_t t = static_cast<std::size_t>((static_cast<std::int64_t>(ch) * h + r) * w + c);
        input->v[t] = x;
        const double pre = x * e.w[static_cast<std::size_t>(ch)] + e.k[static_cast<std::size_t>(ch)];
        out.v[t] = clamp_unit(pre);
        (*pass)[t] = (pre > -1.0 && pre < 1.0) ? 1 : 0;
      }
    }
  Node* node = tape.push(std::move(out), true);
  ColorMapGrad* sink_ptr = &sink;
  node->backward = [node, indices, input, pass, sink_ptr, h, w]() {
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const std::size_t p = static_cast<std::size_t>(r) * w + c;
        auto& acc = sink_ptr->g[(*indices)[p]];
        sink_ptr->pixels[(*indices)[p]] += 1;
        for (int ch = 0; ch < 3; ++ch) {
          const std::size_t t = static_cast<std::size_t>((static_cast<std::int64_t>(ch) * h + r) * w + c);
          if (!(*pass)[t]) continue;
          const double g = node->grad.v[t];
          acc[static_cast<std::size_t>(ch)] += g * input->v[t];
          acc[static_cast<std::size_t>(ch) + 3] += g;
        }
      }
  };
  return node;
}

/// Full-image recoloring: normalize -> apply -> denormalize, evaluated once
/// per distinct color so the output pixel depends only on the input color.
inline RasterImage transform_image(const ColorMap& map, const RasterImage& image) {
  std::unordered_map<ColorIndex, std::array<std::uint8_t, 3>> lut;
  lut.reserve(1024);
  RasterImage out(image.height, image.width);
  const std::size_t n = image.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint8_t* src = &image.data[p * 3];
    const ColorIndex idx = (static_cast<ColorIndex>(src[0]) << 16) |
                           (static_cast<ColorIndex>(src[1]) << 8) |
                           static_cast<ColorIndex>(src[2]);
    auto it = lut.find(idx);
    if (it == lut.end()) {
      const ColorEntry e = map.lookup(idx);
      std::array<std::uint8_t, 3> mapped;
      for (int c = 0; c < 3; ++c)
        mapped[static_cast<std::size_t>(c)] = denormalize_level(
            clamp_unit(normalize_level(src[c]) * e.w[static_cast<std::size_t>(c)] +
                       e.k[static_cast<std::size_t>(c)]),
            "transform_image");
      it = lut.emplace(idx, mapped).first;
    }
    std::uint8_t* dst = &out.data[p * 3];
    dst[0] = it->second[0];
    dst[1] = it->second[1];
    dst[2] = it->second[2];
  }
  return out;
}

// --- color-map file format -------------------------------------------------
// magic "CMAP", version u16 LE, entry count u32 LE, then per entry:
// index u32 LE + w_r w_g w_b k_r k_g k_b as f32 LE. Sorted ascending.

inline constexpr std::uint16_t kColorMapVersion = 1;

inline void save_map(const ColorMap& map, std::ostream& sink) {
  std::string out = "CMAP";
  detail::put_u16_le(out, kColorMapVersion);
  const std::vector<ColorIndex> indices = map.sorted_indices();
  detail::put_u32_le(out, static_cast<std::uint32_t>(indices.size()));
  for (ColorIndex idx : indices) {
    const ColorEntry e = map.lookup(idx);
    detail::put_u32_le(out, idx);
    for (int c = 0; c < 3; ++c) detail::put_f32_le(out, static_cast<float>(e.w[static_cast<std::size_t>(c)]));
    for (int c = 0; c < 3; ++c) detail::put_f32_le(out, static_cast<float>(e.k[static_cast<std::size_t>(c)]));
  }
  sink.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!sink) throw InternalError("save_map: write failed");
}

inline void save_map_file(const ColorMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) detail::fail_input("cannot write ", path);
  save_map(map, out);
}

inline ColorMap load_map(std::istream& source) {
  std::ostringstream ss;
  ss << source.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < 10 || bytes.compare(0, 4, "CMAP") != 0)
    detail::fail_input("color map: bad magic (expected \"CMAP\")");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = static_cast<std::uint16_t>(raw[4] | (raw[5] << 8));
  if (version != kColorMapVersion)
    detail::fail_input("color map: unsupported version ", std::to_string(version));
  const std::uint32_t count = detail::get_u32_le(raw + 6);
  const std::size_t expected = 10 + static_cast<std::size_t>(count) * 28;
  if (bytes.size() < expected)
    detail::fail_input("color map: truncated payload, have ", std::to_string(bytes.size()),
                       " bytes, entry count ", std::to_string(count), " needs ",
                       std::to_string(expected));
  if (bytes.size() > expected)
    detail::fail_input("color map: ", std::to_string(bytes.size() - expected), " trailing bytes");
  ColorMap map;
  std::int64_t prev = -1;
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* p = raw + 10 + static_cast<std::size_t>(i) * 28;
    const ColorIndex idx = detail::get_u32_le(p);
    if (idx >= kColorIndexCount)
      detail::fail_input("color map: entry ", std::to_string(i), " has out-of-range index ",
                         std::to_string(idx));
    if (static_cast<std::int64_t>(idx) == prev)
      detail::fail_input("color map: duplicate index ", std::to_string(idx), " at entry ",
                         std::to_string(i));
    if (static_cast<std::int64_t>(idx) < prev)
      detail::fail_input("color map: entries not sorted at entry ", std::to_string(i));
    prev = idx;
    ColorEntry e;
    for (int c = 0; c < 3; ++c)
      e.w[static_cast<std::size_t>(c)] = static_cast<double>(detail::get_f32_le(p + 4 + 4 * c));
    for (int c = 0; c < 3; ++c)
      e.k[static_cast<std::size_t>(c)] = static_cast<double>(detail::get_f32_le(p + 16 + 4 * c));
    map.set(idx, e);
  }
  return map;
}

inline ColorMap load_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) detail::fail_input("cannot open ", path);
  return load_map(in);
}

}  // namespace cmgan
