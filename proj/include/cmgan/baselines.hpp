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
#include <cstdint>
#include <string>
#include <vector>

#include "cmgan/image.hpp"

namespace cmgan {

/// Per-channel 256-bin counts with the derived cumulative distribution.
struct ChannelHistogram {
  std::array<std::array<std::uint64_t, 256>, 3> counts{};
  std::uint64_t total = 0;

  void add(const RasterImage& image) {
    for (std::size_t i = 0; i < image.data.size(); i += 3) {
      counts[0][image.data[i]] += 1;
      counts[1][image.data[i + 1]] += 1;
      counts[2][image.data[i + 2]] += 1;
    }
    total += image.pixel_count();
  }

  double cdf(int channel, int level) const {
    std::uint64_t acc = 0;
    for (int v = 0; v <= level; ++v) acc += counts[static_cast<std::size_t>(channel)][static_cast<std::size_t>(v)];
    return static_cast<double>(acc) / static_cast<double>(total);
  }

  std::array<double, 256> cdf_curve(int channel) const {
    std::array<double, 256> out{};
    std::uint64_t acc = 0;
    for (int v = 0; v < 256; ++v) {
      acc += counts[static_cast<std::size_t>(channel)][static_cast<std::size_t>(v)];
      out[static_cast<std::size_t>(v)] = static_cast<double>(acc) / static_cast<double>(total);
    }
    return out;
  }
};

/// 3 x 256 level map: for each channel, where each source level lands.
using LevelMap = std::array<std::array<std::uint8_t, 256>, 3>;

struct HistogramMatchResult {
  LevelMap level_map;
  std::vector<RasterImage> recolored;
};

inline RasterImage apply_level_map(const LevelMap& map, const RasterImage& image) {
  RasterImage out(image.height, image.width);
  for (std::size_t i = 0; i < image.data.size(); i += 3) {
    out.data[i] = map[0][image.data[i]];
    out.data[i + 1] = map[1][image.data[i + 1]];
    out.data[i + 2] = map[2][image.data[i + 2]];
  }
  return out;
}

/// Classical per-channel CDF matching, pooled over each whole image set.
/// Each source level maps to the smallest target level whose CDF reaches the
/// source CDF.
inline HistogramMatchResult histogram_match(const std::vector<RasterImage>& source_images,
                                            const std::vector<RasterImage>& target_images) {
  if (source_images.empty() || target_images.empty())
    detail::fail_input("histogram_match needs non-empty source and target image sets");
  ChannelHistogram src, tgt;
  for (const auto& im : source_images) src.add(im);
  for (const auto& im : target_images) tgt.add(im);

  HistogramMatchResult result;
  for (int ch = 0; ch < 3; ++ch) {
    const std::array<double, 256> scdf = src.cdf_curve(ch);
    const std::array<double, 256> tcdf = tgt.cdf_curve(ch);
    int u = 0;
    for (int v = 0; v < 256; ++v) {
      while (u < 255 && tcdf[static_cast<std::size_t>(u)] < scdf[static_cast<std::size_t>(v)]) ++u;
      result.level_map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)] =
          static_cast<std::uint8_t>(u);
    }
  }
  result.recolored.reserve(source_images.size());
  for (const auto& im : source_images)
    result.recolored.push_back(apply_level_map(result.level_map, im));
  return result;
}

/// Level map rendered as 3 lines of 256 comma-separated integers.
inline std::string level_map_csv(const LevelMap& map) {
  std::string out;
  for (int ch = 0; ch < 3; ++ch) {
    for (int v = 0; v < 256; ++v) {
      if (v) out += ",";
      out += std::to_string(map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)]);
    }
    out += "\n";
  }
  return out;
}

struct GrayWorldResult {
  RasterImage corrected;
  std::array<double, 3> gains;
};

/// Scales each channel so its mean matches the cross-channel gray mean.
/// Rounding is to nearest with ties to even, then clamped to [0, 255].
inline GrayWorldResult gray_world(const RasterImage& image) {
  std::array<double, 3> mean{};
  for (std::size_t i = 0; i < image.data.size(); i += 3) {
    mean[0] += image.data[i];
    mean[1] += image.data[i + 1];
    mean[2] += image.data[i + 2];
  }
  const double n = static_cast<double>(image.pixel_count());
  for (double& m : mean) m /= n;
  for (int ch = 0; ch < 3; ++ch)
    if (mean[static_cast<std::size_t>(ch)] == 0.0)
      detail::fail_input("gray_world: channel ", std::to_string(ch),
                         " has zero mean, gain undefined");
  const double gray = (mean[0] + mean[1] + mean[2]) / 3.0;

  GrayWorldResult result{RasterImage(image.height, image.width),
                         {gray / mean[0], gray / mean[1], gray / mean[2]}};
  for (std::size_t i = 0; i < image.data.size(); i += 3)
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double scaled = std::nearbyint(image.data[i + ch] * result.gains[ch]);
      result.corrected.data[i + ch] =
          static_cast<std::uint8_t>(scaled < 0.0 ? 0.0 : (scaled > 255.0 ? 255.0 : scaled));
    }
  return result;
}

}  // namespace cmgan
