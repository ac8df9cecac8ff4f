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
#include <cstdint>
#include <vector>

#include "cmgan/common.hpp"

namespace cmgan {

/// 8-bit 3-channel raster, row-major RGB interleaved.
struct RasterImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // height * width * 3

  RasterImage() = default;
  RasterImage(int height, int width, std::uint8_t fill = 0)
      : height(height), width(width) {
    if (height < 1 || width < 1)
      detail::fail_input("raster dimensions must be >= 1, got ", std::to_string(height), "x",
                         std::to_string(width));
    data.assign(static_cast<std::size_t>(height) * width * 3, fill);
  }

  std::uint8_t* pixel(int r, int c) {
    return &data[(static_cast<std::size_t>(r) * width + c) * 3];
  }
  const std::uint8_t* pixel(int r, int c) const {
    return &data[(static_cast<std::size_t>(r) * width + c) * 3];
  }

  void set_pixel(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
    auto* p = pixel(r, c);
    p[0] = red;
    p[1] = green;
    p[2] = blue;
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

  bool operator==(const RasterImage& o) const {
    return height == o.height && width == o.width && data == o.data;
  }
};

/// Segmentation class ids.
enum ClassId : std::uint8_t {
  kBackground = 0,
  kBuilding = 1,
  kRoad = 2,
  kTree = 3,
};
inline constexpr int kNumClasses = 4;
inline constexpr const char* kClassNames[kNumClasses] = {"background", "building", "road", "tree"};

/// Per-pixel class mask paired with a RasterImage of the same extent.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> ids;  // height * width

  LabelMask() = default;
  LabelMask(int height, int width, std::uint8_t fill = kBackground)
      : height(height), width(width) {
    if (height < 1 || width < 1)
      detail::fail_input("mask dimensions must be >= 1, got ", std::to_string(height), "x",
                         std::to_string(width));
    ids.assign(static_cast<std::size_t>(height) * width, fill);
  }

  std::uint8_t& at(int r, int c) { return ids[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return ids[static_cast<std::size_t>(r) * width + c]; }

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

  bool operator==(const LabelMask& o) const {
    return height == o.height && width == o.width && ids == o.ids;
  }
};

/// Colorized rendering of a mask: red=building, white=road, green=tree,
/// black=background. Presentation only; the id-coded mask is the artifact.
inline RasterImage colorize_mask(const LabelMask& mask) {
  static constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> palette = {{
      {0, 0, 0},        // background
      {255, 0, 0},      // building
      {255, 255, 255},  // road
      {0, 255, 0},      // tree
  }};
  RasterImage out(mask.height, mask.width);
  for (int r = 0; r < mask.height; ++r)
    for (int c = 0; c < mask.width; ++c) {
      const std::uint8_t id = mask.at(r, c);
      if (id >= kNumClasses)
        detail::fail_input("mask id ", std::to_string(id), " out of range at (",
                           std::to_string(r), ", ", std::to_string(c), ")");
      out.set_pixel(r, c, palette[id][0], palette[id][1], palette[id][2]);
    }
  return out;
}

}  // namespace cmgan
