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

#include <utility>
#include <vector>

#include "cmgan/image.hpp"
#include "cmgan/tensor.hpp"

namespace cmgan {

/// Deterministic decomposition of a raster into fixed-size overlapping
/// patches. Origins advance by size-overlap; the final origin per axis is
/// clamped so the last patch ends exactly at the image edge.
struct TileGrid {
  int image_height = 0;
  int image_width = 0;
  int patch_size = 256;
  int overlap = 32;
  std::vector<std::pair<int, int>> origins;  // (row, col), row-major order

  int patch_count() const { return static_cast<int>(origins.size()); }
};

namespace detail {

inline std::vector<int> axis_origins(int extent, int size, int overlap) {
  const int stride = size - overlap;
  std::vector<int> out;
  for (int o = 0;; o += stride) {
    if (o + size >= extent) {
      const int last = extent - size;
      if (out.empty() || out.back() != last) out.push_back(last);
      break;
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace detail

inline TileGrid make_tile_grid(int image_height, int image_width, int size, int overlap) {
  if (size < 1) detail::fail_input("tile size must be positive");
  if (overlap < 0 || overlap >= size)
    detail::fail_input("tile overlap must satisfy 0 <= overlap < size, got overlap ",
                       std::to_string(overlap), " size ", std::to_string(size));
  if (size > image_height || size > image_width)
    detail::fail_input("image ", std::to_string(image_height), "x", std::to_string(image_width),
                       " is smaller than tile size ", std::to_string(size));
  TileGrid grid;
  grid.image_height = image_height;
  grid.image_width = image_width;
  grid.patch_size = size;
  grid.overlap = overlap;
  const std::vector<int> rows = detail::axis_origins(image_height, size, overlap);
  const std::vector<int> cols = detail::axis_origins(image_width, size, overlap);
  for (int r : rows)
    for (int c : cols) grid.origins.emplace_back(r, c);
  return grid;
}

inline RasterImage extract_patch(const RasterImage& image, int row0, int col0, int size) {
  RasterImage patch(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const auto* src = image.pixel(row0 + r, col0 + c);
      patch.set_pixel(r, c, src[0], src[1], src[2]);
    }
  return patch;
}

inline LabelMask extract_mask_patch(const LabelMask& mask, int row0, int col0, int size) {
  LabelMask patch(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) patch.at(r, c) = mask.at(row0 + r, col0 + c);
  return patch;
}

inline std::pair<TileGrid, std::vector<RasterImage>> tile(const RasterImage& image, int size,
                                                          int overlap) {
  TileGrid grid = make_tile_grid(image.height, image.width, size, overlap);
  std::vector<RasterImage> patches;
  patches.reserve(grid.origins.size());
  for (const auto& [r, c] : grid.origins) patches.push_back(extract_patch(image, r, c, size));
  return {std::move(grid), std::move(patches)};
}

/// Reassembles patches into the raster. Pixels covered by several patches
/// must agree; a per-color transform guarantees that, so a conflict here is
/// a bug in the transform, and the first conflicting coordinate is reported.
inline RasterImage stitch_image(const TileGrid& grid, const std::vector<RasterImage>& patches) {
  if (static_cast<int>(patches.size()) != grid.patch_count())
    detail::fail_input("stitch_image got ", std::to_string(patches.size()), " patches, grid has ",
                       std::to_string(grid.patch_count()));
  RasterImage out(grid.image_height, grid.image_width);
  std::vector<std::uint8_t> written(out.pixel_count(), 0);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto& patch = patches[p];
    if (patch.height != grid.patch_size || patch.width != grid.patch_size)
      detail::fail_input("stitch_image patch ", std::to_string(p), " has extent ",
                         std::to_string(patch.height), "x", std::to_string(patch.width),
                         ", grid expects ", std::to_string(grid.patch_size));
    const auto [row0, col0] = grid.origins[p];
    for (int r = 0; r < patch.height; ++r)
      for (int c = 0; c < patch.width; ++c) {
        const std::size_t idx = static_cast<std::size_t>(row0 + r) * grid.image_width + (col0 + c);
        const auto* src = patch.pixel(r, c);
        auto* dst = out.pixel(row0 + r, col0 + c);
        if (written[idx]) {
          if (dst[0] != src[0] || dst[1] != src[1] || dst[2] != src[2])
            detail::fail_input("stitch_image overlap conflict at pixel (",
                               std::to_string(row0 + r), ", ", std::to_string(col0 + c),
                               ") from patch ", std::to_string(p));
        } else {
          dst[0] = src[0];
          dst[1] = src[1];
          dst[2] = src[2];
          written[idx] = 1;
        }
      }
  }
  return out;
}

/// Stitches real-valued score patches (C,h,w) by per-pixel arithmetic mean
/// over every covering patch.
inline Tensor stitch_scores(const TileGrid& grid, const std::vector<Tensor>& patches) {
  if (static_cast<int>(patches.size()) != grid.patch_count())
    detail::fail_input("stitch_scores got ", std::to_string(patches.size()), " patches, grid has ",
                       std::to_string(grid.patch_count()));
  if (patches.empty()) detail::fail_input("stitch_scores needs at least one patch");
  const int chans = patches[0].dim(0);
  Tensor sum = Tensor::zeros({chans, grid.image_height, grid.image_width});
  std::vector<int> cover(static_cast<std::size_t>(grid.image_height) * grid.image_width, 0);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Tensor& patch = patches[p];
    if (patch.rank() != 3 || patch.dim(0) != chans || patch.dim(1) != grid.patch_size ||
        patch.dim(2) != grid.patch_size)
      detail::fail_input("stitch_scores patch ", std::to_string(p), " has shape ",
                         patch.shape_str(), ", expected (", std::to_string(chans), ", ",
                         std::to_string(grid.patch_size), ", ", std::to_string(grid.patch_size),
                         ")");
    const auto [row0, col0] = grid.origins[p];
    for (int r = 0; r < grid.patch_size; ++r)
      for (int c = 0; c < grid.patch_size; ++c) {
        cover[static_cast<std::size_t>(row0 + r) * grid.image_width + (col0 + c)] += 1;
        for (int ch = 0; ch < chans; ++ch)
          sum.v[static_cast<std::size_t>((static_cast<std::int64_t>(ch) * grid.image_height + row0 + r) * grid.image_width + col0 + c)] +=
              patch.v[static_cast<std::size_t>((static_cast<std::int64_t>(ch) * grid.patch_size + r) * grid.patch_size + c)];
      }
  }
  for (int ch = 0; ch < chans; ++ch)
    for (int r = 0; r < grid.image_height; ++r)
      for (int c = 0; c < grid.image_width; ++c)
        sum.v[static_cast<std::size_t>((static_cast<std::int64_t>(ch) * grid.image_height + r) * grid.image_width + c)] /=
            cover[static_cast<std::size_t>(r) * grid.image_width + c];
  return sum;
}

}  // namespace cmgan
