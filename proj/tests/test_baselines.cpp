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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cmgan/baselines.hpp"
#include "cmgan/colormap.hpp"
#include "cmgan/tiling.hpp"
#include "support.hpp"

using namespace cmgan;

TEST_SUITE_BEGIN("baselines");

namespace {

// independent CDF oracle used to cross-check the implementation
double ks_distance(const RasterImage& a, const RasterImage& b, int channel) {
  std::array<double, 256> ca{}, cb{};
  for (std::size_t i = 0; i < a.data.size(); i += 3) ca[a.data[i + static_cast<std::size_t>(channel)]] += 1.0;
  for (std::size_t i = 0; i < b.data.size(); i += 3) cb[b.data[i + static_cast<std::size_t>(channel)]] += 1.0;
  double worst = 0.0, sa = 0.0, sb = 0.0;
  for (int v = 0; v < 256; ++v) {
    sa += ca[static_cast<std::size_t>(v)] / static_cast<double>(a.pixel_count());
    sb += cb[static_cast<std::size_t>(v)] / static_cast<double>(b.pixel_count());
    worst = std::max(worst, std::abs(sa - sb));
  }
  return worst;
}

}  // namespace

TEST_CASE("histogram_match on identical sets stays within one level of identity") {
  Rng rng(201);
  const RasterImage img = testsupport::random_image(rng, 64, 64);
  const HistogramMatchResult result = histogram_match({img}, {img});
  for (int ch = 0; ch < 3; ++ch) {
    std::array<bool, 256> present{};
    for (std::size_t i = 0; i < img.data.size(); i += 3)
      present[img.data[i + static_cast<std::size_t>(ch)]] = true;
    for (int v = 0; v < 256; ++v)
      if (present[static_cast<std::size_t>(v)])
        CHECK(std::abs(static_cast<int>(result.level_map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)]) - v) <= 1);
  }
}

TEST_CASE("histogram_match maps a constant source to the constant target") {
  RasterImage src(8, 8);
  RasterImage tgt(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      src.set_pixel(r, c, 30, 60, 90);
      tgt.set_pixel(r, c, 200, 150, 100);
    }
  const HistogramMatchResult result = histogram_match({src}, {tgt});
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const auto* p = result.recolored[0].pixel(r, c);
      CHECK(p[0] == 200);
      CHECK(p[1] == 150);
      CHECK(p[2] == 100);
    }
}

TEST_CASE("histogram_match collapses onto a point-mass target") {
  Rng rng(203);
  RasterImage src(16, 16);
  for (auto& b : src.data) b = static_cast<std::uint8_t>(rng.uniform_below(256));
  RasterImage tgt(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) tgt.set_pixel(r, c, 200, 200, 200);
  const HistogramMatchResult result = histogram_match({src}, {tgt});
  for (int ch = 0; ch < 3; ++ch)
    for (int v = 0; v < 256; ++v)
      CHECK(result.level_map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)] == 200);
}

TEST_CASE("histogram_match level maps are monotone non-decreasing") {
  Rng rng(205);
  for (int trial = 0; trial < 5; ++trial) {
    const RasterImage src = testsupport::random_image(rng, 48, 48);
    const RasterImage tgt = testsupport::random_image(rng, 40, 56);
    const HistogramMatchResult result = histogram_match({src}, {tgt});
    for (int ch = 0; ch < 3; ++ch)
      for (int v = 1; v < 256; ++v)
        CHECK(result.level_map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v)] >=
              result.level_map[static_cast<std::size_t>(ch)][static_cast<std::size_t>(v - 1)]);
  }
}

TEST_CASE("histogram_match drives the KS distance toward the target") {
  Rng rng(207);
  // biased source vs differently-biased target
  RasterImage src(128, 128);
  RasterImage tgt(128, 128);
  for (auto& b : src.data) b = static_cast<std::uint8_t>(40 + rng.uniform_below(100));
  for (auto& b : tgt.data) b = static_cast<std::uint8_t>(120 + rng.uniform_below(100));
  const HistogramMatchResult result = histogram_match({src}, {tgt});
  for (int ch = 0; ch < 3; ++ch)
    CHECK(ks_distance(result.recolored[0], tgt, ch) <= 1.0 / 256.0 + 0.02);
}

TEST_CASE("histogram_match rejects empty sets") {
  Rng rng(209);
  const std::vector<RasterImage> one = {testsupport::random_image(rng, 8, 8)};
  CHECK_THROWS_AS(histogram_match({}, one), InvalidInput);
  CHECK_THROWS_AS(histogram_match(one, {}), InvalidInput);
}

TEST_CASE("histogram_match pools statistics across the whole set") {
  RasterImage dark(8, 8), bright(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      dark.set_pixel(r, c, 10, 10, 10);
      bright.set_pixel(r, c, 240, 240, 240);
    }
  // pooled source {10, 240} maps onto pooled target {50, 200}
  RasterImage t1(8, 8), t2(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      t1.set_pixel(r, c, 50, 50, 50);
      t2.set_pixel(r, c, 200, 200, 200);
    }
  const HistogramMatchResult result = histogram_match({dark, bright}, {t1, t2});
  CHECK(result.recolored[0].pixel(0, 0)[0] == 50);
  CHECK(result.recolored[1].pixel(0, 0)[0] == 200);
}

TEST_CASE("level map CSV is 3 lines of 256 integers") {
  Rng rng(211);
  const RasterImage img = testsupport::random_image(rng, 8, 8);
  const HistogramMatchResult result = histogram_match({img}, {img});
  const std::string csv = level_map_csv(result.level_map);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(std::count(csv.begin(), csv.end(), ',') == 3 * 255);
}

TEST_CASE("gray_world formula evaluation") {
  // channel means (100, 150, 200): gray 150, gains (1.5, 1.0, 0.75)
  RasterImage img(4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) img.set_pixel(r, c, 100, 150, 200);
  const GrayWorldResult result = gray_world(img);
  CHECK(result.gains[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(result.gains[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.gains[2] == doctest::Approx(0.75).epsilon(1e-12));
  const auto* p = result.corrected.pixel(0, 0);
  CHECK(p[0] == 150);
  CHECK(p[1] == 150);
  CHECK(p[2] == 150);
}

TEST_CASE("gray_world leaves an already-gray image unchanged up to rounding") {
  Rng rng(213);
  RasterImage img(16, 16);
  // equal channel means by construction: every pixel has equal channels
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      const auto v = static_cast<std::uint8_t>(rng.uniform_below(256));
      img.set_pixel(r, c, v, v, v);
    }
  const GrayWorldResult result = gray_world(img);
  for (int ch = 0; ch < 3; ++ch) CHECK(result.gains[static_cast<std::size_t>(ch)] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.corrected == img);
}

TEST_CASE("gray_world clamps past 255") {
  RasterImage img(2, 2);
  img.set_pixel(0, 0, 250, 10, 10);
  img.set_pixel(0, 1, 250, 10, 10);
  img.set_pixel(1, 0, 250, 10, 10);
  img.set_pixel(1, 1, 250, 10, 10);
  const GrayWorldResult result = gray_world(img);
  // blue/green gain is 9x: 10*9=90; red gain < 1
  CHECK(result.corrected.pixel(0, 0)[1] == 90);
  // force a clamp: gain on green pushes a bright green pixel past 255
  RasterImage img2(1, 2);
  img2.set_pixel(0, 0, 200, 40, 200);
  img2.set_pixel(0, 1, 200, 255, 200);
  const GrayWorldResult r2 = gray_world(img2);
  CHECK(r2.gains[1] > 1.0);
  CHECK(r2.corrected.pixel(0, 1)[1] == 255);
}

TEST_CASE("gray_world channel means agree within one level afterwards") {
  Rng rng(215);
  for (int trial = 0; trial < 5; ++trial) {
    RasterImage img(32, 32);
    for (std::size_t i = 0; i < img.data.size(); i += 3) {
      img.data[i] = static_cast<std::uint8_t>(30 + rng.uniform_below(80));
      img.data[i + 1] = static_cast<std::uint8_t>(80 + rng.uniform_below(120));
      img.data[i + 2] = static_cast<std::uint8_t>(140 + rng.uniform_below(100));
    }
    const GrayWorldResult result = gray_world(img);
    double mean[3] = {0, 0, 0};
    for (std::size_t i = 0; i < result.corrected.data.size(); i += 3)
      for (int ch = 0; ch < 3; ++ch) mean[ch] += result.corrected.data[i + static_cast<std::size_t>(ch)];
    for (int ch = 0; ch < 3; ++ch) mean[ch] /= static_cast<double>(result.corrected.pixel_count());
    CHECK(std::abs(mean[0] - mean[1]) <= 1.0);
    CHECK(std::abs(mean[1] - mean[2]) <= 1.0);
    CHECK(std::abs(mean[0] - mean[2]) <= 1.0);
  }
}

TEST_CASE("gray_world rejects a zero-mean channel") {
  RasterImage img(2, 2);  // all black
  CHECK_THROWS_AS(gray_world(img), InvalidInput);
}

TEST_CASE("both baselines are per-color maps: tiling equivalence holds") {
  Rng rng(217);
  const RasterImage src = testsupport::random_image(rng, 96, 96);
  const RasterImage tgt = testsupport::random_image(rng, 96, 96);

  SUBCASE("histogram matching") {
    const HistogramMatchResult whole = histogram_match({src}, {tgt});
    auto [grid, patches] = tile(src, 32, 8);
    std::vector<RasterImage> mapped;
    for (const auto& p : patches) mapped.push_back(apply_level_map(whole.level_map, p));
    CHECK(stitch_image(grid, mapped) == whole.recolored[0]);
  }
  SUBCASE("gray world") {
    const GrayWorldResult whole = gray_world(src);
    // the per-color map induced by the fixed gains
    auto correct_with_gains = [&](const RasterImage& p) {
      RasterImage out(p.height, p.width);
      for (std::size_t i = 0; i < p.data.size(); i += 3)
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double scaled = std::nearbyint(p.data[i + ch] * whole.gains[ch]);
          out.data[i + ch] = static_cast<std::uint8_t>(scaled < 0 ? 0 : (scaled > 255 ? 255 : scaled));
        }
      return out;
    };
    auto [grid, patches] = tile(src, 32, 8);
    std::vector<RasterImage> mapped;
    for (const auto& p : patches) mapped.push_back(correct_with_gains(p));
    CHECK(stitch_image(grid, mapped) == whole.corrected);
  }
}

TEST_SUITE_END();
