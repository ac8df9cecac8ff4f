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

#include <zlib.h>

#include <fstream>
#include <sstream>

#include "cmgan/png_io.hpp"
#include "cmgan/synth.hpp"
#include "cmgan/tiling.hpp"
#include "support.hpp"

using namespace cmgan;

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("tile origins for 512x512 with size 256 overlap 32") {
  // enumeration oracle: origins advance by 224, final clamped to 512-256
  const TileGrid grid = make_tile_grid(512, 512, 256, 32);
  std::vector<int> rows, cols;
  for (const auto& [r, c] : grid.origins) {
    if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  }
  CHECK(rows == std::vector<int>{0, 224, 256});
  CHECK(cols == std::vector<int>{0, 224, 256});
  CHECK(grid.patch_count() == 9);
}

TEST_CASE("a raster of exactly one tile yields one patch at the origin") {
  const TileGrid grid = make_tile_grid(256, 256, 256, 32);
  CHECK(grid.origins == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("tile validation") {
  CHECK_THROWS_AS(make_tile_grid(512, 512, 256, 256), InvalidInput);  // overlap >= size
  CHECK_THROWS_AS(make_tile_grid(512, 512, 256, -1), InvalidInput);
  CHECK_THROWS_AS(make_tile_grid(100, 512, 256, 32), InvalidInput);  // image smaller than size
}

TEST_CASE("tile origins are strictly increasing and cover every pixel") {
  Rng rng(301);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = rng.uniform_int(16, 90);
    const int w = rng.uniform_int(16, 90);
    const int size = rng.uniform_int(8, std::min({h, w, 40}));
    const int overlap = rng.uniform_int(0, size - 1);
    const TileGrid grid = make_tile_grid(h, w, size, overlap);

    std::vector<std::uint8_t> covered(static_cast<std::size_t>(h) * w, 0);
    int prev_row = -1;
    for (const auto& [r0, c0] : grid.origins) {
      if (c0 == grid.origins[0].second) {  // new row band
        CHECK(r0 > prev_row);
        prev_row = r0;
      }
      CHECK(r0 + size <= h);
      CHECK(c0 + size <= w);
      for (int r = r0; r < r0 + size; ++r)
        for (int c = c0; c < c0 + size; ++c) covered[static_cast<std::size_t>(r) * w + c] = 1;
    }
    // last patch touches the edge exactly
    CHECK(grid.origins.back().first + size == h);
    CHECK(grid.origins.back().second + size == w);
    for (std::uint8_t c : covered) CHECK(c == 1);
  }
}

TEST_CASE("tile then stitch is the identity") {
  Rng rng(303);
  for (int trial = 0; trial < 5; ++trial) {
    const RasterImage img = testsupport::random_image(rng, 70, 55);
    auto [grid, patches] = tile(img, 20, 6);
    CHECK(stitch_image(grid, patches) == img);
  }
}

TEST_CASE("stitch_image rejects disagreeing overlaps and names the pixel") {
  Rng rng(305);
  const RasterImage img = testsupport::random_image(rng, 64, 64);
  auto [grid, patches] = tile(img, 32, 8);
  REQUIRE(grid.patch_count() == 9);
  // poke one pixel inside an overlap region of the second patch
  patches[1].set_pixel(3, 0, static_cast<std::uint8_t>(patches[1].pixel(3, 0)[0] ^ 0xFF), 0, 0);
  CHECK_THROWS_WITH_AS(stitch_image(grid, patches), doctest::Contains("conflict"), InvalidInput);
  try {
    stitch_image(grid, patches);
  } catch (const InvalidInput& e) {
    // pixel (3, 24) in raster coordinates: patch 1 starts at column 24
    CHECK(std::string(e.what()).find("(3, 24)") != std::string::npos);
  }
}

TEST_CASE("stitch_image validates patch counts and extents") {
  Rng rng(307);
  const RasterImage img = testsupport::random_image(rng, 64, 64);
  auto [grid, patches] = tile(img, 32, 8);
  patches.pop_back();
  CHECK_THROWS_AS(stitch_image(grid, patches), InvalidInput);
}

TEST_CASE("stitch_scores averages covering patches") {
  SUBCASE("non-overlapping coverage concatenates") {
    TileGrid grid = make_tile_grid(4, 8, 4, 0);
    REQUIRE(grid.patch_count() == 2);
    std::vector<Tensor> patches = {Tensor::full({1, 4, 4}, 1.0), Tensor::full({1, 4, 4}, 3.0)};
    const Tensor out = stitch_scores(grid, patches);
    CHECK(out.v[0] == 1.0);
    CHECK(out.v[7] == 3.0);
  }
  SUBCASE("a pixel covered twice with 0 and 1 averages to 0.5") {
    TileGrid grid = make_tile_grid(4, 6, 4, 2);  // origins 0 and 2
    REQUIRE(grid.patch_count() == 2);
    std::vector<Tensor> patches = {Tensor::full({1, 4, 4}, 0.0), Tensor::full({1, 4, 4}, 1.0)};
    const Tensor out = stitch_scores(grid, patches);
    CHECK(out.v[0] == 0.0);
    CHECK(out.v[2] == 0.5);  // overlap column
    CHECK(out.v[3] == 0.5);
    CHECK(out.v[5] == 1.0);
  }
  SUBCASE("constant patches give a constant raster") {
    TileGrid grid = make_tile_grid(10, 10, 6, 3);
    std::vector<Tensor> patches(static_cast<std::size_t>(grid.patch_count()),
                                Tensor::full({2, 6, 6}, 0.25));
    const Tensor out = stitch_scores(grid, patches);
    for (double v : out.v) CHECK(v == 0.25);
  }
}

TEST_CASE("synth: zero shift, zero noise, same palette gives bit-identical domains") {
  SynthConfig cfg;
  cfg.height = 48;
  cfg.width = 48;
  cfg.seed = 5;
  const SynthScene scene = synth_generate(cfg);
  CHECK(scene.image_a == scene.image_b);
  CHECK(scene.mask_a == scene.mask_b);
}

TEST_CASE("synth masks are bit-identical for any style") {
  SynthConfig cfg;
  cfg.height = 40;
  cfg.width = 64;
  cfg.seed = 9;
  cfg.domain_a.noise_amp = 3;
  cfg.domain_b.scale = {1.2, 1.0, 0.8};
  cfg.domain_b.offset = {10.0, 0.0, -10.0};
  cfg.domain_b.noise_amp = 2;
  const SynthScene scene = synth_generate(cfg);
  CHECK(scene.mask_a == scene.mask_b);
}

TEST_CASE("synth: noiseless shifted domain obeys the affine relation exactly") {
  SynthConfig cfg;
  cfg.height = 40;
  cfg.width = 40;
  cfg.seed = 11;
  cfg.domain_b.scale = {1.2, 1.0, 0.8};
  cfg.domain_b.offset = {10.0, 0.0, -10.0};
  const SynthScene scene = synth_generate(cfg);
  for (std::size_t i = 0; i < scene.image_a.data.size(); ++i) {
    const int ch = static_cast<int>(i % 3);
    const double want =
        std::nearbyint(cfg.domain_b.scale[static_cast<std::size_t>(ch)] * scene.image_a.data[i] +
                       cfg.domain_b.offset[static_cast<std::size_t>(ch)]);
    const double clamped = want < 0.0 ? 0.0 : (want > 255.0 ? 255.0 : want);
    CHECK(static_cast<double>(scene.image_b.data[i]) == clamped);
  }
}

TEST_CASE("synth is deterministic and rejects degenerate configs") {
  SynthConfig cfg;
  cfg.height = 32;
  cfg.width = 32;
  cfg.seed = 13;
  cfg.domain_b.noise_amp = 2;
  const SynthScene a = synth_generate(cfg);
  const SynthScene b = synth_generate(cfg);
  CHECK(a.image_a == b.image_a);
  CHECK(a.image_b == b.image_b);

  SynthConfig zero = cfg;
  zero.height = 0;
  CHECK_THROWS_WITH_AS(synth_generate(zero), doctest::Contains("height"), InvalidInput);

  SynthConfig outside = cfg;
  outside.domain_b.offset = {200.0, 0.0, 0.0};  // pushes palette past 255
  CHECK_THROWS_AS(synth_generate(outside), InvalidInput);
}

TEST_CASE("synth config key-value round trip") {
  SynthConfig cfg;
  cfg.height = 72;
  cfg.width = 60;
  cfg.seed = 17;
  cfg.trees = 7;
  cfg.domain_b.scale = {1.2, 1.0, 0.8};
  cfg.domain_b.offset = {10.0, 0.0, -10.0};
  cfg.domain_b.noise_amp = 2;
  std::istringstream ss(synth_config_to_kv(cfg).serialize());
  const SynthConfig back = synth_config_from(KeyValueConfig::parse(ss));
  const SynthScene a = synth_generate(cfg);
  const SynthScene b = synth_generate(back);
  CHECK(a.image_a == b.image_a);
  CHECK(a.image_b == b.image_b);
  CHECK(a.mask_a == b.mask_a);
}

TEST_CASE("dataset_stats percentages") {
  SUBCASE("all-background masks have zero foreground") {
    const DatasetStats stats = dataset_stats({LabelMask(8, 8), LabelMask(4, 4)});
    const auto pct = stats.percent();
    CHECK(pct[kBackground] == 100.0);
    CHECK(pct[kBuilding] == 0.0);
    CHECK(pct[kRoad] == 0.0);
    CHECK(pct[kTree] == 0.0);
    CHECK(stats.patch_count == 2);
    CHECK(stats.total_pixels == 80);
  }
  SUBCASE("half building, half road") {
    LabelMask mask(2, 2);
    mask.at(0, 0) = kBuilding;
    mask.at(0, 1) = kBuilding;
    mask.at(1, 0) = kRoad;
    mask.at(1, 1) = kRoad;
    const auto pct = dataset_stats({mask}).percent();
    CHECK(pct[kBuilding] == 50.0);
    CHECK(pct[kRoad] == 50.0);
    CHECK(pct[kTree] == 0.0);
  }
  SUBCASE("percentages sum to 100") {
    Rng rng(309);
    std::vector<LabelMask> masks;
    for (int i = 0; i < 4; ++i) masks.push_back(testsupport::random_mask(rng, 13, 17));
    const auto pct = dataset_stats(masks).percent();
    CHECK(pct[0] + pct[1] + pct[2] + pct[3] == doctest::Approx(100.0).epsilon(1e-4));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(dataset_stats({}), InvalidInput);
  }
}

TEST_CASE("png image round trip is lossless") {
  Rng rng(311);
  testsupport::TempDir dir("png");
  for (int trial = 0; trial < 3; ++trial) {
    const RasterImage img = testsupport::random_image(rng, 33, 47);
    save_png(dir.file("img.png"), img);
    CHECK(load_png(dir.file("img.png")) == img);
  }
}

TEST_CASE("mask png round trip is lossless and id-checked") {
  Rng rng(313);
  testsupport::TempDir dir("maskpng");
  const LabelMask mask = testsupport::random_mask(rng, 21, 34);
  save_mask_png(dir.file("m.png"), mask);
  CHECK(load_mask_png(dir.file("m.png")) == mask);

  LabelMask bad = mask;
  bad.ids[5] = 4;
  CHECK_THROWS_WITH_AS(save_mask_png(dir.file("bad.png"), bad), doctest::Contains("id 4"),
                       InvalidInput);
}

TEST_CASE("mask colorization follows the figure legend") {
  LabelMask mask(2, 2);
  mask.at(0, 0) = kBuilding;
  mask.at(0, 1) = kRoad;
  mask.at(1, 0) = kTree;
  mask.at(1, 1) = kBackground;
  const RasterImage color = colorize_mask(mask);
  CHECK(color.pixel(0, 0)[0] == 255);  // building red
  CHECK(color.pixel(0, 0)[1] == 0);
  CHECK(color.pixel(0, 1)[0] == 255);  // road white
  CHECK(color.pixel(0, 1)[1] == 255);
  CHECK(color.pixel(0, 1)[2] == 255);
  CHECK(color.pixel(1, 0)[1] == 255);  // tree green
  CHECK(color.pixel(1, 0)[0] == 0);
  CHECK(color.pixel(1, 1)[0] == 0);  // background black

  LabelMask trees(3, 3, kTree);
  const RasterImage all_green = colorize_mask(trees);
  for (std::size_t i = 0; i < all_green.data.size(); i += 3) {
    CHECK(all_green.data[i] == 0);
    CHECK(all_green.data[i + 1] == 255);
    CHECK(all_green.data[i + 2] == 0);
  }
}

TEST_CASE("png loader rejects wrong color type and bit depth") {
  Rng rng(315);
  testsupport::TempDir dir("pngbad");
  const RasterImage img = testsupport::random_image(rng, 8, 8);
  save_png(dir.file("rgb.png"), img);
  // an RGB file is not a mask
  CHECK_THROWS_WITH_AS(load_mask_png(dir.file("rgb.png")), doctest::Contains("grayscale"),
                       InvalidInput);
  const LabelMask mask = testsupport::random_mask(rng, 8, 8);
  save_mask_png(dir.file("gray.png"), mask);
  // a grayscale file is not an RGB image
  CHECK_THROWS_AS(load_png(dir.file("gray.png")), InvalidInput);

  // patch the IHDR bit-depth byte to 16 and fix the CRC
  std::string bytes = detail::read_file_bytes(dir.file("rgb.png"));
  bytes[24] = 16;
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + 12), 4 + 13);
  bytes[29] = static_cast<char>((crc >> 24) & 0xFF);
  bytes[30] = static_cast<char>((crc >> 16) & 0xFF);
  bytes[31] = static_cast<char>((crc >> 8) & 0xFF);
  bytes[32] = static_cast<char>(crc & 0xFF);
  detail::write_file_bytes(dir.file("deep.png"), bytes);
  CHECK_THROWS_WITH_AS(load_png(dir.file("deep.png")), doctest::Contains("bit depth"),
                       InvalidInput);
}

TEST_CASE("png loader rejects corrupt files") {
  testsupport::TempDir dir("pngcorrupt");
  detail::write_file_bytes(dir.file("junk.png"), "not a png at all");
  CHECK_THROWS_WITH_AS(load_png(dir.file("junk.png")), doctest::Contains("not a PNG"),
                       InvalidInput);

  Rng rng(317);
  const RasterImage img = testsupport::random_image(rng, 8, 8);
  save_png(dir.file("ok.png"), img);
  std::string bytes = detail::read_file_bytes(dir.file("ok.png"));
  bytes[40] = static_cast<char>(bytes[40] ^ 0x5A);  // flip a byte inside IDAT
  detail::write_file_bytes(dir.file("flip.png"), bytes);
  CHECK_THROWS_AS(load_png(dir.file("flip.png")), InvalidInput);
}

TEST_CASE("png decoder handles all five scanline filters") {
  // Hand-built 2x3 grayscale PNG, one row per filter regime. Expected pixel
  // values are derived by hand from the filter definitions.
  auto build_png = [](const std::string& raw, int width, int height) {
    std::string out(reinterpret_cast<const char*>(pngdetail::kSignature), 8);
    std::string ihdr;
    pngdetail::put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    pngdetail::put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    pngdetail::append_chunk(out, "IHDR", ihdr);
    pngdetail::append_chunk(out, "IDAT", pngdetail::deflate_bytes(raw));
    pngdetail::append_chunk(out, "IEND", "");
    return out;
  };
  testsupport::TempDir dir("pngfilters");

  // row 0: filter 1 (Sub):   10+0, 5+10, 6+15            -> 10, 15, 21
  // row 1: filter 2 (Up):    1+10, 2+15, 3+21            -> 11, 17, 24
  // row 2: filter 3 (Avg):   1+(0+11)/2, 2+(6+17)/2, 5+(13+24)/2 -> 6, 13, 23
  // row 3: filter 4 (Paeth): 1+6, 2+13, 3+23             -> 7, 15, 26
  std::string raw;
  raw += '\x01';
  raw += "\x0A\x05\x06";
  raw += '\x02';
  raw += "\x01\x02\x03";
  raw += '\x03';
  raw += "\x01\x02\x05";
  raw += '\x04';
  raw += "\x01\x02\x03";
  detail::write_file_bytes(dir.file("f.png"), build_png(raw, 3, 4));

  const LabelMask got = [&] {
    // bypass the 4-class check by decoding directly
    pngdetail::Decoded d = pngdetail::decode(dir.file("f.png"));
    LabelMask m(d.height, d.width);
    m.ids = d.pixels;
    return m;
  }();
  const std::uint8_t expected[4][3] = {
      {10, 15, 21}, {11, 17, 24}, {6, 13, 23}, {7, 15, 26}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) CHECK(got.at(r, c) == expected[r][c]);
}

TEST_SUITE_END();
