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

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "cmgan/bytes.hpp"
#include "cmgan/image.hpp"

namespace cmgan {

// Minimal PNG codec: non-interlaced 8-bit RGB (images) and 8-bit grayscale
// (masks). DEFLATE via zlib; all five scanline filters handled on read,
// filter None written. Anything else is rejected.

namespace pngdetail {

inline constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

inline void put_u32_be(std::string& out, std::uint32_t x) {
  out.push_back(static_cast<char>((x >> 24) & 0xFF));
  out.push_back(static_cast<char>((x >> 16) & 0xFF));
  out.push_back(static_cast<char>((x >> 8) & 0xFF));
  out.push_back(static_cast<char>(x & 0xFF));
}

inline std::uint32_t get_u32_be(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::string& out, const char type[4], const std::string& body) {
  put_u32_be(out, static_cast<std::uint32_t>(body.size()));
  std::string tag(type, 4);
  out += tag;
  out += body;
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(tag.data()), 4);
  if (!body.empty())
    crc = crc32(crc, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  put_u32_be(out, static_cast<std::uint32_t>(crc));
}

inline std::string deflate_bytes(const std::string& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string out(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_SPEED) != Z_OK)
    throw InternalError("zlib compression failed");
  out.resize(bound);
  return out;
}

inline std::string inflate_bytes(const std::string& compressed, std::size_t expected) {
  std::string out(expected, '\0');
  uLongf got = static_cast<uLongf>(expected);
  const int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &got,
                            reinterpret_cast<const Bytef*>(compressed.data()),
                            static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || got != expected)
    detail::fail_input("PNG pixel stream is corrupt or has unexpected length");
  return out;
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

inline void unfilter(std::vector<std::uint8_t>& pixels, const std::string& raw, int height,
                     int rowbytes, int bpp, const std::string& path) {
  pixels.resize(static_cast<std::size_t>(height) * rowbytes);
  for (int r = 0; r < height; ++r) {
    const auto* src = reinterpret_cast<const unsigned char*>(raw.data()) +
                      static_cast<std::size_t>(r) * (rowbytes + 1);
    const int filter = src[0];
    std::uint8_t* cur = &pixels[static_cast<std::size_t>(r) * rowbytes];
    const std::uint8_t* up = r > 0 ? &pixels[static_cast<std::size_t>(r - 1) * rowbytes] : nullptr;
    for (int i = 0; i < rowbytes; ++i) {
      const int x = src[1 + i];
      const int a = i >= bpp ? cur[i - bpp] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= bpp) ? up[i - bpp] : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default:
          detail::fail_input(path, ": unknown PNG filter ", std::to_string(filter), " in row ",
                             std::to_string(r));
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xFF);
    }
  }
}

struct Decoded {
  int height = 0;
  int width = 0;
  int color_type = 0;  // 0 gray, 2 rgb
  std::vector<std::uint8_t> pixels;
};

inline Decoded decode(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    detail::fail_input(path, ": not a PNG file");

  Decoded d;
  int bit_depth = -1, interlace = -1;
  std::string idat;
  std::size_t pos = 8;
  bool saw_iend = false;
  while (pos + 8 <= bytes.size()) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    const std::uint32_t len = get_u32_be(p);
    if (pos + 12 + len > bytes.size())
      detail::fail_input(path, ": truncated chunk at byte ", std::to_string(pos));
    const std::string type(bytes.data() + pos + 4, 4);
    const char* body = bytes.data() + pos + 8;
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos + 4), 4 + len);
    if (static_cast<std::uint32_t>(crc) != get_u32_be(p + 8 + len))
      detail::fail_input(path, ": CRC mismatch in ", type, " chunk at byte ", std::to_string(pos));

    if (type == "IHDR") {
      if (len != 13) detail::fail_input(path, ": bad IHDR length");
      const auto* b = reinterpret_cast<const unsigned char*>(body);
      d.width = static_cast<int>(get_u32_be(b));
      d.height = static_cast<int>(get_u32_be(b + 4));
      bit_depth = b[8];
      d.color_type = b[9];
      interlace = b[12];
      if (d.width < 1 || d.height < 1) detail::fail_input(path, ": bad PNG dimensions");
      if (bit_depth != 8)
        detail::fail_input(path, ": unsupported bit depth ", std::to_string(bit_depth),
                           " (need 8)");
      if (d.color_type != 0 && d.color_type != 2)
        detail::fail_input(path, ": unsupported color type ", std::to_string(d.color_type),
                           " (need 8-bit grayscale or RGB)");
      if (interlace != 0) detail::fail_input(path, ": interlaced PNG not supported");
    } else if (type == "IDAT") {
      idat.append(body, len);
    } else if (type == "IEND") {
      saw_iend = true;
      break;
    }
    // ancillary chunks are skipped
    pos += 12 + len;
  }
  if (bit_depth < 0) detail::fail_input(path, ": missing IHDR");
  if (!saw_iend) detail::fail_input(path, ": missing IEND");
  if (idat.empty()) detail::fail_input(path, ": missing IDAT");

  const int bpp = d.color_type == 2 ? 3 : 1;
  const int rowbytes = d.width * bpp;
  const std::string raw =
      inflate_bytes(idat, static_cast<std::size_t>(d.height) * (rowbytes + 1));
  unfilter(d.pixels, raw, d.height, rowbytes, bpp, path);
  return d;
}

inline void encode(const std::string& path, int height, int width, int color_type,
                   const std::uint8_t* pixels) {
  const int bpp = color_type == 2 ? 3 : 1;
  const int rowbytes = width * bpp;
  std::string raw;
  raw.reserve(static_cast<std::size_t>(height) * (rowbytes + 1));
  for (int r = 0; r < height; ++r) {
    raw.push_back('\0');  // filter None
    raw.append(reinterpret_cast<const char*>(pixels) + static_cast<std::size_t>(r) * rowbytes,
               static_cast<std::size_t>(rowbytes));
  }

  std::string out(reinterpret_cast<const char*>(kSignature), 8);
  std::string ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);                              // bit depth
  ihdr.push_back(static_cast<char>(color_type));  // 0 gray / 2 rgb
  ihdr.push_back(0);                              // compression
  ihdr.push_back(0);                              // filter method
  ihdr.push_back(0);                              // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", deflate_bytes(raw));
  append_chunk(out, "IEND", "");
  detail::write_file_bytes(path, out);
}

}  // namespace pngdetail

inline RasterImage load_png(const std::string& path) {
  pngdetail::Decoded d = pngdetail::decode(path);
  if (d.color_type != 2)
    detail::fail_input(path, ": expected an RGB image, got grayscale");
  RasterImage img(d.height, d.width);
  img.data = std::move(d.pixels);
  return img;
}

inline void save_png(const std::string& path, const RasterImage& img) {
  pngdetail::encode(path, img.height, img.width, 2, img.data.data());
}

inline LabelMask load_mask_png(const std::string& path) {
  pngdetail::Decoded d = pngdetail::decode(path);
  if (d.color_type != 0)
    detail::fail_input(path, ": expected an 8-bit grayscale mask, got color type ",
                       std::to_string(d.color_type));
  for (std::size_t i = 0; i < d.pixels.size(); ++i)
    if (d.pixels[i] >= kNumClasses)
      detail::fail_input(path, ": mask id ", std::to_string(d.pixels[i]),
                         " out of range at pixel ", std::to_string(i));
  LabelMask mask(d.height, d.width);
  mask.ids = std::move(d.pixels);
  return mask;
}

inline void save_mask_png(const std::string& path, const LabelMask& mask) {
  for (std::size_t i = 0; i < mask.ids.size(); ++i)
    if (mask.ids[i] >= kNumClasses)
      detail::fail_input(path, ": refusing to save mask id ", std::to_string(mask.ids[i]),
                         " at pixel ", std::to_string(i));
  pngdetail::encode(path, mask.height, mask.width, 0, mask.ids.data());
}

}  // namespace cmgan
