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

#include <sstream>
#include <string>
#include <vector>

#include "cmgan/bytes.hpp"
#include "cmgan/tensor.hpp"

namespace cmgan {

// Checkpoint payload: `<base>.manifest` holds one "name dim dim ..." line per
// parameter; `<base>.f32` holds the values as raw little-endian float32 in
// manifest order. Values are down-converted on save and up-converted on load.

inline void save_checkpoint(const std::vector<Parameter*>& params, const std::string& base) {
  std::string manifest;
  std::string payload;
  for (const Parameter* p : params) {
    manifest += p->name;
    for (int d : p->value.shape) manifest += " " + std::to_string(d);
    manifest += "\n";
    for (double x : p->value.v) detail::put_f32_le(payload, static_cast<float>(x));
  }
  detail::write_file_bytes(base + ".manifest", manifest);
  detail::write_file_bytes(base + ".f32", payload);
}

/// Loads a checkpoint into an existing parameter set; names and shapes must
/// match the manifest exactly, in order.
inline void load_checkpoint(const std::vector<Parameter*>& params, const std::string& base) {
  std::istringstream manifest(detail::read_file_bytes(base + ".manifest"));
  const std::string payload = detail::read_file_bytes(base + ".f32");
  std::size_t offset = 0;
  std::string line;
  std::size_t idx = 0;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    std::vector<int> shape;
    int d;
    while (ls >> d) shape.push_back(d);
    if (idx >= params.size())
      detail::fail_input("checkpoint ", base, " lists more parameters than expected (first extra: ",
                         name, ")");
    Parameter& p = *params[idx];
    if (p.name != name)
      detail::fail_input("checkpoint ", base, " parameter #", std::to_string(idx), " is '", name,
                         "', expected '", p.name, "'");
    if (p.value.shape != shape)
      detail::fail_input("checkpoint ", base, " parameter '", name, "' has shape ",
                         Tensor::shape_str(shape), ", expected ", p.value.shape_str());
    const std::size_t bytes = static_cast<std::size_t>(p.value.size()) * 4;
    if (offset + bytes > payload.size())
      detail::fail_input("checkpoint ", base, " payload truncated at parameter '", name, "'");
    const auto* raw = reinterpret_cast<const unsigned char*>(payload.data()) + offset;
    for (std::int64_t i = 0; i < p.value.size(); ++i)
      p.value.v[static_cast<std::size_t>(i)] =
          static_cast<double>(detail::get_f32_le(raw + 4 * i));
    p.zero_grad();
    offset += bytes;
    ++idx;
  }
  if (idx != params.size())
    detail::fail_input("checkpoint ", base, " lists ", std::to_string(idx),
                       " parameters, expected ", std::to_string(params.size()));
  if (offset != payload.size())
    detail::fail_input("checkpoint ", base, " payload has ",
                       std::to_string(payload.size() - offset), " trailing bytes");
}

}  // namespace cmgan
