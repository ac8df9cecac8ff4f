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

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cmgan/image.hpp"
#include "cmgan/rng.hpp"
#include "cmgan/tensor.hpp"

namespace testsupport {

/// Central finite differences against analytic gradients.
///
/// `value_of` evaluates the scalar objective from the parameters' current
/// values; `accumulate_grads` zeroes the grads and runs one forward+backward.
/// Every element of every parameter is perturbed by +-h. Returns the largest
/// relative error, with |a|+|n| floored to keep the ratio meaningful when a
/// gradient is legitimately tiny.
inline double fd_max_rel_error(const std::vector<cmgan::Parameter*>& params,
                               const std::function<double()>& value_of,
                               const std::function<void()>& accumulate_grads, double h = 1e-5,
                               double floor = 1e-6) {
  for (auto* p : params) p->zero_grad();
  accumulate_grads();
  std::vector<cmgan::Tensor> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    cmgan::Parameter& p = *params[pi];
    for (std::size_t i = 0; i < p.value.v.size(); ++i) {
      const double keep = p.value.v[i];
      p.value.v[i] = keep + h;
      const double up = value_of();
      p.value.v[i] = keep - h;
      const double down = value_of();
      p.value.v[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[pi].v[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  for (auto* p : params) p->zero_grad();
  return worst;
}

inline cmgan::Tensor random_tensor(cmgan::Rng& rng, std::vector<int> shape, double lo = -1.0,
                                   double hi = 1.0) {
  cmgan::Tensor t = cmgan::Tensor::zeros(std::move(shape));
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

inline cmgan::RasterImage random_image(cmgan::Rng& rng, int height, int width) {
  cmgan::RasterImage img(height, width);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_below(256));
  return img;
}

inline cmgan::LabelMask random_mask(cmgan::Rng& rng, int height, int width) {
  cmgan::LabelMask mask(height, width);
  for (auto& id : mask.ids) id = static_cast<std::uint8_t>(rng.uniform_below(4));
  return mask;
}

/// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("cmgan_test_" + tag + "_" + std::to_string(counter_++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path path_;
};

}  // namespace testsupport
