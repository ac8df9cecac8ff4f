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

#include <cmath>

#include "cmgan/tensor.hpp"

namespace cmgan {

/// Adam moment buffers and hyper-parameters for one Parameter.
struct AdamState {
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(const std::vector<int>& shape, double lr, double beta1 = 0.9, double beta2 = 0.999)
      : m(Tensor::zeros(shape)), v(Tensor::zeros(shape)), lr(lr), beta1(beta1), beta2(beta2) {
    if (!(lr > 0.0)) detail::fail_input("learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      detail::fail_input("Adam decay rates must lie in [0, 1)");
  }
};

/// Bias-corrected Adam update; consumes and zeroes the gradient.
inline void adam_step(Parameter& p, AdamState& s) {
  if (!p.value.same_shape(s.m))
    detail::fail_input("Adam state shape ", s.m.shape_str(), " does not match parameter ",
                       p.value.shape_str());
  s.t += 1;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < p.value.v.size(); ++i) {
    const double g = p.grad.v[i];
    s.m.v[i] = s.beta1 * s.m.v[i] + (1.0 - s.beta1) * g;
    s.v.v[i] = s.beta2 * s.v.v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = s.m.v[i] / c1;
    const double vhat = s.v.v[i] / c2;
    p.value.v[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
  p.zero_grad();
}

}  // namespace cmgan
