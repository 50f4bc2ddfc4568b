// Copyright (c) 2026 The ecapa-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECAPA_OPTIM_HPP_
#define ECAPA_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "ecapa/tensor.hpp"

namespace ecapa {

// Cyclical learning rate, triangular2 policy: a symmetric triangle wave
// peaking mid-cycle whose amplitude halves every cycle.
//   lr(t) = lr_min + (lr_max - lr_min) * 2^-cycle * (1 - |2x - 1|)
// With `stepsize_mode`, cycle_len is read as the rising leg only, so a full
// cycle spans 2*cycle_len iterations.
struct LRSchedule {
  double lr_min = 1e-8;
  double lr_max = 1e-3;
  std::int64_t cycle_len = 130000;
  bool stepsize_mode = false;
};

inline double cyclical_lr(std::int64_t iteration, const LRSchedule& s) {
  ECAPA_CHECK(iteration >= 0, "cyclical_lr: negative iteration");
  ECAPA_CHECK(s.cycle_len > 0 && s.lr_max >= s.lr_min,
              "cyclical_lr: bad schedule");
  const std::int64_t period = s.stepsize_mode ? 2 * s.cycle_len : s.cycle_len;
  const std::int64_t cycle = iteration / period;
  const double x = static_cast<double>(iteration % period) / static_cast<double>(period);
  const double tri = 1.0 - std::fabs(2.0 * x - 1.0);
  return s.lr_min + (s.lr_max - s.lr_min) * std::ldexp(tri, -static_cast<int>(cycle));
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-parameter Adam moments plus the coupled weight-decay coefficients
// (decay adds lambda*theta to the gradient before the moment updates).
template <typename Scalar>
struct OptimState {
  AdamConfig adam;
  std::vector<Tensor<Scalar>> m;
  std::vector<Tensor<Scalar>> v;
  std::vector<double> weight_decay;
  std::int64_t step = 0;

  template <typename Shapes>
  static OptimState init(const Shapes& params, const std::vector<double>& decay,
                         AdamConfig cfg = {}) {
    OptimState st;
    st.adam = cfg;
    st.weight_decay = decay;
    for (const auto& p : params) {
      st.m.push_back(Tensor<Scalar>::zeros(p->shape()));
      st.v.push_back(Tensor<Scalar>::zeros(p->shape()));
    }
    ECAPA_CHECK(st.weight_decay.size() == st.m.size(),
                "OptimState: decay table size mismatch");
    return st;
  }
};

// One bias-corrected Adam update over a parameter list. `params` and
// `grads` align with the state's moment tensors.
template <typename Scalar>
void adam_step(const std::vector<Tensor<Scalar>*>& params,
               const std::vector<const Tensor<Scalar>*>& grads,
               OptimState<Scalar>& st, double lr) {
  ECAPA_CHECK(params.size() == st.m.size() && grads.size() == st.m.size(),
              "adam_step: parameter/state size mismatch");
  st.step += 1;
  const double b1 = st.adam.beta1, b2 = st.adam.beta2;
  const Scalar c1 = Scalar(1.0 / (1.0 - std::pow(b1, static_cast<double>(st.step))));
  const Scalar c2 = Scalar(1.0 / (1.0 - std::pow(b2, static_cast<double>(st.step))));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Scalar>& p = *params[i];
    const Tensor<Scalar>& gin = *grads[i];
    ECAPA_CHECK(p.same_shape(gin) && p.same_shape(st.m[i]),
                "adam_step: shape mismatch at parameter " << i);
    auto m = st.m[i].array();
    auto v = st.v[i].array();
    const Scalar lambda = Scalar(st.weight_decay[i]);
    // g = grad + lambda * theta, evaluated before the parameter moves
    Tensor<Scalar> gt(p.shape());
    gt.array() = gin.array() + lambda * p.array();
    m = Scalar(b1) * m + Scalar(1 - b1) * gt.array();
    v = Scalar(b2) * v + Scalar(1 - b2) * gt.array().square();
    p.array() -= Scalar(lr) * (m * c1) / ((v * c2).sqrt() + Scalar(st.adam.eps));
  }
}

}  // namespace ecapa

#endif  // ECAPA_OPTIM_HPP_
