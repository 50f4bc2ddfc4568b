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

#ifndef ECAPA_GRADCHECK_HPP_
#define ECAPA_GRADCHECK_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "ecapa/graph.hpp"
#include "ecapa/ops.hpp"

namespace ecapa {

// Central finite-difference verification of reverse-mode gradients, always
// in double precision. The loss builder must be a pure function of the
// parameter values: rebuild the whole graph on every call.
//
// Error metric per element: |analytic - numeric| / max(1, |analytic|, |numeric|),
// i.e. relative above unit magnitude and absolute below it, which keeps the
// check meaningful for near-zero gradients where the quotient degenerates.
//
// A fixed step is invalid for the rare perturbation direction whose stencil
// straddles a relu or clamp kink (the secant error there scales with the
// step, not its square). Elements that miss the tolerance at the base step
// are therefore re-measured at step/10 and step/100 and judged on the best
// of the three; a genuinely wrong gradient keeps a step-independent error
// and stays flagged.

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // When positive, check at most this many evenly-strided elements per
  // parameter tensor instead of all of them.
  Index max_elems_per_param = 0;
  bool refine_at_kinks = true;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  int worst_param = -1;
  Index worst_elem = -1;

  bool passed(double tol = 1e-4) const { return max_rel_err < tol; }
};

inline double grad_rel_err(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

namespace detail {

template <typename Eval>
double fd_element_error(Eval&& eval, Tensor<double>& p, Index e, double analytic,
                        const GradCheckOptions& opts) {
  auto central = [&](double h) {
    const double orig = p(e);
    p(e) = orig + h;
    const double lp = eval();
    p(e) = orig - h;
    const double lm = eval();
    p(e) = orig;
    return grad_rel_err(analytic, (lp - lm) / (2.0 * h));
  };
  double err = central(opts.step);
  if (err >= 0.5 * opts.tolerance && opts.refine_at_kinks) {
    err = std::min(err, central(opts.step / 10.0));
    if (err >= 0.5 * opts.tolerance) err = std::min(err, central(opts.step / 100.0));
  }
  return err;
}

}  // namespace detail

// Compares caller-supplied gradients against central differences of the
// scalar loss `build(graph, param_vars)` at `params`.
template <typename BuildLoss>
GradCheckResult compare_gradients(std::vector<Tensor<double>> params,
                                  BuildLoss&& build,
                                  const std::vector<Tensor<double>>& analytic,
                                  GradCheckOptions opts = {}) {
  auto eval = [&]() {
    Graph<double> g;
    std::vector<Var<double>> vars;
    vars.reserve(params.size());
    for (auto& p : params) vars.push_back(g.input(p));
    Var<double> loss = build(g, vars);
    ECAPA_CHECK(loss.value().numel() == 1, "gradcheck: loss must be scalar");
    return loss.value()(0);
  };

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor<double>& p = params[pi];
    const Index n = p.numel();
    const Index checks =
        opts.max_elems_per_param > 0 ? std::min(opts.max_elems_per_param, n) : n;
    for (Index ci = 0; ci < checks; ++ci) {
      const Index e = ci * n / checks;
      const double err =
          detail::fd_element_error(eval, p, e, analytic[pi](e), opts);
      if (err > res.max_rel_err) {
        res.max_rel_err = err;
        res.worst_param = static_cast<int>(pi);
        res.worst_elem = e;
      }
    }
  }
  return res;
}

// Runs backward() once to obtain analytic gradients, then verifies them
// against central differences.
template <typename BuildLoss>
GradCheckResult check_gradients(const std::vector<Tensor<double>>& params,
                                BuildLoss&& build, GradCheckOptions opts = {}) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(g.param(p));
    Var<double> loss = build(g, vars);
    g.backward(loss);
    for (const auto& v : vars) analytic.push_back(v.grad());
  }
  return compare_gradients(params, build, analytic, opts);
}

}  // namespace ecapa

#endif  // ECAPA_GRADCHECK_HPP_
