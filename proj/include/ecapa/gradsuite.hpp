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
//
// Finite-difference verification suites over the whole op and layer set,
// shared by the gradcheck command and the test binaries. Random instances
// keep inputs away from the relu kink and the sqrt clamp so the numeric
// derivative is well defined.

#ifndef ECAPA_GRADSUITE_HPP_
#define ECAPA_GRADSUITE_HPP_

#include <string>
#include <vector>

#include "ecapa/gradcheck.hpp"
#include "ecapa/layers.hpp"
#include "ecapa/loss.hpp"
#include "ecapa/model.hpp"

namespace ecapa {

struct LayerCheck {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = false;
  std::string worst_param;  // filled by the whole-model check
};

namespace gradsuite_detail {

// Uniform magnitudes in [0.2, 1.2] with random sign: smooth territory for
// relu and the statistics clamps.
inline Tensor<double> away_from_kinks(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (Index i = 0; i < t.numel(); ++i) {
    const double mag = rng.uniform(0.2, 1.2);
    t(i) = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

template <typename BuildLoss>
LayerCheck run_check(const std::string& name, const std::vector<Tensor<double>>& params,
                     BuildLoss&& build, const GradCheckOptions& opts) {
  const GradCheckResult r = check_gradients(params, build, opts);
  return {name, r.max_rel_err, r.passed(opts.tolerance)};
}

}  // namespace gradsuite_detail

// One finite-difference check per primitive op and composed layer.
inline std::vector<LayerCheck> gradcheck_layers(std::uint64_t seed,
                                                GradCheckOptions opts = {}) {
  using gradsuite_detail::away_from_kinks;
  using gradsuite_detail::run_check;
  Rng root(seed);
  std::vector<LayerCheck> out;

  auto weighted = [](Graph<double>& g, Var<double> y, Rng rng) {
    return dot_const(y, Tensor<double>::randn(y.value().shape(), rng, 0.7));
  };

  {
    Rng r = root.stream("conv1d");
    std::vector<Tensor<double>> p = {away_from_kinks({2, 3, 7}, r),
                                     Tensor<double>::randn({4, 3, 3}, r, 0.5),
                                     Tensor<double>::randn({4}, r, 0.5)};
    out.push_back(run_check("conv1d(k=3,d=2)", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, conv1d(v[0], v[1], v[2], 2), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("dense");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({3, 5}, r),
                                     Tensor<double>::randn({4, 5}, r, 0.5),
                                     Tensor<double>::randn({4}, r, 0.5)};
    out.push_back(run_check("dense", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, dense(v[0], v[1], v[2]), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("bn3d");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 3, 6}, r),
                                     Tensor<double>::uniform({3}, r, 0.5, 1.5),
                                     Tensor<double>::randn({3}, r, 0.3)};
    out.push_back(run_check("batchnorm1d[B,C,T] train", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, batchnorm1d<double>(v[0], v[1], v[2], true, nullptr),
                                              r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("bn2d");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({5, 4}, r),
                                     Tensor<double>::uniform({4}, r, 0.5, 1.5),
                                     Tensor<double>::randn({4}, r, 0.3)};
    out.push_back(run_check("batchnorm1d[B,F] train", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, batchnorm1d<double>(v[0], v[1], v[2], true, nullptr),
                                              r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("bn_eval");
    BatchNormStats<double> stats(3);
    Rng sr = r.stream("stats");
    stats.mean = Tensor<double>::randn({3}, sr, 0.2);
    stats.var = Tensor<double>::uniform({3}, sr, 0.5, 2.0);
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 3, 5}, r),
                                     Tensor<double>::uniform({3}, r, 0.5, 1.5),
                                     Tensor<double>::randn({3}, r, 0.3)};
    out.push_back(run_check("batchnorm1d eval", p,
                            [&, stats](Graph<double>& g, const std::vector<Var<double>>& v) mutable {
                              return weighted(g, batchnorm1d(v[0], v[1], v[2], false, &stats),
                                              r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("relu");
    std::vector<Tensor<double>> p = {away_from_kinks({2, 4, 5}, r)};
    out.push_back(run_check("relu", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, relu(v[0]), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("sigmoid");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({3, 4}, r, 2.0)};
    out.push_back(run_check("sigmoid", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, sigmoid(v[0]), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("softmax");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 3, 6}, r, 1.5)};
    out.push_back(run_check("softmax_over_time", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, softmax_over_time(v[0]), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("reductions");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 3, 5}, r)};
    out.push_back(run_check("mean/sum/broadcast over time", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              Var<double> m = mean_over_time(v[0]);
                              Var<double> s = sum_over_time(v[0]);
                              Var<double> b = broadcast_over_time(add(m, s), 5);
                              return weighted(g, b, r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("scale_channels");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 3, 4}, r),
                                     Tensor<double>::randn({2, 3}, r)};
    out.push_back(run_check("scale_channels", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, scale_channels(v[0], v[1]), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("elementwise");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({3, 4}, r),
                                     Tensor<double>::randn({3, 4}, r)};
    out.push_back(run_check("add/sub/mul", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, mul(add(v[0], v[1]), sub(v[0], v[1])),
                                              r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("sqrt");
    std::vector<Tensor<double>> p = {Tensor<double>::uniform({3, 4}, r, 0.3, 2.0)};
    out.push_back(run_check("sqrt_clamped", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return weighted(g, sqrt_clamped(v[0], 1e-6), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("slices");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 6, 4}, r)};
    out.push_back(run_check("concat/slice/tile channels", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              Var<double> a = slice_channels(v[0], 0, 1);
                              Var<double> b = slice_channels(v[0], 1, 5);
                              Var<double> t = tile_channels(a, 5);
                              return weighted(g, concat_channels<double>({mul(t, b), a}),
                                              r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("se");
    std::vector<Tensor<double>> p = {away_from_kinks({2, 4, 5}, r),
                                     Tensor<double>::randn({2, 4}, r, 0.6),
                                     Tensor<double>::randn({2}, r, 0.3),
                                     Tensor<double>::randn({4, 2}, r, 0.6),
                                     Tensor<double>::randn({4}, r, 0.3)};
    out.push_back(run_check("se_block", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              SEVars<double> se{v[1], v[2], v[3], v[4]};
                              return weighted(g, se_block(v[0], se), r.stream("w"));
                            },
                            opts));
  }
  {
    Rng r = root.stream("res2");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({2, 8, 6}, r)};
    for (int i = 0; i < 3; ++i) {
      p.push_back(Tensor<double>::randn({2, 2, 3}, r, 0.5));
      p.push_back(Tensor<double>::randn({2}, r, 0.3));
    }
    out.push_back(run_check("res2_conv(scale=4)", p,
                            [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                              Res2Vars<double> r2;
                              r2.scale = 4;
                              r2.dilation = 2;
                              for (int i = 0; i < 3; ++i)
                                r2.kernels.push_back({v[1 + 2 * i], v[2 + 2 * i]});
                              return weighted(g, res2_conv(v[0], r2), r.stream("w"));
                            },
                            opts));
  }
  {
    // Pooling in all three attention modes.
    for (int mode = 0; mode < 3; ++mode) {
      const bool context = mode == 0;
      const bool temporal = mode == 2;
      const Index C = 4, R = 3, T = 5;
      const Index cin = context ? 3 * C : C;
      const Index cq = temporal ? 1 : C;
      Rng r = root.stream("attpool" + std::to_string(mode));
      std::vector<Tensor<double>> p = {away_from_kinks({2, C, T}, r),
                                       Tensor<double>::randn({R, cin, 1}, r, 0.5),
                                       Tensor<double>::randn({R}, r, 0.3),
                                       Tensor<double>::randn({cq, R, 1}, r, 0.5),
                                       Tensor<double>::randn({cq}, r, 0.3)};
      const char* names[] = {"attentive_stats_pool(context)",
                             "attentive_stats_pool(no context)",
                             "attentive_stats_pool(temporal)"};
      out.push_back(run_check(names[mode], p,
                              [&](Graph<double>& g, const std::vector<Var<double>>& v) {
                                AttStatVars<double> a{v[1], v[2], v[3], v[4], context,
                                                      temporal};
                                return weighted(g, attentive_stats_pool(v[0], a),
                                                r.stream("w"));
                              },
                              opts));
    }
  }
  {
    Rng r = root.stream("aam");
    std::vector<Tensor<double>> p = {Tensor<double>::randn({3, 6}, r),
                                     Tensor<double>::randn({4, 6}, r)};
    out.push_back(run_check("aam_softmax_loss", p,
                            [](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return aam_softmax_loss(v[0], v[1], {2, 0, 1},
                                                      AamOptions{0.2, 30.0});
                            },
                            opts));
  }
  {
    // Steep but smooth region of the margin trig: cosine close to one.
    Rng r = root.stream("aam_near1");
    Tensor<double> emb({1, 4});
    Tensor<double> w({2, 4});
    emb = Tensor<double>::from({1, 4}, {1.0, 0.04, 0.0, 0.0});
    w = Tensor<double>::from({2, 4}, {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    out.push_back(run_check("aam_softmax_loss(cos~0.999)", {emb, w},
                            [](Graph<double>& g, const std::vector<Var<double>>& v) {
                              return aam_softmax_loss(v[0], v[1], {0},
                                                      AamOptions{0.2, 30.0});
                            },
                            opts));
  }
  return out;
}

// Finite differences through the whole model in train mode: loss is the
// margin softmax on a fixed random batch.
inline LayerCheck gradcheck_model(const ModelConfig& cfg, std::uint64_t seed,
                                  GradCheckOptions opts = {}, Index T = 12,
                                  Index batch = 2, int num_speakers = 4) {
  Model<double> model(cfg, num_speakers, seed);
  Rng r = Rng(seed).stream("gradcheck/input");
  const Tensor<double> feats = Tensor<double>::randn({batch, cfg.input_dim, T}, r);
  std::vector<int> labels;
  for (Index b = 0; b < batch; ++b)
    labels.push_back(static_cast<int>(r.uniform_int(0, num_speakers - 1)));

  auto build = [&](Graph<double>&, const std::vector<Tensor<double>>& values) {
    model.set_parameter_values(values);
    Graph<double> local;
    auto pass = model.run(local, feats, RunMode::train);
    Var<double> loss =
        aam_softmax_loss(pass.embedding, pass.head_weight, labels, AamOptions{});
    return loss.value()(0);
  };

  // Analytic pass.
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    auto pass = model.run(g, feats, RunMode::train);
    Var<double> loss =
        aam_softmax_loss(pass.embedding, pass.head_weight, labels, AamOptions{});
    g.backward(loss);
    for (const auto& v : pass.param_vars) analytic.push_back(v.grad());
  }

  std::vector<Tensor<double>> values = model.parameter_values();
  auto eval = [&]() {
    Graph<double> unused;
    return build(unused, values);
  };
  GradCheckResult res;
  for (std::size_t pi = 0; pi < values.size(); ++pi) {
    Tensor<double>& p = values[pi];
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
  model.set_parameter_values(values);

  LayerCheck check;
  check.name = "model(C=" + std::to_string(cfg.channels) + ")";
  check.max_rel_err = res.max_rel_err;
  check.passed = res.passed(opts.tolerance);
  if (res.worst_param >= 0)
    check.worst_param =
        model.parameters()[static_cast<std::size_t>(res.worst_param)].name +
        "[" + std::to_string(res.worst_elem) + "]";
  return check;
}

}  // namespace ecapa

#endif  // ECAPA_GRADSUITE_HPP_
