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
// Network building blocks composed from ops.hpp primitives: squeeze-
// excitation, Res2 multi-scale convolution, the SE-Res2 block, and
// channel-dependent attentive statistics pooling.

#ifndef ECAPA_LAYERS_HPP_
#define ECAPA_LAYERS_HPP_

#include <optional>
#include <vector>

#include "ecapa/ops.hpp"

namespace ecapa {

// Variance floor applied before square roots in pooled statistics; the
// attention-weighted variance can come out slightly negative in floating
// point.
inline constexpr double kStatsEps = 1e-6;

template <typename Scalar>
struct ConvVars {
  Var<Scalar> w;  // [Cout,Cin,k]
  Var<Scalar> b;  // [Cout]
};

template <typename Scalar>
struct BnVars {
  Var<Scalar> gamma;
  Var<Scalar> beta;
  BatchNormStats<Scalar>* stats = nullptr;
};

template <typename Scalar>
struct SEVars {
  Var<Scalar> w1;  // [R,C]
  Var<Scalar> b1;  // [R]
  Var<Scalar> w2;  // [C,R]
  Var<Scalar> b2;  // [C]
};

template <typename Scalar>
struct Res2Vars {
  std::vector<ConvVars<Scalar>> kernels;  // scale-1 convs, groups 2..scale
  int scale = 8;
  int dilation = 1;
};

template <typename Scalar>
struct AttStatVars {
  Var<Scalar> w;      // [R,Cin,1], Cin = C or 3C with context
  Var<Scalar> b;      // [R]
  Var<Scalar> v;      // [Cq,R,1], Cq = C, or 1 when temporal_only
  Var<Scalar> k_vec;  // [Cq]
  bool context = true;
  bool temporal_only = false;
};

// Squeeze-excitation: per-channel gates from the time-averaged descriptor.
//   z = mean_t(h); s = sigmoid(W2 relu(W1 z + b1) + b2); out_c = s_c * h_c
template <typename Scalar>
Var<Scalar> se_block(Var<Scalar> h, const SEVars<Scalar>& p) {
  Var<Scalar> z = mean_over_time(h);
  Var<Scalar> gate = sigmoid(dense(relu(dense(z, p.w1, p.b1)), p.w2, p.b2));
  return scale_channels(h, gate);
}

// Res2 multi-scale convolution. The input splits into `scale` groups of
// C/scale channels:
//   y_1 = x_1
//   y_2 = K_2(x_2)
//   y_i = K_i(x_i + y_{i-1}),  i > 2
// and the groups concatenate back to C channels. Group 1 has no kernel,
// which is what keeps the parameter count low.
template <typename Scalar>
Var<Scalar> res2_conv(Var<Scalar> h, const Res2Vars<Scalar>& p) {
  const Index C = h.value().dim(1);
  const int s = p.scale;
  ECAPA_CHECK(s >= 2, "res2_conv: scale must be >= 2, got " << s);
  ECAPA_CHECK(C % s == 0,
              "res2_conv: channels " << C << " not divisible by scale " << s);
  ECAPA_CHECK(static_cast<int>(p.kernels.size()) == s - 1,
              "res2_conv: want " << s - 1 << " kernels, got " << p.kernels.size());
  const Index width = C / s;
  std::vector<Var<Scalar>> groups;
  groups.reserve(static_cast<std::size_t>(s));
  groups.push_back(slice_channels(h, 0, width));
  for (int i = 1; i < s; ++i) {
    Var<Scalar> xi = slice_channels(h, i * width, width);
    if (i > 1) xi = add(xi, groups.back());
    const auto& k = p.kernels[static_cast<std::size_t>(i - 1)];
    groups.push_back(conv1d(xi, k.w, k.b, p.dilation));
  }
  return concat_channels(groups);
}

template <typename Scalar>
struct SERes2BlockVars {
  ConvVars<Scalar> conv_in;  // k=1, C -> C
  BnVars<Scalar> bn1;
  std::optional<Res2Vars<Scalar>> res2;    // multi-scale middle stage
  std::optional<ConvVars<Scalar>> plain;   // or a full CxC dilated conv
  int dilation = 1;
  BnVars<Scalar> bn2;
  ConvVars<Scalar> conv_out;  // k=1, C -> C
  BnVars<Scalar> bn3;
  std::optional<SEVars<Scalar>> se;
};

// One SE-Res2 block: dense(k=1) -> relu -> BN -> res2 -> relu -> BN ->
// dense(k=1) -> relu -> BN -> SE, plus the caller-supplied skip tensor
// (plain addition, no post-activation). `skip` may be the block input or a
// summed-residual tensor; pass an invalid Var for no skip at all.
template <typename Scalar>
Var<Scalar> se_res2block(Var<Scalar> h, Var<Scalar> skip,
                         const SERes2BlockVars<Scalar>& p, bool train) {
  Var<Scalar> t = batchnorm1d(relu(conv1d(h, p.conv_in.w, p.conv_in.b, 1)),
                              p.bn1.gamma, p.bn1.beta, train, p.bn1.stats);
  if (p.res2.has_value()) {
    t = res2_conv(t, *p.res2);
  } else {
    t = conv1d(t, p.plain->w, p.plain->b, p.dilation);
  }
  t = batchnorm1d(relu(t), p.bn2.gamma, p.bn2.beta, train, p.bn2.stats);
  t = batchnorm1d(relu(conv1d(t, p.conv_out.w, p.conv_out.b, 1)),
                  p.bn3.gamma, p.bn3.beta, train, p.bn3.stats);
  if (p.se.has_value()) t = se_block(t, *p.se);
  if (skip.graph != nullptr) {
    ECAPA_CHECK(skip.value().same_shape(t.value()),
                "se_res2block: skip shape " << shape_str(skip.value().shape())
                                            << " vs body " << shape_str(t.value().shape()));
    t = add(t, skip);
  }
  return t;
}

// Channel- and context-dependent attentive statistics pooling.
// Scores e[t,c] = v_c' relu(W hhat_t + b) + k_c are normalized channel-wise
// across time; the pooled output concatenates the attention-weighted mean
// and standard deviation per channel. With `context`, hhat_t additionally
// carries the utterance-level unweighted mean and std of h. With
// `temporal_only`, one shared score per frame attends for all channels.
template <typename Scalar>
Var<Scalar> attentive_stats_pool(Var<Scalar> h, const AttStatVars<Scalar>& p) {
  const Index C = h.value().dim(1);
  const Index T = h.value().dim(2);
  Var<Scalar> hhat = h;
  if (p.context) {
    Var<Scalar> mu_g = mean_over_time(h);
    Var<Scalar> sigma_g = sqrt_clamped(
        sub(mean_over_time(mul(h, h)), mul(mu_g, mu_g)), kStatsEps);
    hhat = concat_channels<Scalar>(
        {h, broadcast_over_time(mu_g, T), broadcast_over_time(sigma_g, T)});
  }
  Var<Scalar> hidden = relu(conv1d(hhat, p.w, p.b, 1));
  Var<Scalar> scores = conv1d(hidden, p.v, p.k_vec, 1);
  Var<Scalar> alpha = softmax_over_time(scores);
  if (p.temporal_only) alpha = tile_channels(alpha, C);
  Var<Scalar> mean_w = sum_over_time(mul(alpha, h));
  Var<Scalar> std_w = sqrt_clamped(
      sub(sum_over_time(mul(alpha, mul(h, h))), mul(mean_w, mean_w)), kStatsEps);
  return concat_channels<Scalar>({mean_w, std_w});
}

}  // namespace ecapa

#endif  // ECAPA_LAYERS_HPP_
