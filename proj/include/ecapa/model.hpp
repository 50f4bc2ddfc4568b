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
// The speaker-embedding extractor: a dilated-convolution trunk of SE-Res2
// blocks over 80-dim features, multi-layer feature aggregation, attentive
// statistics pooling and a 192-dim bottleneck, with a margin-softmax
// classification head on top for training.

#ifndef ECAPA_MODEL_HPP_
#define ECAPA_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecapa/layers.hpp"
#include "ecapa/ops.hpp"
#include "ecapa/rng.hpp"

namespace ecapa {

enum class AttentionKind { channel_context, channel_no_context, temporal_only };
enum class ResidualKind { summed, standard, none };

struct AblationFlags {
  AttentionKind attention = AttentionKind::channel_context;
  bool se_enabled = true;
  bool res2_enabled = true;
  bool mfa_enabled = true;
  ResidualKind residual = ResidualKind::summed;

  bool operator==(const AblationFlags&) const = default;
};

// The seven single-toggle variants of the ablation study.
enum class AblationVariant { A1, A2, B1, B2, C1, C2, C3 };

struct BlockSpec {
  int kernel = 3;
  int dilation = 1;
  bool operator==(const BlockSpec&) const = default;
};

struct ModelConfig {
  int input_dim = 80;
  int channels = 512;       // trunk width C
  int res2_scale = 8;
  int se_bottleneck = 128;  // must stay below C
  int att_bottleneck = 128;
  int mfa_channels = 1536;  // aggregation conv output, fixed across widths
  int embed_dim = 192;
  int stem_kernel = 5;
  std::vector<BlockSpec> blocks = {{3, 2}, {3, 3}, {3, 4}};
  AblationFlags ablation;

  void validate() const {
    ECAPA_CHECK(input_dim > 0 && channels > 0 && embed_dim > 0 && mfa_channels > 0,
                "ModelConfig: dimensions must be positive");
    ECAPA_CHECK(channels % res2_scale == 0,
                "ModelConfig: channels " << channels << " not divisible by res2 scale "
                                         << res2_scale);
    ECAPA_CHECK(se_bottleneck > 0 && se_bottleneck < channels,
                "ModelConfig: SE bottleneck must lie in (0, C), got "
                    << se_bottleneck << " for C=" << channels);
    ECAPA_CHECK(att_bottleneck > 0, "ModelConfig: attention bottleneck must be positive");
    ECAPA_CHECK(stem_kernel % 2 == 1, "ModelConfig: stem kernel must be odd");
    ECAPA_CHECK(!blocks.empty(), "ModelConfig: no trunk blocks");
    int prev = 0;
    for (const auto& b : blocks) {
      ECAPA_CHECK(b.kernel % 2 == 1 && b.dilation >= 1, "ModelConfig: bad block spec");
      ECAPA_CHECK(b.dilation > prev, "ModelConfig: block dilations must increase");
      prev = b.dilation;
    }
  }

  // The two published widths.
  static ModelConfig paper(int channels) {
    ModelConfig c;
    c.channels = channels;
    return c;
  }

  // Desk-scale width for synthetic-corpus runs; bottlenecks scale down with C.
  static ModelConfig desk() {
    ModelConfig c;
    c.channels = 64;
    c.se_bottleneck = 32;
    c.att_bottleneck = 32;
    c.mfa_channels = 192;
    return c;
  }

  // As small as the topology allows, for finite-difference suites.
  static ModelConfig tiny() {
    ModelConfig c;
    c.channels = 16;
    c.se_bottleneck = 8;
    c.att_bottleneck = 8;
    c.mfa_channels = 48;
    c.embed_dim = 16;
    return c;
  }
};

inline ModelConfig apply_ablation(ModelConfig cfg, AblationVariant v) {
  switch (v) {
    case AblationVariant::A1: cfg.ablation.attention = AttentionKind::temporal_only; break;
    case AblationVariant::A2: cfg.ablation.attention = AttentionKind::channel_no_context; break;
    case AblationVariant::B1: cfg.ablation.se_enabled = false; break;
    case AblationVariant::B2: cfg.ablation.res2_enabled = false; break;
    case AblationVariant::C1: cfg.ablation.mfa_enabled = false; break;
    case AblationVariant::C2: cfg.ablation.residual = ResidualKind::none; break;
    case AblationVariant::C3: cfg.ablation.residual = ResidualKind::standard; break;
  }
  return cfg;
}

inline const char* ablation_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::A1: return "A1";
    case AblationVariant::A2: return "A2";
    case AblationVariant::B1: return "B1";
    case AblationVariant::B2: return "B2";
    case AblationVariant::C1: return "C1";
    case AblationVariant::C2: return "C2";
    case AblationVariant::C3: return "C3";
  }
  return "?";
}

inline std::optional<AblationVariant> parse_ablation(const std::string& s) {
  if (s == "A1" || s == "A.1") return AblationVariant::A1;
  if (s == "A2" || s == "A.2") return AblationVariant::A2;
  if (s == "B1" || s == "B.1") return AblationVariant::B1;
  if (s == "B2" || s == "B.2") return AblationVariant::B2;
  if (s == "C1" || s == "C.1") return AblationVariant::C1;
  if (s == "C2" || s == "C.2") return AblationVariant::C2;
  if (s == "C3" || s == "C.3") return AblationVariant::C3;
  return std::nullopt;
}

enum class RunMode { train, eval };
enum class ParamScope { extractor, full };

// One forward pass bound to a graph. `param_vars` aligns with
// Model::parameters(); grads are read back through it after backward().
template <typename Scalar>
struct ModelPass {
  Var<Scalar> embedding;    // [B, embed_dim]
  Var<Scalar> head_weight;  // [num_speakers, embed_dim]; only in train mode
  std::vector<Var<Scalar>> param_vars;
};

template <typename Scalar>
class Model {
 public:
  struct ParamRef {
    std::string name;
    Tensor<Scalar>* tensor;
    bool trainable;
    bool head;  // classification head, excluded from extractor scope
  };

  Model(ModelConfig config, int num_speakers, std::uint64_t seed)
      : config_(std::move(config)), num_speakers_(num_speakers), seed_(seed) {
    config_.validate();
    ECAPA_CHECK(num_speakers_ >= 1, "Model: need at least one speaker class");
    build_();
    Rng rng(seed_);
    for (auto& p : params_)
      if (p.trainable && p.init_bound > 0) {
        Rng r = rng.stream("init/" + p.name);
        *p.tensor = Tensor<Scalar>::uniform(p.tensor->shape(), r, -p.init_bound,
                                            p.init_bound);
      }
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  int num_speakers() const { return num_speakers_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> out;
    out.reserve(params_.size());
    for (auto& p : params_)
      if (p.trainable) out.push_back({p.name, p.tensor, true, p.head});
    return out;
  }

  // Running batchnorm statistics, for checkpoints.
  std::vector<ParamRef> buffers() {
    std::vector<ParamRef> out;
    for (auto& p : params_)
      if (!p.trainable) out.push_back({p.name, p.tensor, false, false});
    return out;
  }

  std::int64_t param_count(ParamScope scope) const {
    std::int64_t n = 0;
    for (const auto& p : params_)
      if (p.trainable && (scope == ParamScope::full || !p.head)) n += p.tensor->numel();
    return n;
  }

  void set_parameter_values(const std::vector<Tensor<Scalar>>& values) {
    std::size_t i = 0;
    for (auto& p : params_)
      if (p.trainable) {
        ECAPA_CHECK(i < values.size() && values[i].same_shape(*p.tensor),
                    "set_parameter_values: mismatch at " << p.name);
        *p.tensor = values[i++];
      }
    ECAPA_CHECK(i == values.size(), "set_parameter_values: extra values");
  }

  std::vector<Tensor<Scalar>> parameter_values() {
    std::vector<Tensor<Scalar>> out;
    for (auto& p : params_)
      if (p.trainable) out.push_back(*p.tensor);
    return out;
  }

  // Runs the extractor on a [B,input_dim,T] feature batch. Train mode uses
  // batch statistics (and updates the running ones); eval mode applies the
  // stored statistics and works for any T >= 1. The returned embedding is
  // the batch-normalized output of the final bottleneck layer, i.e. what
  // the classification head consumes.
  ModelPass<Scalar> run(Graph<Scalar>& g, const Tensor<Scalar>& features,
                        RunMode mode) {
    ECAPA_CHECK(features.ndim() == 3 && features.dim(1) == config_.input_dim,
                "Model::run: features must be [B," << config_.input_dim << ",T], got "
                    << shape_str(features.shape()));
    const bool train = mode == RunMode::train;

    ModelPass<Scalar> pass;
    std::vector<Var<Scalar>> vars;
    vars.reserve(params_.size());
    for (auto& p : params_) {
      if (!p.trainable) continue;
      vars.push_back(train ? g.param(*p.tensor) : g.input(*p.tensor));
    }
    pass.param_vars = vars;

    // Parameters bind in registry order; `next` must mirror build_() exactly.
    std::size_t cursor = 0;
    auto next = [&]() { return vars[cursor++]; };

    auto bind_bn = [&](BatchNormStats<Scalar>& stats) {
      BnVars<Scalar> bn;
      bn.gamma = next();
      bn.beta = next();
      bn.stats = &stats;
      return bn;
    };

    Var<Scalar> x = g.input(features);

    ConvVars<Scalar> stem{next(), next()};
    BnVars<Scalar> stem_bn = bind_bn(stem_bn_stats_);
    Var<Scalar> t0 = batchnorm1d(relu(conv1d(x, stem.w, stem.b, 1)),
                                 stem_bn.gamma, stem_bn.beta, train, stem_bn.stats);

    const auto& fl = config_.ablation;
    std::vector<Var<Scalar>> block_outs;
    Var<Scalar> prev = t0;
    Var<Scalar> summed = t0;
    for (std::size_t bi = 0; bi < config_.blocks.size(); ++bi) {
      SERes2BlockVars<Scalar> bp;
      bp.conv_in = {next(), next()};
      bp.bn1 = bind_bn(block_stats_[bi].bn1);
      bp.dilation = config_.blocks[bi].dilation;
      if (fl.res2_enabled) {
        Res2Vars<Scalar> r2;
        r2.scale = config_.res2_scale;
        r2.dilation = bp.dilation;
        for (int k = 1; k < config_.res2_scale; ++k)
          r2.kernels.push_back({next(), next()});
        bp.res2 = std::move(r2);
      } else {
        bp.plain = ConvVars<Scalar>{next(), next()};
      }
      bp.bn2 = bind_bn(block_stats_[bi].bn2);
      bp.conv_out = {next(), next()};
      bp.bn3 = bind_bn(block_stats_[bi].bn3);
      if (fl.se_enabled) bp.se = SEVars<Scalar>{next(), next(), next(), next()};

      Var<Scalar> skip{};
      if (fl.residual == ResidualKind::summed) skip = summed;
      else if (fl.residual == ResidualKind::standard) skip = prev;
      Var<Scalar> out = se_res2block(prev, skip, bp, train);
      block_outs.push_back(out);
      if (fl.residual == ResidualKind::summed) summed = add(summed, out);
      prev = out;
    }

    Var<Scalar> agg = fl.mfa_enabled ? concat_channels(block_outs) : block_outs.back();
    ConvVars<Scalar> mfa{next(), next()};
    Var<Scalar> feats = relu(conv1d(agg, mfa.w, mfa.b, 1));

    AttStatVars<Scalar> att;
    att.w = next();
    att.b = next();
    att.v = next();
    att.k_vec = next();
    att.context = fl.attention == AttentionKind::channel_context;
    att.temporal_only = fl.attention == AttentionKind::temporal_only;
    Var<Scalar> pooled = attentive_stats_pool(feats, att);

    BnVars<Scalar> pool_bn = bind_bn(pool_bn_stats_);
    pooled = batchnorm1d(pooled, pool_bn.gamma, pool_bn.beta, train, pool_bn.stats);

    Var<Scalar> embed_w = next();
    Var<Scalar> embed_b = next();
    Var<Scalar> emb = dense(pooled, embed_w, embed_b);
    BnVars<Scalar> emb_bn = bind_bn(embed_bn_stats_);
    pass.embedding =
        batchnorm1d(emb, emb_bn.gamma, emb_bn.beta, train, emb_bn.stats);

    pass.head_weight = next();  // consumed by the margin-softmax loss
    ECAPA_CHECK(cursor == vars.size(), "Model::run: parameter cursor out of sync");
    return pass;
  }

 private:
  struct Entry {
    std::string name;
    Tensor<Scalar>* tensor;
    bool trainable;
    bool head;
    double init_bound;  // uniform +-bound; 0 keeps the constructed value
  };

  struct BlockStats {
    BatchNormStats<Scalar> bn1, bn2, bn3;
  };

  void add_param_(const std::string& name, Tensor<Scalar>& slot, Shape shape,
                  double init_bound, bool head = false) {
    slot = Tensor<Scalar>(std::move(shape));
    params_.push_back({name, &slot, true, head, init_bound});
  }

  void add_bn_(const std::string& name, Tensor<Scalar>& gamma, Tensor<Scalar>& beta,
               BatchNormStats<Scalar>& stats, Index channels) {
    gamma = Tensor<Scalar>::constant({channels}, Scalar(1));
    params_.push_back({name + ".gamma", &gamma, true, false, 0.0});
    beta = Tensor<Scalar>::zeros({channels});
    params_.push_back({name + ".beta", &beta, true, false, 0.0});
    stats = BatchNormStats<Scalar>(channels);
    params_.push_back({name + ".running_mean", &stats.mean, false, false, 0.0});
    params_.push_back({name + ".running_var", &stats.var, false, false, 0.0});
  }

  void add_conv_(const std::string& name, Tensor<Scalar>& w, Tensor<Scalar>& b,
                 Index cout, Index cin, Index k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k));
    add_param_(name + ".weight", w, {cout, cin, k}, bound);
    add_param_(name + ".bias", b, {cout}, bound);
  }

  void build_() {
    const auto& c = config_;
    const auto& fl = c.ablation;
    const Index C = c.channels;

    add_conv_("stem", stem_w_, stem_b_, C, c.input_dim, c.stem_kernel);
    add_bn_("stem_bn", stem_gamma_, stem_beta_, stem_bn_stats_, C);

    const Index width = C / c.res2_scale;
    block_tensors_.resize(c.blocks.size());
    block_stats_.resize(c.blocks.size());
    for (std::size_t bi = 0; bi < c.blocks.size(); ++bi) {
      auto& bt = block_tensors_[bi];
      const std::string base = "block" + std::to_string(bi + 1);
      add_conv_(base + ".conv_in", bt.conv_in_w, bt.conv_in_b, C, C, 1);
      add_bn_(base + ".bn1", bt.bn1_gamma, bt.bn1_beta, block_stats_[bi].bn1, C);
      if (fl.res2_enabled) {
        bt.res2_w.resize(static_cast<std::size_t>(c.res2_scale - 1));
        bt.res2_b.resize(static_cast<std::size_t>(c.res2_scale - 1));
        for (int k = 1; k < c.res2_scale; ++k)
          add_conv_(base + ".res2.k" + std::to_string(k + 1),
                    bt.res2_w[static_cast<std::size_t>(k - 1)],
                    bt.res2_b[static_cast<std::size_t>(k - 1)], width, width,
                    c.blocks[bi].kernel);
      } else {
        add_conv_(base + ".conv", bt.plain_w, bt.plain_b, C, C, c.blocks[bi].kernel);
      }
      add_bn_(base + ".bn2", bt.bn2_gamma, bt.bn2_beta, block_stats_[bi].bn2, C);
      add_conv_(base + ".conv_out", bt.conv_out_w, bt.conv_out_b, C, C, 1);
      add_bn_(base + ".bn3", bt.bn3_gamma, bt.bn3_beta, block_stats_[bi].bn3, C);
      if (fl.se_enabled) {
        const Index R = c.se_bottleneck;
        const double b1 = 1.0 / std::sqrt(static_cast<double>(C));
        const double b2 = 1.0 / std::sqrt(static_cast<double>(R));
        add_param_(base + ".se.w1", bt.se_w1, {R, C}, b1);
        add_param_(base + ".se.b1", bt.se_b1, {R}, b1);
        add_param_(base + ".se.w2", bt.se_w2, {C, R}, b2);
        add_param_(base + ".se.b2", bt.se_b2, {C}, b2);
      }
    }

    const Index agg_in = fl.mfa_enabled ? C * static_cast<Index>(c.blocks.size()) : C;
    add_conv_("mfa", mfa_w_, mfa_b_, c.mfa_channels, agg_in, 1);

    const Index att_in = fl.attention == AttentionKind::channel_context
                             ? 3 * c.mfa_channels
                             : c.mfa_channels;
    const Index att_out =
        fl.attention == AttentionKind::temporal_only ? 1 : c.mfa_channels;
    const Index R = c.att_bottleneck;
    add_conv_("pool.att.pre", att_w_, att_b_, R, att_in, 1);
    add_conv_("pool.att.score", att_v_, att_k_, att_out, R, 1);
    add_bn_("pool_bn", pool_gamma_, pool_beta_, pool_bn_stats_, 2 * c.mfa_channels);

    const double eb = 1.0 / std::sqrt(static_cast<double>(2 * c.mfa_channels));
    add_param_("embed.weight", embed_w_, {c.embed_dim, 2 * c.mfa_channels}, eb);
    add_param_("embed.bias", embed_b_, {c.embed_dim}, eb);
    add_bn_("embed_bn", embed_gamma_, embed_beta_, embed_bn_stats_, c.embed_dim);

    const double hb = 1.0 / std::sqrt(static_cast<double>(c.embed_dim));
    add_param_("head.weight", head_w_, {num_speakers_, c.embed_dim}, hb,
               /*head=*/true);
  }

  struct BlockTensors {
    Tensor<Scalar> conv_in_w, conv_in_b;
    Tensor<Scalar> bn1_gamma, bn1_beta;
    std::vector<Tensor<Scalar>> res2_w, res2_b;
    Tensor<Scalar> plain_w, plain_b;
    Tensor<Scalar> bn2_gamma, bn2_beta;
    Tensor<Scalar> conv_out_w, conv_out_b;
    Tensor<Scalar> bn3_gamma, bn3_beta;
    Tensor<Scalar> se_w1, se_b1, se_w2, se_b2;
  };

  ModelConfig config_;
  int num_speakers_;
  std::uint64_t seed_;

  Tensor<Scalar> stem_w_, stem_b_, stem_gamma_, stem_beta_;
  BatchNormStats<Scalar> stem_bn_stats_;
  std::vector<BlockTensors> block_tensors_;
  std::vector<BlockStats> block_stats_;
  Tensor<Scalar> mfa_w_, mfa_b_;
  Tensor<Scalar> att_w_, att_b_, att_v_, att_k_;
  Tensor<Scalar> pool_gamma_, pool_beta_;
  BatchNormStats<Scalar> pool_bn_stats_;
  Tensor<Scalar> embed_w_, embed_b_, embed_gamma_, embed_beta_;
  BatchNormStats<Scalar> embed_bn_stats_;
  Tensor<Scalar> head_w_;

  std::vector<Entry> params_;
};

}  // namespace ecapa

#endif  // ECAPA_MODEL_HPP_
