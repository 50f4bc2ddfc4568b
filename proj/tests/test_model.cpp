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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "ecapa/checkpoint.hpp"
#include "ecapa/loss.hpp"
#include "ecapa/model.hpp"
#include "ecapa/trainer.hpp"

using namespace ecapa;

namespace {

// Closed-form parameter arithmetic, written out independently of the
// registry: conv = Cout*Cin*k + Cout, dense likewise, BN = 2C, SE and
// attention from their bottleneck shapes.
std::int64_t extractor_params_oracle(const ModelConfig& c) {
  const std::int64_t C = c.channels;
  const std::int64_t w = C / c.res2_scale;
  const std::int64_t mfa = c.mfa_channels;
  std::int64_t total = 0;
  total += C * c.input_dim * c.stem_kernel + C;  // stem conv
  total += 2 * C;                                // stem BN
  for (const auto& blk : c.blocks) {
    total += C * C + C + 2 * C;  // entry 1x1 conv + BN
    if (c.ablation.res2_enabled)
      total += (c.res2_scale - 1) * (w * w * blk.kernel + w);
    else
      total += C * C * blk.kernel + C;
    total += 2 * C;              // BN after the middle stage
    total += C * C + C + 2 * C;  // exit 1x1 conv + BN
    if (c.ablation.se_enabled) {
      const std::int64_t R = c.se_bottleneck;
      total += R * C + R + C * R + C;
    }
  }
  const std::int64_t agg_in =
      c.ablation.mfa_enabled ? C * static_cast<std::int64_t>(c.blocks.size()) : C;
  total += mfa * agg_in + mfa;  // aggregation 1x1 conv
  const std::int64_t att_in =
      c.ablation.attention == AttentionKind::channel_context ? 3 * mfa : mfa;
  const std::int64_t att_out =
      c.ablation.attention == AttentionKind::temporal_only ? 1 : mfa;
  const std::int64_t R = c.att_bottleneck;
  total += R * att_in + R;        // shared projection
  total += att_out * R + att_out; // score head
  total += 2 * (2 * mfa);         // post-pooling BN
  total += c.embed_dim * 2 * mfa + c.embed_dim;  // bottleneck dense
  total += 2 * c.embed_dim;                      // embedding BN
  return total;
}

}  // namespace

TEST_CASE("extractor parameter counts hit the published totals") {
  Model<float> m512(ModelConfig::paper(512), 100, 1);
  Model<float> m1024(ModelConfig::paper(1024), 100, 1);
  const auto c512 = m512.param_count(ParamScope::extractor);
  const auto c1024 = m1024.param_count(ParamScope::extractor);
  CHECK(c512 == extractor_params_oracle(ModelConfig::paper(512)));
  CHECK(c1024 == extractor_params_oracle(ModelConfig::paper(1024)));
  CHECK(std::fabs(static_cast<double>(c512) - 6.2e6) / 6.2e6 < 0.03);
  CHECK(std::fabs(static_cast<double>(c1024) - 14.7e6) / 14.7e6 < 0.03);
}

TEST_CASE("head adds exactly embed_dim * num_speakers weights, no bias") {
  Model<float> m(ModelConfig::paper(512), 873, 1);
  CHECK(m.param_count(ParamScope::full) - m.param_count(ParamScope::extractor) ==
        192 * 873);
}

TEST_CASE("same seed builds bitwise-identical parameters") {
  Model<float> a(ModelConfig::desk(), 8, 99);
  Model<float> b(ModelConfig::desk(), 8, 99);
  Model<float> c(ModelConfig::desk(), 8, 100);
  auto pa = a.parameter_values(), pb = b.parameter_values(), pc = c.parameter_values();
  bool identical = true, different = false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (Index e = 0; e < pa[i].numel(); ++e) {
      identical = identical && pa[i](e) == pb[i](e);
      different = different || pa[i](e) != pc[i](e);
    }
  CHECK(identical);
  CHECK(different);
}

TEST_CASE("ablation variants flip exactly one config field and are idempotent") {
  const ModelConfig def = ModelConfig::paper(512);
  auto count_diffs = [&](const ModelConfig& v) {
    int diffs = 0;
    if (v.ablation.attention != def.ablation.attention) ++diffs;
    if (v.ablation.se_enabled != def.ablation.se_enabled) ++diffs;
    if (v.ablation.res2_enabled != def.ablation.res2_enabled) ++diffs;
    if (v.ablation.mfa_enabled != def.ablation.mfa_enabled) ++diffs;
    if (v.ablation.residual != def.ablation.residual) ++diffs;
    return diffs;
  };
  for (auto v : {AblationVariant::A1, AblationVariant::A2, AblationVariant::B1,
                 AblationVariant::B2, AblationVariant::C1, AblationVariant::C2,
                 AblationVariant::C3}) {
    const ModelConfig once = apply_ablation(def, v);
    CHECK(count_diffs(once) == 1);
    const ModelConfig twice = apply_ablation(once, v);
    CHECK(twice.ablation == once.ablation);
  }
  CHECK(apply_ablation(def, AblationVariant::B2).ablation.res2_enabled == false);
  CHECK(apply_ablation(def, AblationVariant::C3).ablation.residual ==
        ResidualKind::standard);
}

TEST_CASE("removing the SE blocks drops the closed-form parameter delta") {
  const ModelConfig def = ModelConfig::paper(512);
  Model<float> base(def, 10, 1);
  Model<float> nose(apply_ablation(def, AblationVariant::B1), 10, 1);
  const std::int64_t C = 512, R = 128;
  CHECK(base.param_count(ParamScope::extractor) -
            nose.param_count(ParamScope::extractor) ==
        3 * (2 * C * R + R + C));
}

TEST_CASE("ablation parameter ordering: B1 below default, B2 above") {
  const ModelConfig def = ModelConfig::paper(512);
  Model<float> base(def, 10, 1);
  Model<float> b1(apply_ablation(def, AblationVariant::B1), 10, 1);
  Model<float> b2(apply_ablation(def, AblationVariant::B2), 10, 1);
  CHECK(b1.param_count(ParamScope::extractor) < base.param_count(ParamScope::extractor));
  CHECK(b2.param_count(ParamScope::extractor) > base.param_count(ParamScope::extractor));
  // every variant's count equals its own closed form
  for (auto v : {AblationVariant::A1, AblationVariant::A2, AblationVariant::B1,
                 AblationVariant::B2, AblationVariant::C1, AblationVariant::C2,
                 AblationVariant::C3}) {
    const ModelConfig cfg = apply_ablation(def, v);
    Model<float> m(cfg, 10, 1);
    CHECK(m.param_count(ParamScope::extractor) == extractor_params_oracle(cfg));
  }
}

TEST_CASE("embeddings are always embed_dim for any input length") {
  Model<float> m(ModelConfig::tiny(), 4, 5);
  Rng rng(1);
  for (const Index T : {Index(50), Index(200), Index(350), Index(1000)}) {
    Graph<float> g;
    auto pass = m.run(g, Tensor<float>::randn({1, 80, T}, rng), RunMode::eval);
    CHECK(pass.embedding.value().dim(1) == m.config().embed_dim);
    CHECK(pass.embedding.value().all_finite());
  }
  Graph<float> g;
  CHECK_THROWS_AS(m.run(g, Tensor<float>::randn({1, 79, 50}, rng), RunMode::eval),
                  std::invalid_argument);
}

TEST_CASE("zero input features still produce a finite embedding") {
  Model<float> m(ModelConfig::tiny(), 4, 5);
  Graph<float> g;
  auto pass = m.run(g, Tensor<float>::zeros({2, 80, 60}), RunMode::train);
  CHECK(pass.embedding.value().all_finite());
}

TEST_CASE("every trainable parameter receives gradient on a random batch") {
  for (auto residual : {ResidualKind::summed, ResidualKind::standard, ResidualKind::none}) {
    ModelConfig cfg = ModelConfig::tiny();
    cfg.ablation.residual = residual;
    Model<double> m(cfg, 4, 7);
    Rng rng(13);
    Graph<double> g;
    auto pass = m.run(g, Tensor<double>::randn({3, 80, 16}, rng), RunMode::train);
    auto loss = aam_softmax_loss(pass.embedding, pass.head_weight,
                                 std::vector<int>{0, 2, 1}, AamOptions{});
    g.backward(loss);
    const auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& grad = pass.param_vars[i].grad();
      double norm = 0;
      for (Index e = 0; e < grad.numel(); ++e) norm += std::fabs(grad(e));
      INFO(params[i].name, " residual mode ", static_cast<int>(residual));
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("residual modes change the forward value as specified") {
  ModelConfig cfg = ModelConfig::tiny();
  Rng rng(3);
  const auto feats = Tensor<double>::randn({1, 80, 12}, rng);
  auto embed_with = [&](ResidualKind k) {
    ModelConfig c2 = cfg;
    c2.ablation.residual = k;
    Model<double> m(c2, 4, 11);
    Graph<double> g;
    return m.run(g, feats, RunMode::eval).embedding.value();
  };
  const auto summed = embed_with(ResidualKind::summed);
  const auto standard = embed_with(ResidualKind::standard);
  const auto none = embed_with(ResidualKind::none);
  bool summed_vs_standard = false, standard_vs_none = false;
  for (Index i = 0; i < summed.numel(); ++i) {
    summed_vs_standard = summed_vs_standard || summed(i) != standard(i);
    standard_vs_none = standard_vs_none || standard(i) != none(i);
  }
  CHECK(summed_vs_standard);
  CHECK(standard_vs_none);
}

TEST_CASE("checkpoint round-trips to bitwise-identical embeddings") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ecapa_ckpt_test";
  fs::create_directories(dir);
  const std::string stem = (dir / "model").string();

  Model<float> m(ModelConfig::tiny(), 6, 21);
  save_archive(stem, checkpoint_from_model(m));
  auto loaded = model_from_checkpoint<float>(load_archive(stem));

  Rng rng(2);
  const auto feats = Tensor<float>::randn({80, 120}, rng);
  const auto e1 = extract_embedding(m, feats);
  const auto e2 = extract_embedding(*loaded, feats);
  for (Index i = 0; i < e1.numel(); ++i) CHECK(e1(i) == e2(i));

  // config and provenance survive
  CHECK(loaded->config().channels == 16);
  CHECK(loaded->num_speakers() == 6);
  CHECK(loaded->seed() == 21);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint mismatches are rejected") {
  Model<float> m(ModelConfig::tiny(), 6, 21);
  Archive a = checkpoint_from_model(m);

  Archive missing = a;
  missing.tensors.erase(missing.tensors.begin());
  CHECK_THROWS_AS(model_from_checkpoint<float>(missing), std::invalid_argument);

  Archive wrong_shape = a;
  wrong_shape.tensors[0].shape[0] += 1;
  wrong_shape.tensors[0].data.resize(
      static_cast<std::size_t>(numel_of(wrong_shape.tensors[0].shape)));
  CHECK_THROWS_AS(model_from_checkpoint<float>(wrong_shape), std::invalid_argument);

  Archive extra = a;
  ArchiveTensor t;
  t.name = "orphan";
  t.shape = {2};
  t.data = {1.f, 2.f};
  extra.tensors.push_back(t);
  CHECK_THROWS_AS(model_from_checkpoint<float>(extra), std::invalid_argument);

  Archive not_ckpt = a;
  not_ckpt.kind = "embeddings";
  CHECK_THROWS_AS(model_from_checkpoint<float>(not_ckpt), std::invalid_argument);
}

TEST_CASE("config validation rejects invalid combinations") {
  ModelConfig bad = ModelConfig::paper(512);
  bad.channels = 510;  // not divisible by scale 8
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ModelConfig bad2 = ModelConfig::desk();
  bad2.se_bottleneck = 64;  // must stay below C=64
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
  ModelConfig bad3 = ModelConfig::paper(512);
  bad3.blocks = {{3, 2}, {3, 2}, {3, 4}};  // dilations must increase
  CHECK_THROWS_AS(bad3.validate(), std::invalid_argument);
}
