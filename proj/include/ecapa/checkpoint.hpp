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

#ifndef ECAPA_CHECKPOINT_HPP_
#define ECAPA_CHECKPOINT_HPP_

#include <memory>
#include <string>

#include "ecapa/archive.hpp"
#include "ecapa/model.hpp"

namespace ecapa {

inline nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["input_dim"] = c.input_dim;
  j["channels"] = c.channels;
  j["res2_scale"] = c.res2_scale;
  j["se_bottleneck"] = c.se_bottleneck;
  j["att_bottleneck"] = c.att_bottleneck;
  j["mfa_channels"] = c.mfa_channels;
  j["embed_dim"] = c.embed_dim;
  j["stem_kernel"] = c.stem_kernel;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.blocks) blocks.push_back({{"kernel", b.kernel}, {"dilation", b.dilation}});
  j["blocks"] = blocks;
  switch (c.ablation.attention) {
    case AttentionKind::channel_context: j["attention"] = "channel_context"; break;
    case AttentionKind::channel_no_context: j["attention"] = "channel_no_context"; break;
    case AttentionKind::temporal_only: j["attention"] = "temporal_only"; break;
  }
  j["se_enabled"] = c.ablation.se_enabled;
  j["res2_enabled"] = c.ablation.res2_enabled;
  j["mfa_enabled"] = c.ablation.mfa_enabled;
  switch (c.ablation.residual) {
    case ResidualKind::summed: j["residual"] = "summed"; break;
    case ResidualKind::standard: j["residual"] = "standard"; break;
    case ResidualKind::none: j["residual"] = "none"; break;
  }
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_dim = j.value("input_dim", c.input_dim);
  c.channels = j.value("channels", c.channels);
  c.res2_scale = j.value("res2_scale", c.res2_scale);
  c.se_bottleneck = j.value("se_bottleneck", c.se_bottleneck);
  c.att_bottleneck = j.value("att_bottleneck", c.att_bottleneck);
  c.mfa_channels = j.value("mfa_channels", c.mfa_channels);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.stem_kernel = j.value("stem_kernel", c.stem_kernel);
  if (j.contains("blocks")) {
    c.blocks.clear();
    for (const auto& b : j.at("blocks"))
      c.blocks.push_back({b.at("kernel").get<int>(), b.at("dilation").get<int>()});
  }
  const std::string att = j.value("attention", "channel_context");
  if (att == "channel_context") c.ablation.attention = AttentionKind::channel_context;
  else if (att == "channel_no_context") c.ablation.attention = AttentionKind::channel_no_context;
  else if (att == "temporal_only") c.ablation.attention = AttentionKind::temporal_only;
  else throw std::invalid_argument("config_from_json: unknown attention kind " + att);
  c.ablation.se_enabled = j.value("se_enabled", true);
  c.ablation.res2_enabled = j.value("res2_enabled", true);
  c.ablation.mfa_enabled = j.value("mfa_enabled", true);
  const std::string res = j.value("residual", "summed");
  if (res == "summed") c.ablation.residual = ResidualKind::summed;
  else if (res == "standard") c.ablation.residual = ResidualKind::standard;
  else if (res == "none") c.ablation.residual = ResidualKind::none;
  else throw std::invalid_argument("config_from_json: unknown residual kind " + res);
  c.validate();
  return c;
}

// Checkpoint = archive with every trainable parameter and batchnorm buffer,
// plus the config and seed needed to rebuild the identical model.
template <typename Scalar>
Archive checkpoint_from_model(Model<Scalar>& model,
                              nlohmann::json run = nlohmann::json::object()) {
  Archive a;
  a.kind = "checkpoint";
  a.meta["config"] = config_to_json(model.config());
  a.meta["num_speakers"] = model.num_speakers();
  a.meta["rng_seed"] = model.seed();
  a.meta["run"] = std::move(run);
  for (const auto& p : model.parameters())
    a.tensors.push_back(to_archive_tensor(p.name, *p.tensor));
  for (const auto& b : model.buffers())
    a.tensors.push_back(to_archive_tensor(b.name, *b.tensor));
  return a;
}

template <typename Scalar>
std::unique_ptr<Model<Scalar>> model_from_checkpoint(const Archive& a) {
  ECAPA_CHECK(a.kind == "checkpoint",
              "model_from_checkpoint: archive kind '" << a.kind << "' is not a checkpoint");
  const ModelConfig cfg = config_from_json(a.meta.at("config"));
  const int speakers = a.meta.at("num_speakers").get<int>();
  const auto seed = a.meta.at("rng_seed").get<std::uint64_t>();
  auto model = std::make_unique<Model<Scalar>>(cfg, speakers, seed);

  std::size_t used = 0;
  auto restore = [&](const typename Model<Scalar>::ParamRef& ref) {
    const ArchiveTensor* at = a.find(ref.name);
    ECAPA_CHECK(at != nullptr, "model_from_checkpoint: missing tensor " << ref.name);
    ECAPA_CHECK(at->shape == ref.tensor->shape(),
                "model_from_checkpoint: shape mismatch for "
                    << ref.name << ": checkpoint " << shape_str(at->shape)
                    << " vs model " << shape_str(ref.tensor->shape()));
    *ref.tensor = from_archive_tensor<Scalar>(*at);
    ++used;
  };
  for (const auto& p : model->parameters()) restore(p);
  for (const auto& b : model->buffers()) restore(b);
  ECAPA_CHECK(used == a.tensors.size(),
              "model_from_checkpoint: archive has " << a.tensors.size()
                  << " tensors but the model consumed " << used);
  return model;
}

}  // namespace ecapa

#endif  // ECAPA_CHECKPOINT_HPP_
