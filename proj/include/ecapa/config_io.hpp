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

#ifndef ECAPA_CONFIG_IO_HPP_
#define ECAPA_CONFIG_IO_HPP_

#include <fstream>
#include <string>

#include "ecapa/checkpoint.hpp"
#include "ecapa/trainer.hpp"

namespace ecapa {

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["crop_frames"] = c.crop_frames;
  j["aam"] = {{"margin", c.aam.margin}, {"scale", c.aam.scale}};
  j["schedule"] = {{"lr_min", c.schedule.lr_min},
                   {"lr_max", c.schedule.lr_max},
                   {"cycle_len", c.schedule.cycle_len},
                   {"stepsize_mode", c.schedule.stepsize_mode}};
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}};
  j["weight_decay"] = c.weight_decay;
  j["head_weight_decay"] = c.head_weight_decay;
  j["spec_augment"] = c.use_spec_augment;
  j["spec_augment_cfg"] = {{"max_time_mask", c.spec_augment_cfg.max_time_mask},
                           {"max_freq_mask", c.spec_augment_cfg.max_freq_mask}};
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.crop_frames = j.value("crop_frames", c.crop_frames);
  if (j.contains("aam")) {
    c.aam.margin = j["aam"].value("margin", c.aam.margin);
    c.aam.scale = j["aam"].value("scale", c.aam.scale);
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    c.schedule.lr_min = s.value("lr_min", c.schedule.lr_min);
    c.schedule.lr_max = s.value("lr_max", c.schedule.lr_max);
    c.schedule.cycle_len = s.value("cycle_len", c.schedule.cycle_len);
    c.schedule.stepsize_mode = s.value("stepsize_mode", c.schedule.stepsize_mode);
  }
  if (j.contains("adam")) {
    const auto& a = j["adam"];
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
  }
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.head_weight_decay = j.value("head_weight_decay", c.head_weight_decay);
  c.use_spec_augment = j.value("spec_augment", c.use_spec_augment);
  if (j.contains("spec_augment_cfg")) {
    const auto& s = j["spec_augment_cfg"];
    c.spec_augment_cfg.max_time_mask = s.value("max_time_mask", c.spec_augment_cfg.max_time_mask);
    c.spec_augment_cfg.max_freq_mask = s.value("max_freq_mask", c.spec_augment_cfg.max_freq_mask);
  }
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

// Full training run description as stored on disk: the model section plus
// the trainer section above. The "paper" preset keeps the published recipe
// (batch 128, 130k-iteration cycles, 4 cycles); the desk preset is sized
// for the synthetic corpus.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::string corpus;  // corpus directory; CLI flags can override
};

inline RunConfig desk_run_config() {
  RunConfig rc;
  rc.model = ModelConfig::desk();
  rc.train = TrainConfig{};  // 2000 iterations, batch 32, cycle 1000
  return rc;
}

inline RunConfig paper_run_config(int channels) {
  RunConfig rc;
  rc.model = ModelConfig::paper(channels);
  rc.train.batch_size = 128;
  rc.train.schedule.cycle_len = 130000;
  rc.train.iterations = 4L * 130000;
  return rc;
}

inline nlohmann::json run_config_to_json(const RunConfig& rc) {
  nlohmann::json j;
  j["model"] = config_to_json(rc.model);
  j["train"] = train_config_to_json(rc.train);
  if (!rc.corpus.empty()) j["corpus"] = rc.corpus;
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig rc;
  if (j.contains("model")) rc.model = config_from_json(j["model"]);
  if (j.contains("train")) rc.train = train_config_from_json(j["train"]);
  rc.corpus = j.value("corpus", "");
  return rc;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  ECAPA_CHECK(in.good(), "load_json_file: cannot open " << path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("load_json_file: bad JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace ecapa

#endif  // ECAPA_CONFIG_IO_HPP_
