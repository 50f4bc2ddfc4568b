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

#include <filesystem>
#include <fstream>

#include "ecapa/config_io.hpp"
#include "ecapa/gradsuite.hpp"
#include "ecapa/scoring.hpp"
#include "ecapa/synth.hpp"
#include "ecapa/trainer.hpp"

using namespace ecapa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synthesized corpora are deterministic and correctly sized") {
  TempDir a("ecapa_corpus_a"), b("ecapa_corpus_b");
  SynthSpec spec;
  spec.num_speakers = 4;
  spec.utts_per_speaker = 3;
  spec.train_per_speaker = 2;
  spec.min_duration_s = 0.4;
  spec.max_duration_s = 0.6;
  spec.seed = 42;
  write_corpus(spec, a.path.string(), "test");
  write_corpus(spec, b.path.string(), "test");

  int wavs = 0;
  for (const auto& entry : fs::directory_iterator(a.path / "wav")) {
    ++wavs;
    const auto rel = entry.path().filename();
    CHECK(slurp(entry.path()) == slurp(b.path / "wav" / rel));
  }
  CHECK(wavs == 12);
  for (const char* f : {"train.scp", "eval.scp", "utt2spk", "trials.txt"})
    CHECK(slurp(a.path / f) == slurp(b.path / f));

  CHECK(count_lines(a.path / "train.scp") == 8);
  CHECK(count_lines(a.path / "eval.scp") == 4);
  CHECK(count_lines(a.path / "utt2spk") == 12);
  // 4 eval utterances -> C(4,2) = 6 trials, one target pair per speaker pair
  CHECK(count_lines(a.path / "trials.txt") == 6);

  const auto trials = read_trials((a.path / "trials.txt").string());
  int targets = 0;
  for (const auto& t : trials) targets += t.target ? 1 : 0;
  CHECK(targets == 0);  // one eval utterance per speaker leaves no target pairs
}

TEST_CASE("trial labels mark same-speaker pairs as targets") {
  TempDir dir("ecapa_corpus_labels");
  SynthSpec spec;
  spec.num_speakers = 3;
  spec.utts_per_speaker = 4;
  spec.train_per_speaker = 2;
  spec.min_duration_s = 0.4;
  spec.max_duration_s = 0.5;
  spec.seed = 7;
  write_corpus(spec, dir.path.string(), "test");
  const auto trials = read_trials((dir.path / "trials.txt").string());
  // 6 eval utts, 2 per speaker: 15 pairs, 3 targets
  CHECK(trials.size() == 15);
  int targets = 0;
  for (const auto& t : trials) {
    const bool same = t.enroll.substr(0, 6) == t.test.substr(0, 6);
    CHECK(t.target == same);
    targets += t.target ? 1 : 0;
  }
  CHECK(targets == 3);
}

TEST_CASE("speakers with forced-identical parameters are indistinguishable") {
  // Cross-trials between two clones should score like same-speaker trials:
  // EER over {target = within-clone-pair, nontarget = cross-clone} near 0.5.
  Rng rng(31);
  Rng vr = rng.stream("voice");
  const SpeakerVoice voice = sample_voice(vr);
  MfccPlan plan;
  auto mean_embedding = [&](int utt, const char* tag) {
    Rng ur = rng.stream(std::string("utt/") + tag + std::to_string(utt));
    const Waveform w = synth_utterance(voice, 1.0, 16000, 0.3, 15.0, ur);
    const Tensor<double> f = plan.mfcc(w);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(f.dim(0));
    for (Index c = 0; c < f.dim(0); ++c)
      for (Index t = 0; t < f.dim(1); ++t) e[c] += f(c, t);
    return (e / static_cast<double>(f.dim(1))).eval();
  };
  std::vector<Eigen::VectorXd> spk_a, spk_b;
  for (int u = 0; u < 6; ++u) {
    spk_a.push_back(mean_embedding(u, "a"));
    spk_b.push_back(mean_embedding(u, "b"));
  }
  std::vector<double> targets, nontargets;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      targets.push_back(cosine_score(spk_a[static_cast<std::size_t>(i)],
                                     spk_a[static_cast<std::size_t>(j)]));
      targets.push_back(cosine_score(spk_b[static_cast<std::size_t>(i)],
                                     spk_b[static_cast<std::size_t>(j)]));
    }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      nontargets.push_back(cosine_score(spk_a[static_cast<std::size_t>(i)],
                                        spk_b[static_cast<std::size_t>(j)]));
  const double e = eer(targets, nontargets).eer;
  CHECK(e > 0.25);
  CHECK(e < 0.75);
}

TEST_CASE("load_corpus resolves paths, labels and features") {
  TempDir dir("ecapa_corpus_load");
  SynthSpec spec;
  spec.num_speakers = 3;
  spec.utts_per_speaker = 2;
  spec.train_per_speaker = 2;
  spec.min_duration_s = 0.5;
  spec.max_duration_s = 0.6;
  spec.seed = 5;
  write_corpus(spec, dir.path.string(), "test");
  const Corpus corpus = load_corpus((dir.path / "train.scp").string(),
                                    (dir.path / "utt2spk").string());
  CHECK(corpus.features.size() == 6);
  CHECK(corpus.speakers.size() == 3);
  for (const auto& f : corpus.features) {
    CHECK(f.dim(0) == 80);
    CHECK(f.dim(1) >= 48);
  }
  for (int label : corpus.labels) {
    CHECK(label >= 0);
    CHECK(label < 3);
  }
  CHECK_THROWS_AS(load_corpus((dir.path / "nope.scp").string(),
                              (dir.path / "utt2spk").string()),
                  std::invalid_argument);
}

TEST_CASE("every ablation variant trains without error") {
  Rng rng(3);
  MfccPlan plan;
  Corpus corpus;
  corpus.speakers = {"s0", "s1"};
  for (int s = 0; s < 2; ++s) {
    Rng vr = rng.stream("v" + std::to_string(s));
    const SpeakerVoice voice = sample_voice(vr);
    for (int u = 0; u < 3; ++u) {
      Rng ur = rng.stream("u" + std::to_string(s) + "_" + std::to_string(u));
      corpus.utt_ids.push_back("x");
      corpus.labels.push_back(s);
      corpus.features.push_back(
          plan.mfcc(synth_utterance(voice, 0.8, 16000, 0.3, 20.0, ur)).cast<float>());
    }
  }
  TrainConfig cfg;
  cfg.iterations = 6;
  cfg.batch_size = 4;
  cfg.crop_frames = 60;
  std::vector<ModelConfig> configs = {ModelConfig::tiny()};
  for (auto v : {AblationVariant::A1, AblationVariant::A2, AblationVariant::B1,
                 AblationVariant::B2, AblationVariant::C1, AblationVariant::C2,
                 AblationVariant::C3})
    configs.push_back(apply_ablation(ModelConfig::tiny(), v));
  for (const auto& mc : configs) {
    Model<float> model(mc, 2, 17);
    const FitResult res = fit(model, corpus, cfg);
    for (const auto& row : res.trace) CHECK(std::isfinite(row.loss));
  }
}

TEST_CASE("a corrupted analytic gradient is flagged by the checker") {
  Rng rng(23);
  std::vector<Tensor<double>> params = {Tensor<double>::randn({2, 3}, rng)};
  auto build = [](Graph<double>& g, const std::vector<Var<double>>& v) {
    return sum(sigmoid(v[0]));
  };
  // honest gradients pass
  CHECK(check_gradients(params, build).passed(1e-4));
  // tampered gradients fail
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> g;
    std::vector<Var<double>> vars;
    for (const auto& p : params) vars.push_back(g.param(p));
    auto loss = build(g, vars);
    g.backward(loss);
    analytic.push_back(vars[0].grad());
  }
  analytic[0](3) += 0.5;
  const auto res = compare_gradients(params, build, analytic);
  CHECK_FALSE(res.passed(1e-4));
  CHECK(res.worst_elem == 3);
}

TEST_CASE("run configs round-trip through JSON") {
  RunConfig rc = desk_run_config();
  rc.model = apply_ablation(rc.model, AblationVariant::B2);
  rc.train.iterations = 321;
  rc.train.aam.margin = 0.25;
  rc.train.schedule.cycle_len = 77;
  rc.train.seed = 99;
  const RunConfig back = run_config_from_json(run_config_to_json(rc));
  CHECK(back.model.channels == rc.model.channels);
  CHECK(back.model.ablation.res2_enabled == false);
  CHECK(back.train.iterations == 321);
  CHECK(back.train.aam.margin == doctest::Approx(0.25));
  CHECK(back.train.schedule.cycle_len == 77);
  CHECK(back.train.seed == 99);

  const ModelConfig mc = config_from_json(config_to_json(ModelConfig::paper(1024)));
  CHECK(mc.channels == 1024);
  CHECK(mc.mfa_channels == 1536);
}

TEST_CASE("archives preserve tensors and reject corrupted manifests") {
  TempDir dir("ecapa_archive_test");
  Archive a;
  a.kind = "features";
  a.meta["note"] = 1;
  Rng rng(3);
  a.tensors.push_back(to_archive_tensor("x", Tensor<float>::randn({3, 4}, rng)));
  a.tensors.push_back(to_archive_tensor("y", Tensor<float>::randn({7}, rng)));
  const std::string stem = (dir.path / "arch").string();
  save_archive(stem, a);
  const Archive b = load_archive(stem);
  CHECK(b.kind == "features");
  REQUIRE(b.tensors.size() == 2);
  CHECK(b.find("y") != nullptr);
  CHECK(b.find("z") == nullptr);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(b.tensors[i].name == a.tensors[i].name);
    CHECK(b.tensors[i].shape == a.tensors[i].shape);
    CHECK(b.tensors[i].data == a.tensors[i].data);
  }
  CHECK_THROWS_AS(load_archive((dir.path / "missing").string()), std::invalid_argument);

  std::ofstream bad(dir.path / "bad.json");
  bad << "{\"format\": \"something-else\"}";
  bad.close();
  std::ofstream(dir.path / "bad.bin").put(0);
  CHECK_THROWS_AS(load_archive((dir.path / "bad").string()), std::invalid_argument);
}
