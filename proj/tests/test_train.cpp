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

#include <cmath>

#include "ecapa/loss.hpp"
#include "ecapa/optim.hpp"
#include "ecapa/synth.hpp"
#include "ecapa/trainer.hpp"

using namespace ecapa;

namespace {

// Plain scaled-softmax cross-entropy, written independently of the loss op.
double scaled_softmax_ce(const Eigen::MatrixXd& emb, const Eigen::MatrixXd& w,
                         const std::vector<int>& labels, double scale) {
  double total = 0;
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    Eigen::VectorXd e = emb.row(i).transpose();
    e /= e.norm();
    Eigen::VectorXd logits(w.rows());
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      Eigen::VectorXd wr = w.row(j).transpose();
      double c = e.dot(wr / wr.norm());
      c = std::min(std::max(c, -1.0 + 1e-7), 1.0 - 1e-7);
      logits[j] = scale * c;
    }
    const double mx = logits.maxCoeff();
    double denom = 0;
    for (Eigen::Index j = 0; j < w.rows(); ++j) denom += std::exp(logits[j] - mx);
    total += std::log(denom) - (logits[labels[static_cast<std::size_t>(i)]] - mx);
  }
  return total / static_cast<double>(emb.rows());
}

double loss_value(const Tensor<double>& emb, const Tensor<double>& w,
                  const std::vector<int>& labels, const AamOptions& opt) {
  Graph<double> g;
  return aam_softmax_loss(g.input(emb), g.input(w), labels, opt).value()(0);
}

Corpus tiny_synth_corpus(int speakers, int utts, std::uint64_t seed) {
  Rng root(seed);
  MfccPlan plan;
  Corpus corpus;
  for (int s = 0; s < speakers; ++s) {
    Rng vr = root.stream("voice" + std::to_string(s));
    const SpeakerVoice voice = sample_voice(vr);
    corpus.speakers.push_back("spk" + std::to_string(s));
    for (int u = 0; u < utts; ++u) {
      Rng ur = root.stream("utt" + std::to_string(s) + "_" + std::to_string(u));
      const Waveform w = synth_utterance(voice, 2.6, 16000, 0.3, 20.0, ur);
      corpus.utt_ids.push_back(corpus.speakers.back() + "_u" + std::to_string(u));
      corpus.labels.push_back(s);
      corpus.features.push_back(plan.mfcc(w).cast<float>());
    }
  }
  return corpus;
}

ModelConfig small_model_config() {
  ModelConfig cfg;
  cfg.channels = 32;
  cfg.se_bottleneck = 16;
  cfg.att_bottleneck = 16;
  cfg.mfa_channels = 96;
  cfg.embed_dim = 64;
  return cfg;
}

}  // namespace

TEST_CASE("zero margin reduces to scaled-softmax cross-entropy") {
  Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    const Index B = 1 + rng.uniform_int(0, 3);
    const Index S = 2 + rng.uniform_int(0, 6);
    const Index D = 4 + rng.uniform_int(0, 8);
    auto emb = Tensor<double>::randn({B, D}, rng);
    auto w = Tensor<double>::randn({S, D}, rng);
    std::vector<int> labels;
    for (Index b = 0; b < B; ++b)
      labels.push_back(static_cast<int>(rng.uniform_int(0, S - 1)));
    const double got = loss_value(emb, w, labels, AamOptions{0.0, 30.0});
    Eigen::MatrixXd em(B, D), wm(S, D);
    for (Index i = 0; i < B; ++i)
      for (Index j = 0; j < D; ++j) em(i, j) = emb(i, j);
    for (Index i = 0; i < S; ++i)
      for (Index j = 0; j < D; ++j) wm(i, j) = w(i, j);
    const double expect = scaled_softmax_ce(em, wm, labels, 30.0);
    CHECK(got == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("aligned two-class case matches the closed form") {
  // cos(theta_y) = 1 (clamped), cos(theta_other) = 0, m = 0.2, s = 30
  auto emb = Tensor<double>::from({1, 2}, {1.0, 0.0});
  auto w = Tensor<double>::from({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const double got = loss_value(emb, w, {0}, AamOptions{0.2, 30.0});
  const double c = 1.0 - 1e-7;
  const double phi = c * std::cos(0.2) - std::sin(0.2) * std::sqrt(1.0 - c * c);
  const double expect = std::log1p(std::exp(-30.0 * phi));
  CHECK(std::fabs(got - expect) / expect < 1e-3);
  CHECK(got > 1.5e-13);
  CHECK(got < 1.9e-13);
}

TEST_CASE("embedding orthogonal to every class weight") {
  // cos = 0 everywhere; the margin shifts only the target logit.
  const Index S = 4;
  auto emb = Tensor<double>::from({1, 5}, {0, 0, 0, 0, 1});
  auto w = Tensor<double>::zeros({S, 5});
  for (Index j = 0; j < S; ++j) w(j, j) = 1.0;
  const double got = loss_value(emb, w, {1}, AamOptions{0.2, 30.0});
  const double ly = -30.0 * std::sin(0.2);
  const double expect = std::log(std::exp(ly) + 3.0) - ly;
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  // and with m = 0 the orthogonal case is exactly log(num_classes)
  const double got0 = loss_value(emb, w, {1}, AamOptions{0.0, 30.0});
  CHECK(got0 == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("positive margin strictly increases the loss while the angle is interior") {
  Rng rng(9);
  for (int it = 0; it < 50; ++it) {
    auto emb = Tensor<double>::randn({1, 6}, rng);
    auto w = Tensor<double>::randn({3, 6}, rng);
    const std::vector<int> labels{static_cast<int>(rng.uniform_int(0, 2))};
    const double with_margin = loss_value(emb, w, labels, AamOptions{0.2, 30.0});
    const double without = loss_value(emb, w, labels, AamOptions{0.0, 30.0});
    CHECK(with_margin > without);
  }
}

TEST_CASE("zero-norm embedding is rejected") {
  Graph<double> g;
  auto emb = g.input(Tensor<double>::zeros({1, 4}));
  auto w = g.input(Tensor<double>::constant({2, 4}, 0.5));
  CHECK_THROWS_AS(aam_softmax_loss(emb, w, {0}, AamOptions{}), std::invalid_argument);
}

TEST_CASE("cyclical lr hits the documented fixtures") {
  LRSchedule s;  // 1e-8 .. 1e-3, cycle 130k
  CHECK(cyclical_lr(0, s) == doctest::Approx(1e-8));
  CHECK(cyclical_lr(65000, s) == doctest::Approx(1e-3));
  CHECK(std::fabs(cyclical_lr(195000, s) - 5.000005e-4) < 1e-8);
  CHECK(cyclical_lr(130000, s) == doctest::Approx(1e-8));
}

TEST_CASE("cyclical lr is bounded, near-continuous, and peaks only in cycle zero") {
  LRSchedule s;
  s.cycle_len = 1000;
  double peak = 0;
  for (std::int64_t t = 0; t < 5000; ++t) {
    const double lr = cyclical_lr(t, s);
    CHECK(lr >= s.lr_min);
    CHECK(lr <= s.lr_max);
    peak = std::max(peak, lr);
    if (t % s.cycle_len != 0) {
      const double step = std::fabs(lr - cyclical_lr(t - 1, s));
      CHECK(step <= 2.0000001 * (s.lr_max - s.lr_min) / static_cast<double>(s.cycle_len));
    }
  }
  CHECK(peak == doctest::Approx(s.lr_max));
  double peak_c1 = 0;
  for (std::int64_t t = 1000; t < 2000; ++t) peak_c1 = std::max(peak_c1, cyclical_lr(t, s));
  CHECK(peak_c1 < s.lr_max);
  CHECK(peak_c1 == doctest::Approx(s.lr_min + (s.lr_max - s.lr_min) * 0.5));

  LRSchedule stepwise = s;
  stepwise.stepsize_mode = true;  // cycle_len now the rising leg
  CHECK(cyclical_lr(1000, stepwise) == doctest::Approx(s.lr_max));
}

TEST_CASE("adam: zero gradient leaves parameters, decay shrinks them") {
  Tensor<double> p = Tensor<double>::from({2}, {0.5, -0.25});
  Tensor<double> zero = Tensor<double>::zeros({2});
  auto st = OptimState<double>::init(std::vector<Tensor<double>*>{&p}, {0.0});
  adam_step<double>({&p}, {&zero}, st, 1e-2);
  CHECK(p(0) == 0.5);
  CHECK(p(1) == -0.25);

  auto st2 = OptimState<double>::init(std::vector<Tensor<double>*>{&p}, {1e-2});
  double prev = std::fabs(p(0));
  for (int i = 0; i < 20; ++i) {
    adam_step<double>({&p}, {&zero}, st2, 1e-3);
    CHECK(std::fabs(p(0)) < prev);
    prev = std::fabs(p(0));
  }
}

TEST_CASE("adam matches the scalar recurrence oracle") {
  const double g = 0.3, lr = 1e-2;
  Tensor<double> p = Tensor<double>::from({1}, {1.0});
  Tensor<double> grad = Tensor<double>::from({1}, {g});
  auto st = OptimState<double>::init(std::vector<Tensor<double>*>{&p}, {0.0});

  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 25; ++t) {
    adam_step<double>({&p}, {&grad}, st, lr);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, t));
    const double vhat = v / (1.0 - std::pow(0.999, t));
    theta -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p(0) == doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_CASE("adam first step is approximately -lr * sign(gradient)") {
  Tensor<double> p = Tensor<double>::from({2}, {0.0, 0.0});
  Tensor<double> grad = Tensor<double>::from({2}, {0.37, -2.4});
  auto st = OptimState<double>::init(std::vector<Tensor<double>*>{&p}, {0.0});
  adam_step<double>({&p}, {&grad}, st, 1e-3);
  CHECK(p(0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(p(1) == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("a small model learns four synthetic speakers") {
  const Corpus corpus = tiny_synth_corpus(4, 5, 77);
  Model<float> model(small_model_config(), 4, 7);
  TrainConfig cfg;
  cfg.iterations = 120;
  cfg.batch_size = 8;
  cfg.crop_frames = 120;
  cfg.schedule.cycle_len = 120;
  cfg.seed = 5;
  const FitResult res = fit(model, corpus, cfg);
  REQUIRE(res.trace.size() == 120);
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += res.trace[static_cast<std::size_t>(i)].loss;
    last += res.trace[res.trace.size() - 10 + static_cast<std::size_t>(i)].loss;
  }
  CHECK(last < first);
  for (const auto& row : res.trace) CHECK(std::isfinite(row.loss));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Corpus corpus = tiny_synth_corpus(3, 4, 13);
  TrainConfig cfg;
  cfg.iterations = 25;
  cfg.batch_size = 6;
  cfg.crop_frames = 80;
  cfg.seed = 3;
  Model<float> m1(ModelConfig::tiny(), 3, 11);
  Model<float> m2(ModelConfig::tiny(), 3, 11);
  const FitResult r1 = fit(m1, corpus, cfg);
  const FitResult r2 = fit(m2, corpus, cfg);
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].loss == r2.trace[i].loss);
    CHECK(r1.trace[i].accuracy == r2.trace[i].accuracy);
  }
}

TEST_CASE("fit rejects an empty corpus") {
  Corpus empty;
  Model<float> m(ModelConfig::tiny(), 3, 1);
  CHECK_THROWS_AS(fit(m, empty, TrainConfig{}), std::invalid_argument);
}
