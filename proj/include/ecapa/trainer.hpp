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
// Mini-batch training driver: random fixed-length crops, cepstral mean
// subtraction and masking per sample, margin-softmax objective, Adam with
// coupled weight decay and the cyclical learning rate.

#ifndef ECAPA_TRAINER_HPP_
#define ECAPA_TRAINER_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ecapa/features.hpp"
#include "ecapa/loss.hpp"
#include "ecapa/model.hpp"
#include "ecapa/optim.hpp"
#include "ecapa/wav.hpp"

namespace ecapa {

struct TrainConfig {
  std::int64_t iterations = 2000;
  int batch_size = 32;
  int crop_frames = 200;  // 2 s at a 10 ms shift
  AamOptions aam;
  LRSchedule schedule{1e-8, 1e-3, 1000, false};
  AdamConfig adam;
  double weight_decay = 2e-5;
  double head_weight_decay = 2e-4;
  bool use_spec_augment = true;
  SpecAugmentConfig spec_augment_cfg;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 0;  // 0 = final checkpoint only
};

// Utterances with raw (pre-crop, pre-cms) MFCC features held in memory.
struct Corpus {
  std::vector<std::string> utt_ids;
  std::vector<int> labels;
  std::vector<Tensor<float>> features;  // [num_ceps, T] per utterance
  std::vector<std::string> speakers;    // label index -> speaker id
};

// Reads "utt_id wav_path" lines (paths relative to the list's directory)
// plus an utt2spk map, and extracts features for every utterance.
Corpus load_corpus(const std::string& list_path, const std::string& utt2spk_path,
                   const MfccConfig& mfcc_cfg = {});

struct TraceRow {
  std::int64_t iteration;
  double lr;
  double loss;
  double accuracy;  // batch classification accuracy, by max cosine
};

struct FitResult {
  std::vector<TraceRow> trace;
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::string& header_comment = "");

template <typename Scalar>
using CheckpointHook = std::function<void(std::int64_t iteration, Model<Scalar>&)>;

// Full-utterance eval-mode features: cepstral mean subtraction only.
template <typename Scalar>
Tensor<Scalar> eval_features(const Tensor<float>& raw) {
  return cms(raw).template cast<Scalar>();
}

template <typename Scalar>
Tensor<Scalar> extract_embedding(Model<Scalar>& model, const Tensor<Scalar>& feats) {
  ECAPA_CHECK(feats.ndim() == 2, "extract_embedding: features must be [C,T]");
  Tensor<Scalar> batch({1, feats.dim(0), feats.dim(1)});
  batch.item(0) = feats.mat();
  Graph<Scalar> g;
  auto pass = model.run(g, batch, RunMode::eval);
  Tensor<Scalar> emb({model.config().embed_dim});
  emb.vec() = pass.embedding.value().mat().row(0).transpose();
  return emb;
}

template <typename Scalar>
FitResult fit(Model<Scalar>& model, const Corpus& corpus, const TrainConfig& cfg,
              const CheckpointHook<Scalar>& hook = nullptr) {
  ECAPA_CHECK(!corpus.features.empty(), "fit: empty corpus");
  ECAPA_CHECK(cfg.batch_size >= 1 && cfg.iterations >= 1 && cfg.crop_frames >= 1,
              "fit: bad training config");
  const int S = model.num_speakers();
  for (int label : corpus.labels)
    ECAPA_CHECK(label >= 0 && label < S,
                "fit: corpus speaker label " << label << " outside model's " << S);

  auto params = model.parameters();
  std::vector<Tensor<Scalar>*> param_ptrs;
  std::vector<double> decay;
  for (const auto& p : params) {
    param_ptrs.push_back(p.tensor);
    decay.push_back(p.head ? cfg.head_weight_decay : cfg.weight_decay);
  }
  auto state = OptimState<Scalar>::init(param_ptrs, decay, cfg.adam);

  // Batch sampling draws utterances uniformly with replacement, so batches
  // larger than the corpus are fine.
  Rng crops = Rng(cfg.seed).stream("crops");
  Rng masks = Rng(cfg.seed).stream("masks");

  const Index B = cfg.batch_size;
  const Index D = model.config().input_dim;
  FitResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (std::int64_t iter = 0; iter < cfg.iterations; ++iter) {
    Tensor<Scalar> batch({B, D, cfg.crop_frames});
    std::vector<int> labels(static_cast<std::size_t>(B));
    for (Index b = 0; b < B; ++b) {
      const auto idx = static_cast<std::size_t>(
          crops.uniform_int(0, static_cast<std::int64_t>(corpus.features.size()) - 1));
      Tensor<float> sample = cms(random_crop(corpus.features[idx], cfg.crop_frames, crops));
      if (cfg.use_spec_augment) sample = spec_augment(sample, cfg.spec_augment_cfg, masks);
      batch.item(b) = sample.mat().template cast<Scalar>();
      labels[static_cast<std::size_t>(b)] = corpus.labels[idx];
    }

    Graph<Scalar> g;
    auto pass = model.run(g, batch, RunMode::train);
    Tensor<Scalar> cosines;
    Var<Scalar> loss = aam_softmax_loss(pass.embedding, pass.head_weight, labels,
                                        cfg.aam, &cosines);
    g.backward(loss);

    std::vector<const Tensor<Scalar>*> grads;
    grads.reserve(pass.param_vars.size());
    for (const auto& v : pass.param_vars) grads.push_back(&v.grad());

    const double lr = cyclical_lr(iter, cfg.schedule);
    adam_step(param_ptrs, grads, state, lr);

    int correct = 0;
    for (Index b = 0; b < B; ++b) {
      Index arg = 0;
      cosines.mat().row(b).maxCoeff(&arg);
      if (static_cast<int>(arg) == labels[static_cast<std::size_t>(b)]) ++correct;
    }
    result.trace.push_back({iter, lr, static_cast<double>(loss.value()(0)),
                            static_cast<double>(correct) / static_cast<double>(B)});

    if (hook && cfg.checkpoint_every > 0 && (iter + 1) % cfg.checkpoint_every == 0)
      hook(iter + 1, model);
  }
  if (hook) hook(cfg.iterations, model);
  return result;
}

// Closed-set classification accuracy over whole utterances in eval mode:
// argmax cosine between the embedding and the class weight rows.
template <typename Scalar>
double classification_accuracy(Model<Scalar>& model, const Corpus& corpus) {
  ECAPA_CHECK(!corpus.features.empty(), "classification_accuracy: empty corpus");
  Tensor<Scalar>* head = nullptr;
  for (const auto& p : model.parameters())
    if (p.head) head = p.tensor;
  ECAPA_CHECK(head != nullptr, "classification_accuracy: model has no head");
  using Mat = typename Tensor<Scalar>::MatrixRM;
  Mat what = head->mat();
  for (Index j = 0; j < what.rows(); ++j) what.row(j).normalize();

  int correct = 0;
  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    Tensor<Scalar> emb =
        extract_embedding(model, eval_features<Scalar>(corpus.features[i]));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = emb.vec();
    const Scalar n = e.norm();
    ECAPA_CHECK(n > 0, "classification_accuracy: zero-norm embedding");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cos = what * (e / n);
    Index arg = 0;
    cos.maxCoeff(&arg);
    if (static_cast<int>(arg) == corpus.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.features.size());
}

}  // namespace ecapa

#endif  // ECAPA_TRAINER_HPP_
