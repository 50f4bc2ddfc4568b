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
// Waveform-to-feature front end: 80-dimensional MFCCs (25 ms Hamming
// window, 10 ms shift, 512-point DFT, 80 mel filters, orthonormal DCT-II
// keeping all 80 coefficients), plus the crop / cepstral-mean-subtraction /
// masking transforms applied per training sample.

#ifndef ECAPA_FEATURES_HPP_
#define ECAPA_FEATURES_HPP_

#include <vector>

#include "ecapa/rng.hpp"
#include "ecapa/tensor.hpp"

namespace ecapa {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

struct MfccConfig {
  int sample_rate = 16000;  // anything else is rejected, no resampling
  double window_ms = 25.0;
  double shift_ms = 10.0;
  int num_mel = 80;
  int num_ceps = 80;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
  double fmin_hz = 0.0;
  double fmax_hz = 8000.0;

  int window_samples() const {
    return static_cast<int>(sample_rate * window_ms / 1000.0 + 0.5);
  }
  int shift_samples() const {
    return static_cast<int>(sample_rate * shift_ms / 1000.0 + 0.5);
  }
  int nfft() const {
    int n = 1;
    while (n < window_samples()) n *= 2;
    return n;
  }
};

// Precomputed window, DFT, mel filterbank and DCT matrices; build once,
// reuse across utterances. Framing keeps only complete windows:
// T = 1 + floor((N - window) / shift).
class MfccPlan {
 public:
  explicit MfccPlan(MfccConfig cfg = {});

  // [num_mel, T] log mel-filterbank energies (floored log).
  Tensor<double> log_mel(const Waveform& w) const;

  // [num_ceps, T] MFCCs: orthonormal DCT-II of the log mel energies.
  Tensor<double> mfcc(const Waveform& w) const;

  const MfccConfig& config() const { return cfg_; }

 private:
  MfccConfig cfg_;
  Eigen::VectorXd window_;
  Eigen::MatrixXd dft_cos_, dft_sin_;  // [nfft/2+1, nfft]
  Eigen::MatrixXd mel_;                // [num_mel, nfft/2+1]
  Eigen::MatrixXd dct_;                // [num_ceps, num_mel]
};

inline Tensor<double> mfcc(const Waveform& w, const MfccConfig& cfg = {}) {
  return MfccPlan(cfg).mfcc(w);
}

// Deterministic crop of `frames` columns starting at `offset`; inputs
// shorter than the crop wrap around from the start.
template <typename Scalar>
Tensor<Scalar> crop_at(const Tensor<Scalar>& f, Index frames, Index offset) {
  ECAPA_CHECK(f.ndim() == 2, "crop_at: features must be [C,T]");
  ECAPA_CHECK(frames >= 1, "crop_at: crop length must be positive");
  const Index T = f.dim(1);
  ECAPA_CHECK(offset >= 0 && (T <= frames ? offset == 0 : offset + frames <= T),
              "crop_at: offset " << offset << " invalid for T=" << T);
  Tensor<Scalar> out({f.dim(0), frames});
  for (Index t = 0; t < frames; ++t)
    out.mat().col(t) = f.mat().col((offset + t) % T);
  return out;
}

// Random crop with the offset uniform over the valid range (wrap-padding
// from frame zero when the utterance is shorter than the crop).
template <typename Scalar>
Tensor<Scalar> random_crop(const Tensor<Scalar>& f, Index frames, Rng& rng) {
  const Index T = f.dim(1);
  const Index offset =
      T > frames ? static_cast<Index>(rng.uniform_int(0, T - frames)) : 0;
  return crop_at(f, frames, offset);
}

// Cepstral mean subtraction: removes the per-coefficient mean over time.
template <typename Scalar>
Tensor<Scalar> cms(const Tensor<Scalar>& f) {
  ECAPA_CHECK(f.ndim() == 2, "cms: features must be [C,T]");
  Tensor<Scalar> out = f;
  out.mat().colwise() -= f.mat().rowwise().mean().eval();
  return out;
}

struct SpecAugmentConfig {
  int max_time_mask = 5;   // frames
  int max_freq_mask = 10;  // channels
};

// Zeroes one contiguous time block of width U{0..max_time_mask} and one
// contiguous channel block of height U{0..max_freq_mask}; masks that would
// overhang are placed fully inside (truncated at the edge for short inputs).
// Applied after cms, so zero is the mean value.
template <typename Scalar>
Tensor<Scalar> spec_augment(const Tensor<Scalar>& f, const SpecAugmentConfig& cfg,
                            Rng& rng) {
  ECAPA_CHECK(f.ndim() == 2, "spec_augment: features must be [C,T]");
  const Index C = f.dim(0), T = f.dim(1);
  Tensor<Scalar> out = f;
  const Index tw = std::min<Index>(rng.uniform_int(0, cfg.max_time_mask), T);
  if (tw > 0) {
    const Index t0 = static_cast<Index>(rng.uniform_int(0, T - tw));
    out.mat().middleCols(t0, tw).setZero();
  }
  const Index fw = std::min<Index>(rng.uniform_int(0, cfg.max_freq_mask), C);
  if (fw > 0) {
    const Index c0 = static_cast<Index>(rng.uniform_int(0, C - fw));
    out.mat().middleRows(c0, fw).setZero();
  }
  return out;
}

}  // namespace ecapa

#endif  // ECAPA_FEATURES_HPP_
