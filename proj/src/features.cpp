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

#include "ecapa/features.hpp"

#include <cmath>

namespace ecapa {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

MfccPlan::MfccPlan(MfccConfig cfg) : cfg_(cfg) {
  ECAPA_CHECK(cfg_.sample_rate > 0 && cfg_.num_mel > 0 && cfg_.num_ceps > 0,
              "MfccConfig: bad dimensions");
  ECAPA_CHECK(cfg_.num_ceps <= cfg_.num_mel,
              "MfccConfig: more DCT coefficients than mel filters");
  ECAPA_CHECK(cfg_.fmax_hz <= cfg_.sample_rate / 2.0,
              "MfccConfig: fmax above Nyquist");
  const int win = cfg_.window_samples();
  const int nfft = cfg_.nfft();
  const int nbins = nfft / 2 + 1;

  window_.resize(win);
  for (int n = 0; n < win; ++n)
    window_[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (win - 1));

  dft_cos_.resize(nbins, nfft);
  dft_sin_.resize(nbins, nfft);
  for (int k = 0; k < nbins; ++k)
    for (int n = 0; n < nfft; ++n) {
      const double ang = 2.0 * kPi * k * n / nfft;
      dft_cos_(k, n) = std::cos(ang);
      dft_sin_(k, n) = -std::sin(ang);
    }

  // Triangular filters equally spaced on the mel scale, sampled at the
  // DFT bin centers.
  const double mel_lo = hz_to_mel(cfg_.fmin_hz);
  const double mel_hi = hz_to_mel(cfg_.fmax_hz);
  const int M = cfg_.num_mel;
  std::vector<double> edges(static_cast<std::size_t>(M) + 2);
  for (int i = 0; i < M + 2; ++i)
    edges[static_cast<std::size_t>(i)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (M + 1));
  mel_.setZero(M, nbins);
  for (int m = 0; m < M; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < nbins; ++k) {
      const double f = static_cast<double>(k) * cfg_.sample_rate / nfft;
      if (f > lo && f < mid) mel_(m, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) mel_(m, k) = (hi - f) / (hi - mid);
    }
  }

  dct_.resize(cfg_.num_ceps, M);
  const double s0 = std::sqrt(1.0 / M);
  const double s = std::sqrt(2.0 / M);
  for (int i = 0; i < cfg_.num_ceps; ++i)
    for (int j = 0; j < M; ++j)
      dct_(i, j) = (i == 0 ? s0 : s) * std::cos(kPi * i * (j + 0.5) / M);
}

Tensor<double> MfccPlan::log_mel(const Waveform& w) const {
  ECAPA_CHECK(w.sample_rate == cfg_.sample_rate,
              "log_mel: expected " << cfg_.sample_rate << " Hz audio, got "
                                   << w.sample_rate << " (resampling not supported)");
  const int win = cfg_.window_samples();
  const int shift = cfg_.shift_samples();
  const int nfft = cfg_.nfft();
  const auto N = static_cast<Index>(w.samples.size());
  ECAPA_CHECK(N >= win, "log_mel: recording shorter than one window ("
                            << N << " < " << win << " samples)");
  const Index T = 1 + (N - win) / shift;

  // Signal-level pre-emphasis; sample 0 uses itself as predecessor so a
  // constant input stays constant.
  Eigen::VectorXd pre(N);
  pre[0] = w.samples[0] * (1.0 - cfg_.preemphasis);
  for (Index n = 1; n < N; ++n)
    pre[n] = w.samples[static_cast<std::size_t>(n)] -
             cfg_.preemphasis * w.samples[static_cast<std::size_t>(n - 1)];

  Eigen::MatrixXd frames = Eigen::MatrixXd::Zero(nfft, T);
  for (Index t = 0; t < T; ++t)
    frames.col(t).head(win) =
        pre.segment(t * shift, win).cwiseProduct(window_);

  const Eigen::MatrixXd re = dft_cos_ * frames;
  const Eigen::MatrixXd im = dft_sin_ * frames;
  const Eigen::MatrixXd power = re.array().square() + im.array().square();

  Tensor<double> out({cfg_.num_mel, T});
  out.mat() = ((mel_ * power).array().max(cfg_.log_floor)).log().matrix();
  return out;
}

Tensor<double> MfccPlan::mfcc(const Waveform& w) const {
  Tensor<double> lm = log_mel(w);
  Tensor<double> out({cfg_.num_ceps, lm.dim(1)});
  out.mat() = dct_ * lm.mat();
  return out;
}

}  // namespace ecapa
