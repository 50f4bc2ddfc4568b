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

#include "ecapa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ecapa/archive.hpp"
#include "ecapa/wav.hpp"

namespace ecapa {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string spk_name(int s) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03d", s);
  return buf;
}

std::string utt_name(int s, int u) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d_utt%03d", s, u);
  return buf;
}

}  // namespace

SpeakerVoice sample_voice(Rng& rng) {
  SpeakerVoice v;
  // Log-uniform draws from disjoint-ish bands keep the triple rising.
  v.formants_hz[0] = std::exp(rng.uniform(std::log(350.0), std::log(900.0)));
  v.formants_hz[1] = std::exp(rng.uniform(std::log(1000.0), std::log(2300.0)));
  v.formants_hz[2] = std::exp(rng.uniform(std::log(2400.0), std::log(3400.0)));
  v.tilt_db_per_octave = rng.uniform(-12.0, -3.0);
  return v;
}

Waveform synth_utterance(const SpeakerVoice& voice, double duration_s,
                         int sample_rate, double amplitude, double snr_db,
                         Rng& rng) {
  ECAPA_CHECK(duration_s > 0 && sample_rate > 0, "synth_utterance: bad shape");
  const auto n = static_cast<std::size_t>(duration_s * sample_rate);
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.assign(n, 0.0);

  std::array<double, 3> amp{}, phase{}, vib_depth{}, vib_rate{}, vib_phase{};
  for (int i = 0; i < 3; ++i) {
    amp[static_cast<std::size_t>(i)] =
        std::pow(10.0, voice.tilt_db_per_octave *
                           std::log2(voice.formants_hz[static_cast<std::size_t>(i)] /
                                     voice.formants_hz[0]) /
                           20.0);
    phase[static_cast<std::size_t>(i)] = rng.uniform(0.0, kTwoPi);
    vib_depth[static_cast<std::size_t>(i)] = rng.uniform(0.002, 0.01);
    vib_rate[static_cast<std::size_t>(i)] = rng.uniform(2.0, 6.0);
    vib_phase[static_cast<std::size_t>(i)] = rng.uniform(0.0, kTwoPi);
  }
  const double am_rate = rng.uniform(1.0, 3.0);
  const double am_phase = rng.uniform(0.0, kTwoPi);

  const double dt = 1.0 / sample_rate;
  std::array<double, 3> acc = phase;  // running phase per component
  double sumsq = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double t = static_cast<double>(s) * dt;
    double x = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double f =
          voice.formants_hz[i] *
          (1.0 + vib_depth[i] * std::sin(kTwoPi * vib_rate[i] * t + vib_phase[i]));
      acc[i] += kTwoPi * f * dt;
      x += amp[i] * std::sin(acc[i]);
    }
    x *= 1.0 + 0.15 * std::sin(kTwoPi * am_rate * t + am_phase);
    w.samples[s] = x;
    sumsq += x * x;
  }

  const double rms = std::sqrt(sumsq / static_cast<double>(n));
  const double gain = rms > 0 ? amplitude / rms : 0.0;
  const double noise_std = amplitude / std::pow(10.0, snr_db / 20.0);
  for (auto& s : w.samples) {
    s = std::clamp(s * gain + noise_std * rng.normal(), -1.0, 1.0);
  }
  return w;
}

void write_corpus(const SynthSpec& spec, const std::string& out_dir,
                  const std::string& command_line) {
  ECAPA_CHECK(spec.num_speakers >= 1 && spec.utts_per_speaker >= 1,
              "write_corpus: empty corpus spec");
  ECAPA_CHECK(spec.train_per_speaker >= 1 &&
                  spec.train_per_speaker <= spec.utts_per_speaker,
              "write_corpus: train split " << spec.train_per_speaker
                  << " out of range for " << spec.utts_per_speaker << " utterances");
  ECAPA_CHECK(spec.max_duration_s >= spec.min_duration_s && spec.min_duration_s > 0,
              "write_corpus: bad duration range");

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");

  Rng corpus_rng = Rng(spec.seed).stream("corpus");
  std::vector<SpeakerVoice> voices;
  for (int s = 0; s < spec.num_speakers; ++s) {
    Rng vr = corpus_rng.stream("voice/" + spk_name(s));
    voices.push_back(sample_voice(vr));
  }
  for (std::size_t a = 0; a < voices.size(); ++a)
    for (std::size_t b = a + 1; b < voices.size(); ++b)
      ECAPA_CHECK(voices[a].formants_hz != voices[b].formants_hz,
                  "write_corpus: duplicate speaker parameters drawn");

  std::ofstream train(fs::path(out_dir) / "train.scp");
  std::ofstream eval(fs::path(out_dir) / "eval.scp");
  std::ofstream utt2spk(fs::path(out_dir) / "utt2spk");
  ECAPA_CHECK(train.good() && eval.good() && utt2spk.good(),
              "write_corpus: cannot write lists under " << out_dir);

  std::vector<std::pair<std::string, int>> eval_utts;
  for (int s = 0; s < spec.num_speakers; ++s) {
    for (int u = 0; u < spec.utts_per_speaker; ++u) {
      const std::string id = utt_name(s, u);
      Rng ur = corpus_rng.stream("utt/" + id);
      const double dur = ur.uniform(spec.min_duration_s, spec.max_duration_s);
      const Waveform w =
          synth_utterance(voices[static_cast<std::size_t>(s)], dur,
                          spec.sample_rate, spec.amplitude, spec.noise_snr_db, ur);
      const std::string rel = "wav/" + id + ".wav";
      write_wav((fs::path(out_dir) / rel).string(), w);
      (u < spec.train_per_speaker ? train : eval) << id << " " << rel << "\n";
      utt2spk << id << " " << spk_name(s) << "\n";
      if (u >= spec.train_per_speaker) eval_utts.emplace_back(id, s);
    }
  }

  std::ofstream trials(fs::path(out_dir) / "trials.txt");
  ECAPA_CHECK(trials.good(), "write_corpus: cannot write trials under " << out_dir);
  for (std::size_t i = 0; i < eval_utts.size(); ++i)
    for (std::size_t j = i + 1; j < eval_utts.size(); ++j)
      trials << (eval_utts[i].second == eval_utts[j].second ? 1 : 0) << " "
             << eval_utts[i].first << " " << eval_utts[j].first << "\n";

  nlohmann::json cfg;
  cfg["num_speakers"] = spec.num_speakers;
  cfg["utts_per_speaker"] = spec.utts_per_speaker;
  cfg["train_per_speaker"] = spec.train_per_speaker;
  cfg["min_duration_s"] = spec.min_duration_s;
  cfg["max_duration_s"] = spec.max_duration_s;
  cfg["noise_snr_db"] = spec.noise_snr_db;
  cfg["amplitude"] = spec.amplitude;
  cfg["sample_rate"] = spec.sample_rate;
  nlohmann::json manifest;
  manifest["kind"] = "synth-corpus";
  manifest["spec"] = cfg;
  manifest["run"] = run_manifest(command_line, spec.seed, cfg);
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  ECAPA_CHECK(mf.good(), "write_corpus: cannot write manifest under " << out_dir);
  mf << manifest.dump(2) << "\n";
}

}  // namespace ecapa
