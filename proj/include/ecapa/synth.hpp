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
// Synthetic speaker corpus: each speaker is a fixed triple of formant-like
// tone frequencies plus a spectral tilt; utterances add per-take phase,
// slight vibrato, amplitude modulation and white noise at a configurable
// SNR. The point is separable classes whose verification difficulty can be
// dialed, not realistic speech.

#ifndef ECAPA_SYNTH_HPP_
#define ECAPA_SYNTH_HPP_

#include <array>
#include <string>
#include <vector>

#include "ecapa/features.hpp"
#include "ecapa/rng.hpp"

namespace ecapa {

struct SpeakerVoice {
  std::array<double, 3> formants_hz;  // rising triple
  double tilt_db_per_octave;          // amplitude roll-off vs the first formant
};

struct SynthSpec {
  int num_speakers = 32;
  int utts_per_speaker = 20;
  int train_per_speaker = 15;  // remainder is held out for trials
  double min_duration_s = 2.5;
  double max_duration_s = 4.0;
  double noise_snr_db = 20.0;
  double amplitude = 0.3;  // RMS target before noise
  int sample_rate = 16000;
  std::uint64_t seed = 1;
};

SpeakerVoice sample_voice(Rng& rng);

Waveform synth_utterance(const SpeakerVoice& voice, double duration_s,
                         int sample_rate, double amplitude, double snr_db,
                         Rng& rng);

// Writes the corpus under out_dir:
//   wav/<utt>.wav        audio
//   train.scp, eval.scp  lines "utt_id wav/<utt>.wav"
//   utt2spk              lines "utt_id spk_id"
//   trials.txt           lines "label enroll_id test_id" over all eval pairs
//   manifest.json        spec, seed, run provenance
// Deterministic per seed, byte for byte.
void write_corpus(const SynthSpec& spec, const std::string& out_dir,
                  const std::string& command_line);

}  // namespace ecapa

#endif  // ECAPA_SYNTH_HPP_
