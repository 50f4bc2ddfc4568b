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

#include "ecapa/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ecapa {

Corpus load_corpus(const std::string& list_path, const std::string& utt2spk_path,
                   const MfccConfig& mfcc_cfg) {
  namespace fs = std::filesystem;
  std::ifstream list(list_path);
  ECAPA_CHECK(list.good(), "load_corpus: cannot open " << list_path);
  std::ifstream u2s(utt2spk_path);
  ECAPA_CHECK(u2s.good(), "load_corpus: cannot open " << utt2spk_path);

  std::map<std::string, std::string> spk_of;
  std::string line;
  while (std::getline(u2s, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, spk;
    ECAPA_CHECK(ss >> id >> spk, "load_corpus: bad utt2spk line: " << line);
    spk_of[id] = spk;
  }

  std::vector<std::pair<std::string, std::string>> entries;  // id, path
  const fs::path base = fs::path(list_path).parent_path();
  while (std::getline(list, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, rel;
    ECAPA_CHECK(ss >> id >> rel, "load_corpus: bad list line: " << line);
    const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
    entries.emplace_back(id, p.string());
  }
  ECAPA_CHECK(!entries.empty(), "load_corpus: empty utterance list " << list_path);

  // Stable speaker indexing: sorted unique names.
  std::vector<std::string> speakers;
  for (const auto& [id, path] : entries) {
    const auto it = spk_of.find(id);
    ECAPA_CHECK(it != spk_of.end(), "load_corpus: no speaker for utterance " << id);
    speakers.push_back(it->second);
  }
  std::sort(speakers.begin(), speakers.end());
  speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < speakers.size(); ++i)
    index[speakers[i]] = static_cast<int>(i);

  MfccPlan plan(mfcc_cfg);
  Corpus corpus;
  corpus.speakers = speakers;
  for (const auto& [id, path] : entries) {
    corpus.utt_ids.push_back(id);
    corpus.labels.push_back(index.at(spk_of.at(id)));
    corpus.features.push_back(plan.mfcc(read_wav(path)).cast<float>());
  }
  return corpus;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace,
                     const std::string& header_comment) {
  std::ofstream out(path);
  ECAPA_CHECK(out.good(), "write_trace_csv: cannot open " << path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "iteration,lr,loss,accuracy\n";
  out.precision(10);
  for (const auto& r : trace)
    out << r.iteration << "," << r.lr << "," << r.loss << "," << r.accuracy << "\n";
  ECAPA_CHECK(out.good(), "write_trace_csv: write failed for " << path);
}

}  // namespace ecapa
