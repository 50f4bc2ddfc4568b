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
// Named-tensor archive: a human-readable JSON manifest (<stem>.json) that
// lists name/shape/byte-offset per tensor plus run metadata, and a raw
// little-endian float32 blob (<stem>.bin). Checkpoints, embedding archives
// and feature dumps all use this format.

#ifndef ECAPA_ARCHIVE_HPP_
#define ECAPA_ARCHIVE_HPP_

#include <string>
#include <vector>

#include "json.hpp"

#include "ecapa/tensor.hpp"

namespace ecapa {

struct ArchiveTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;  // row-major, product(shape) values
};

struct Archive {
  std::string kind;     // "checkpoint" | "embeddings" | "features"
  nlohmann::json meta;  // config, seeds, run manifest
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor* find(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return &t;
    return nullptr;
  }
};

void save_archive(const std::string& stem, const Archive& a);
Archive load_archive(const std::string& stem);

template <typename Scalar>
ArchiveTensor to_archive_tensor(const std::string& name, const Tensor<Scalar>& t) {
  ArchiveTensor at;
  at.name = name;
  at.shape = t.shape();
  at.data.resize(static_cast<std::size_t>(t.numel()));
  for (Index i = 0; i < t.numel(); ++i)
    at.data[static_cast<std::size_t>(i)] = static_cast<float>(t(i));
  return at;
}

template <typename Scalar>
Tensor<Scalar> from_archive_tensor(const ArchiveTensor& at) {
  Tensor<Scalar> t(at.shape);
  for (Index i = 0; i < t.numel(); ++i)
    t(i) = static_cast<Scalar>(at.data[static_cast<std::size_t>(i)]);
  return t;
}

// Run provenance attached to every produced artifact.
nlohmann::json run_manifest(const std::string& command_line, std::uint64_t seed,
                            const nlohmann::json& config);

}  // namespace ecapa

#endif  // ECAPA_ARCHIVE_HPP_
