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

#include "ecapa/archive.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace ecapa {

namespace {

constexpr int kFormatVersion = 1;

std::string basename_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void save_archive(const std::string& stem, const Archive& a) {
  nlohmann::json manifest;
  manifest["format"] = "ecapa-archive";
  manifest["version"] = kFormatVersion;
  manifest["kind"] = a.kind;
  manifest["blob"] = basename_of(stem) + ".bin";
  manifest["meta"] = a.meta;

  std::ofstream blob(stem + ".bin", std::ios::binary);
  ECAPA_CHECK(blob.good(), "save_archive: cannot open " << stem << ".bin");
  std::size_t offset = 0;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : a.tensors) {
    ECAPA_CHECK(static_cast<Index>(t.data.size()) == numel_of(t.shape),
                "save_archive: data/shape mismatch for " << t.name);
    nlohmann::json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    entry["dtype"] = "f32";
    entry["offset"] = offset;
    entry["size"] = t.data.size() * sizeof(float);
    tensors.push_back(entry);
    blob.write(reinterpret_cast<const char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    offset += t.data.size() * sizeof(float);
  }
  ECAPA_CHECK(blob.good(), "save_archive: blob write failed for " << stem);
  manifest["tensors"] = tensors;

  std::ofstream mf(stem + ".json");
  ECAPA_CHECK(mf.good(), "save_archive: cannot open " << stem << ".json");
  mf << manifest.dump(2) << "\n";
  ECAPA_CHECK(mf.good(), "save_archive: manifest write failed for " << stem);
}

Archive load_archive(const std::string& stem) {
  std::ifstream mf(stem + ".json");
  ECAPA_CHECK(mf.good(), "load_archive: cannot open " << stem << ".json");
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("load_archive: bad manifest " + stem + ".json: " + e.what());
  }
  ECAPA_CHECK(manifest.value("format", "") == "ecapa-archive",
              "load_archive: " << stem << ".json is not an archive manifest");
  ECAPA_CHECK(manifest.value("version", -1) == kFormatVersion,
              "load_archive: unsupported archive version "
                  << manifest.value("version", -1) << " in " << stem << ".json");

  std::ifstream blob(stem + ".bin", std::ios::binary);
  ECAPA_CHECK(blob.good(), "load_archive: cannot open " << stem << ".bin");

  Archive a;
  a.kind = manifest.value("kind", "");
  a.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    ArchiveTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    const auto size = entry.at("size").get<std::size_t>();
    ECAPA_CHECK(size == static_cast<std::size_t>(numel_of(t.shape)) * sizeof(float),
                "load_archive: size/shape mismatch for " << t.name);
    t.data.resize(size / sizeof(float));
    blob.seekg(static_cast<std::streamoff>(offset));
    blob.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(size));
    ECAPA_CHECK(blob.good(), "load_archive: truncated blob reading " << t.name);
    a.tensors.push_back(std::move(t));
  }
  return a;
}

nlohmann::json run_manifest(const std::string& command_line, std::uint64_t seed,
                            const nlohmann::json& config) {
  nlohmann::json run;
  run["tool"] = kVersion;
  run["command"] = command_line;
  run["seed"] = seed;
  run["config_hash"] = fnv1a64(config.dump());
  run["timestamp"] = utc_now();
  return run;
}

}  // namespace ecapa
