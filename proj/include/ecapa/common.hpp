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

#ifndef ECAPA_COMMON_HPP_
#define ECAPA_COMMON_HPP_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ecapa {

inline constexpr const char* kVersion = "ecapa-cpp 0.1.0";

// Contract violations throw; callers that want exit codes catch at the top.
#define ECAPA_CHECK(cond, msg)                                   \
  do {                                                           \
    if (!(cond)) {                                               \
      std::ostringstream ecapa_check_os_;                        \
      ecapa_check_os_ << msg;                                    \
      throw std::invalid_argument(ecapa_check_os_.str());        \
    }                                                            \
  } while (0)

// 64-bit FNV-1a, used for sub-stream derivation and config hashes.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

}  // namespace ecapa

#endif  // ECAPA_COMMON_HPP_
