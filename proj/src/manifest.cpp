// Copyright 2026 The taxrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taxrec/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "json.hpp"

#ifndef TAXREC_BUILD_ID
#define TAXREC_BUILD_ID "unknown"
#endif

namespace taxrec {

std::uint64_t RunManifest::config_hash() const {
  std::string canon = command;
  for (const auto& [key, value] : settings)
    canon += '\x1f' + key + '\x1e' + value;
  return fnv1a64(canon.data(), canon.size());
}

RunManifest RunManifest::create(const std::string& command) {
  RunManifest m;
  m.command = command;
  m.build_id = TAXREC_BUILD_ID;
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  m.started_at = stamp;
  return m;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json doc{{"command", command},
                     {"settings", settings},
                     {"build_id", build_id},
                     {"started_at", started_at},
                     {"config_hash", config_hash()}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

}  // namespace taxrec
