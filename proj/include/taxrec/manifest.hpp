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

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "taxrec/types.hpp"

namespace taxrec {

// Record of one CLI invocation, written next to its outputs so any artifact
// can be traced back to the exact command, settings and build.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> settings;  // resolved flag values
  std::string build_id;
  std::string started_at;  // UTC, ISO 8601

  // Stable digest of command + settings; identical runs share it.
  std::uint64_t config_hash() const;

  static RunManifest create(const std::string& command);
  void write(const std::string& path) const;
};

}  // namespace taxrec
