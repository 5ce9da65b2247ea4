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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"

namespace taxrec::test {

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("taxrec_" + tag + "_" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  std::string dir() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two top categories, two subcategories each, two products each (external
// product ids 30..37); depth 3 after the synthetic root.
inline Taxonomy small_tree() {
  std::vector<NodeRecord> recs{
      {10, -1, "top_a"}, {11, -1, "top_b"}, {20, 10, "sub_aa"},
      {21, 10, "sub_ab"}, {22, 11, "sub_ba"}, {23, 11, "sub_bb"},
      {30, 20, "p0"}, {31, 20, "p1"}, {32, 21, "p2"}, {33, 21, "p3"},
      {34, 22, "p4"}, {35, 22, "p5"}, {36, 23, "p6"}, {37, 23, "p7"}};
  return Taxonomy::build(recs);
}

// A small log over small_tree() products with per-user external ids and
// item lists given as external ids.
inline TransactionLog small_log(
    const Taxonomy& tax,
    const std::vector<std::pair<std::int64_t,
                                std::vector<std::vector<std::int64_t>>>>&
        users) {
  TransactionLog log;
  for (const auto& [ext, baskets] : users) {
    const UserId u = log.add_user(ext);
    for (const auto& basket : baskets) {
      std::vector<NodeId> items;
      for (std::int64_t e : basket) items.push_back(*tax.find(e));
      log.add_basket(u, std::move(items));
    }
  }
  log.finalize();
  return log;
}

}  // namespace taxrec::test
