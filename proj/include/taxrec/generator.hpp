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
#include <string>
#include <vector>

#include "taxrec/types.hpp"

namespace taxrec {

// Synthetic purchase-log generator. Users hold Dirichlet-concentrated
// preferences over top categories; within a category, products follow a
// power-law popularity. A purchase from one bottom category pulls the next
// transaction toward a fixed companion category with probability
// `copurchase_strength`, giving the log real sequential structure. A small
// cold set of products appears only in users' final transactions.
struct SynthSpec {
  std::size_t users = 10000;
  // Children per node from the top down; the last entry is products per
  // bottom category. The default yields 23 / 276 / 1656 categories over
  // 9936 products.
  std::vector<int> branching = {23, 12, 6, 6};
  double mean_transactions = 4.0;  // geometric, clamped to max_transactions
  int max_transactions = 40;
  int basket_min = 1;
  int basket_max = 3;
  double preference_alpha = 0.2;   // Dirichlet concentration over top cats
  double copurchase_strength = 0.4;
  double popularity_skew = 0.8;    // in-category power-law exponent
  double cold_fraction = 0.05;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthSummary {
  std::string taxonomy_path;
  std::string transactions_path;
  std::string ground_truth_path;
  std::size_t users = 0;
  std::size_t products = 0;
  std::size_t transactions = 0;
  std::vector<std::size_t> nodes_per_tier;  // top tier first, products last
  std::size_t cold_products = 0;
};

// Writes taxonomy.tsv, transactions.txt and ground_truth.jsonl into `dir`
// (created if missing). Output is a pure function of `spec`.
SynthSummary generate_corpus(const SynthSpec& spec, const std::string& dir);

}  // namespace taxrec
