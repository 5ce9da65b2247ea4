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
#include <optional>
#include <span>
#include <vector>

#include "taxrec/factors.hpp"
#include "taxrec/ranker.hpp"
#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

// Temporal per-user split: a per-user Gaussian draw around `mu` decides how
// many leading transactions go to train; the rest are the test pool. The
// validation slice is the last `holdout` train transactions, the test slice
// the first `holdout` test transactions.
struct SplitSpec {
  double mu = 0.5;
  double sigma = 0.05;
  int holdout = 1;
  std::uint64_t seed = 42;
};

struct SplitOutcome {
  TransactionLog train;  // same users and user ids as the input log
  std::vector<std::vector<Basket>> validation;  // indexed by user
  std::vector<std::vector<Basket>> test;        // indexed by user
};

SplitOutcome split(const TransactionLog& log, const SplitSpec& spec);

// Drops items already bought by the same user in train from each held-out
// basket; baskets left empty disappear.
std::vector<std::vector<Basket>> filter_repeats(
    const std::vector<std::vector<Basket>>& heldout,
    const TransactionLog& train);

// Exact pairwise ranking quality from 1-based positive ranks over a universe
// of `universe` candidates: the fraction of (positive, non-positive) pairs
// the ranking orders correctly. Requires 0 < ranks.size() < universe.
double auc_from_ranks(std::vector<int> ranks, std::size_t universe);

double mean_rank(std::span<const int> ranks);

enum class RankMode { exhaustive, cascaded };

struct EvalConfig {
  int levels = -1;  // -1 = whole ancestor path
  DecayWeights decay;
  RankMode mode = RankMode::exhaustive;
  CascadeSpec cascade = CascadeSpec::uniform(0.5);
  int threads = 1;
  bool category_metrics = true;  // per-level AUC and cold-start rank
};

struct EvalReport {
  double auc = 0.0;
  double meanrank = 0.0;
  // Mean category-level AUC indexed by level (entries 1..depth-1 are
  // meaningful; products and root excluded).
  std::vector<double> level_auc;
  double cold_rank = 0.0;       // mean product rank of never-trained items
  std::size_t cold_count = 0;
  std::size_t users = 0;        // users that entered the averages
  std::uint64_t evaluations = 0;  // total candidate scorings
};

// Scores every user's held-out slice given their train history. Users with an
// empty slice, or whose positives cover a whole level, are skipped for that
// metric. Aggregation order is fixed by user id, so the report does not
// depend on `threads`.
EvalReport evaluate(const FactorStore& store, const Taxonomy& tax,
                    const TransactionLog& train,
                    const std::vector<std::vector<Basket>>& heldout,
                    const EvalConfig& config);

}  // namespace taxrec
