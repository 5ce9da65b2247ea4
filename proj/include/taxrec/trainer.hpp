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

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taxrec/factors.hpp"
#include "taxrec/sampler.hpp"
#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

struct ModelConfig {
  int factors = 20;                // K
  double lambda = 0.01;            // L2 strength
  double epsilon = 0.05;           // SGD step size
  double alpha = 1.0;              // short-term weight scale
  int max_prev_transactions = 0;   // history order N
  int update_levels = -1;          // ancestor levels used; -1 = whole path
  double sibling_mix = 0.5;        // fraction of draws spent on sibling groups
  int epochs = 10;
  int threads = 1;
  std::uint64_t seed = 1;
  double cache_threshold = 0.1;    // 0 writes ancestors through immediately
  std::uint64_t tuple_budget = 0;  // stop after this many tuples; 0 = no cap
  double init_stddev = 0.01;

  int resolved_levels(const Taxonomy& tax) const;
  void validate(const Taxonomy& tax) const;
};

struct EpochStats {
  int epoch = 0;
  double mean_c = 0.0;          // mean residual 1 - sigmoid(s_pos - s_neg)
  std::uint64_t tuples = 0;     // tuples applied this epoch
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::uint64_t total_tuples = 0;
  std::vector<EpochStats> epochs;
};

// Runs after every epoch; gets mutable access to nothing, just the stats.
using EpochCallback = std::function<void(const EpochStats&)>;

// Numerically stable logistic; never overflows for any finite x.
inline double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Trains `store` in place with pairwise-ranking SGD. The store is
// re-initialized from config.seed, so results depend only on (config, log,
// taxonomy). With threads == 1 a rerun is bit-for-bit identical; with more
// threads, update interleaving varies but all locking invariants hold.
//
// Throws Error(divergence) when any score or factor turns non-finite.
TrainResult train(FactorStore& store, const TransactionLog& log,
                  const Taxonomy& tax, const ModelConfig& config,
                  const EpochCallback& on_epoch = nullptr);

// Applies exactly one pairwise update to `store` in place (no
// re-initialization) and returns the residual 1 - sigmoid(s_pos - s_neg).
// This is the unit of work `train` repeats; exposed so single updates can be
// checked against numerical gradients.
double train_step(FactorStore& store, const TransactionLog& log,
                  const Taxonomy& tax, const ModelConfig& config,
                  const TrainTuple& tuple);

// Hyperparameter selection: trains one model per (lambda, factors) candidate
// on `train_log` minus a per-user holdout tail, scores product-level AUC on
// the held-out tail, and returns the best candidate's config.
struct CvCandidate {
  double lambda;
  int factors;
};

struct CvOutcome {
  ModelConfig best;
  std::vector<double> candidate_auc;  // parallel to the candidate list
};

CvOutcome cross_validate(const TransactionLog& train_log, const Taxonomy& tax,
                         const ModelConfig& base,
                         const std::vector<CvCandidate>& candidates,
                         int holdout = 1);

}  // namespace taxrec
