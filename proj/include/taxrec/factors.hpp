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
#include <span>
#include <string>
#include <vector>

#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

// Exponentially decaying weights over the n most recent transactions:
// weight(n) = alpha * exp(-n / order) for n = 1..order.
struct DecayWeights {
  int order = 0;
  double alpha = 1.0;
  std::vector<double> weights;

  static DecayWeights make(int order, double alpha);
};

// Factor matrices for users and taxonomy nodes.
//
// Every node, internal or product, owns one offset row per role (candidate
// item vs. previously bought item). The vector actually used for a node is
// the sum of offsets along its ancestor path, so ancestors shift whole
// subtrees at once and products keep individual residuals.
class FactorStore {
 public:
  enum class Kind { item, next };

  FactorStore(std::size_t user_count, std::size_t node_count, int factor_dim);

  void randomize(std::uint64_t seed, double stddev = 0.01);

  int factor_dim() const noexcept { return factor_dim_; }
  std::size_t user_count() const noexcept { return user_factors_.rows(); }
  std::size_t node_count() const noexcept { return item_offsets_.rows(); }

  Matrix& user_factors() noexcept { return user_factors_; }
  const Matrix& user_factors() const noexcept { return user_factors_; }
  Matrix& offsets(Kind kind) noexcept {
    return kind == Kind::item ? item_offsets_ : next_offsets_;
  }
  const Matrix& offsets(Kind kind) const noexcept {
    return kind == Kind::item ? item_offsets_ : next_offsets_;
  }

  // Sums the first `levels` ancestor offsets of `node` into `out`
  // (overwrites). `levels` follows the ancestor-path truncation rule: counted
  // from the node itself upward.
  void effective_factor(const Taxonomy& tax, NodeId node, Kind kind,
                        int levels, std::span<double> out) const;

  // Affinity of user u for `candidate` given the most recent transactions
  // (history[0] is the most recent). Long-term term plus one decayed
  // basket-averaged term per history step.
  double affinity(const Taxonomy& tax, UserId u, NodeId candidate,
                  std::span<const Basket> history, const DecayWeights& decay,
                  int levels) const;

  bool all_finite() const;

 private:
  int factor_dim_;
  Matrix user_factors_;
  Matrix item_offsets_;
  Matrix next_offsets_;
};

// Writes all factor rows as CSV: kind,node_or_user_id,level,f_0..f_{K-1}.
// Kinds: user, item_offset, next_offset, item_effective. Node rows carry
// external ids; user rows carry external user ids via `log`, or the dense id
// when `log` is null. Effective rows use the full ancestor path.
void export_factors(const FactorStore& store, const Taxonomy& tax,
                    const TransactionLog* log, const std::string& path);

}  // namespace taxrec
