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
#include <vector>

#include "taxrec/factors.hpp"
#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

// Precomputes effective factors for every node so that scoring a candidate is
// one dot product. A user's state collapses into a single query vector
// (long-term factor plus the decayed history sum), making score(query, node)
// equal to the model affinity.
class Scorer {
 public:
  Scorer(const FactorStore& store, const Taxonomy& tax, int levels,
         DecayWeights decay);

  // history[0] is the most recent transaction; entries beyond the model
  // order are ignored.
  std::vector<double> query(UserId u, std::span<const Basket> history) const;

  double score(std::span<const double> q, NodeId node) const {
    auto eff = item_effective_.row(node);
    double s = 0.0;
    for (std::size_t k = 0; k < eff.size(); ++k) s += q[k] * eff[k];
    return s;
  }

  const Taxonomy& taxonomy() const noexcept { return tax_; }
  const Matrix& item_effective() const noexcept { return item_effective_; }
  int levels() const noexcept { return levels_; }
  const DecayWeights& decay() const noexcept { return decay_; }

 private:
  const FactorStore& store_;
  const Taxonomy& tax_;
  int levels_;
  DecayWeights decay_;
  Matrix item_effective_;
  Matrix next_effective_;
};

struct ScoredNode {
  NodeId node;
  double score;
};

// Per-level fraction of nodes kept while descending the tree.
struct CascadeSpec {
  double default_fraction = 0.5;
  std::vector<double> per_level;  // index = level; empty or NaN = default

  double fraction(int level) const;
  static CascadeSpec uniform(double fraction);
};

// Result of ranking one level for one query. `ranking` is best-first with
// ties broken by ascending node id; under cascading it holds only admitted
// nodes (universe still counts the whole level). `evaluations` counts score
// computations, the cost measure for cascaded vs. exhaustive ranking.
struct RankOutcome {
  int level = 0;
  std::vector<ScoredNode> ranking;
  std::size_t universe = 0;
  std::uint64_t evaluations = 0;
  // Cascade only: admitted nodes per visited level, top level first; the
  // last entry equals `ranking`.
  std::vector<std::vector<ScoredNode>> level_trace;
};

RankOutcome rank_exhaustive(const Scorer& scorer, std::span<const double> q,
                            int level);

// Starts one level below the root, keeps ceil(fraction * level_size) nodes
// (clamped to the live frontier, at least one), and descends into the kept
// nodes' children until `target_level`; the target level is pruned the same
// way. Nodes outside an admitted subtree are never scored.
RankOutcome rank_cascaded(const Scorer& scorer, std::span<const double> q,
                          const CascadeSpec& spec, int target_level);

// Chain of ancestors that admitted `node` in a cascade, top level first.
std::vector<NodeId> cascade_chain(const Taxonomy& tax, NodeId node);

// Top-k products for a user; cascaded when `spec` is non-null.
std::vector<ScoredNode> recommend_topk(const Scorer& scorer, UserId u,
                                       std::span<const Basket> history,
                                       std::size_t k, const CascadeSpec* spec);

}  // namespace taxrec
