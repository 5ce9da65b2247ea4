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

#include "taxrec/ranker.hpp"

#include <algorithm>
#include <cmath>

namespace taxrec {

namespace {

bool better(const ScoredNode& a, const ScoredNode& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.node < b.node;
}

}  // namespace

Scorer::Scorer(const FactorStore& store, const Taxonomy& tax, int levels,
               DecayWeights decay)
    : store_(store), tax_(tax), levels_(levels), decay_(std::move(decay)),
      item_effective_(tax.node_count(), store.factor_dim()),
      next_effective_(tax.node_count(), store.factor_dim()) {
  if (store.node_count() != tax.node_count())
    fail(ErrorCode::dimension_mismatch,
         "factor store does not match the taxonomy");
  for (std::size_t n = 0; n < tax.node_count(); ++n) {
    const auto node = static_cast<NodeId>(n);
    store.effective_factor(tax, node, FactorStore::Kind::item, levels_,
                           item_effective_.row(n));
    store.effective_factor(tax, node, FactorStore::Kind::next, levels_,
                           next_effective_.row(n));
  }
}

std::vector<double> Scorer::query(UserId u,
                                  std::span<const Basket> history) const {
  const int K = store_.factor_dim();
  auto vu = store_.user_factors().row(u);
  std::vector<double> q(vu.begin(), vu.end());
  const std::size_t steps =
      std::min<std::size_t>(history.size(), decay_.order);
  for (std::size_t n = 1; n <= steps; ++n) {
    const Basket& basket = history[n - 1];
    if (basket.items.empty())
      fail(ErrorCode::invalid_argument, "history basket must be non-empty");
    const double w =
        decay_.weights[n - 1] / static_cast<double>(basket.items.size());
    for (NodeId item : basket.items) {
      auto eff = next_effective_.row(item);
      for (int k = 0; k < K; ++k) q[k] += w * eff[k];
    }
  }
  return q;
}

double CascadeSpec::fraction(int level) const {
  if (level >= 0 && static_cast<std::size_t>(level) < per_level.size() &&
      !std::isnan(per_level[level]))
    return per_level[level];
  return default_fraction;
}

CascadeSpec CascadeSpec::uniform(double fraction) {
  CascadeSpec s;
  s.default_fraction = fraction;
  return s;
}

RankOutcome rank_exhaustive(const Scorer& scorer, std::span<const double> q,
                            int level) {
  auto nodes = scorer.taxonomy().nodes_at_level(level);
  RankOutcome out;
  out.level = level;
  out.universe = nodes.size();
  out.ranking.reserve(nodes.size());
  for (NodeId n : nodes) out.ranking.push_back({n, scorer.score(q, n)});
  out.evaluations = nodes.size();
  std::sort(out.ranking.begin(), out.ranking.end(), better);
  return out;
}

RankOutcome rank_cascaded(const Scorer& scorer, std::span<const double> q,
                          const CascadeSpec& spec, int target_level) {
  const Taxonomy& tax = scorer.taxonomy();
  if (target_level < 0 || target_level >= tax.depth())
    fail(ErrorCode::invalid_argument,
         "cascade target must lie below the root");

  RankOutcome out;
  out.level = target_level;
  out.universe = tax.nodes_at_level(target_level).size();

  std::vector<NodeId> frontier(tax.children(tax.root()).begin(),
                               tax.children(tax.root()).end());
  for (int level = tax.depth() - 1; level >= target_level; --level) {
    const double frac = spec.fraction(level);
    if (frac <= 0.0 || frac > 1.0)
      fail(ErrorCode::invalid_argument, "keep fraction must lie in (0, 1]");
    std::vector<ScoredNode> scored;
    scored.reserve(frontier.size());
    for (NodeId n : frontier) scored.push_back({n, scorer.score(q, n)});
    out.evaluations += frontier.size();

    const std::size_t level_size = tax.nodes_at_level(level).size();
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(frac * static_cast<double>(level_size)));
    keep = std::max<std::size_t>(1, std::min(keep, scored.size()));

    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                      better);
    scored.resize(keep);
    out.level_trace.push_back(scored);

    if (level == target_level) {
      out.ranking = std::move(scored);
      break;
    }
    frontier.clear();
    for (const ScoredNode& s : scored) {
      auto kids = tax.children(s.node);
      frontier.insert(frontier.end(), kids.begin(), kids.end());
    }
  }
  return out;
}

std::vector<NodeId> cascade_chain(const Taxonomy& tax, NodeId node) {
  std::vector<NodeId> chain;
  auto path = tax.ancestor_path(node);
  // Skip the node itself and the root; report top level first.
  for (std::size_t p = path.size() - 1; p >= 1; --p) {
    if (path[p] == tax.root()) continue;
    chain.push_back(path[p]);
  }
  return chain;
}

std::vector<ScoredNode> recommend_topk(const Scorer& scorer, UserId u,
                                       std::span<const Basket> history,
                                       std::size_t k, const CascadeSpec* spec) {
  std::vector<double> q = scorer.query(u, history);
  RankOutcome outcome = spec ? rank_cascaded(scorer, q, *spec, 0)
                             : rank_exhaustive(scorer, q, 0);
  if (outcome.ranking.size() > k) outcome.ranking.resize(k);
  return std::move(outcome.ranking);
}

}  // namespace taxrec
