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

#include "taxrec/sampler.hpp"

namespace taxrec {

TupleSampler::TupleSampler(const TransactionLog& log, const Taxonomy& tax,
                           double sibling_mix, int levels, std::uint64_t seed)
    : log_(log), tax_(tax), sibling_mix_(sibling_mix), levels_(levels),
      rng_(seed) {
  if (!log.finalized())
    fail(ErrorCode::invalid_argument, "log must be finalized before sampling");
  if (log.triple_count() == 0)
    fail(ErrorCode::invalid_argument, "cannot sample from an empty log");
  if (sibling_mix < 0.0 || sibling_mix > 1.0)
    fail(ErrorCode::invalid_argument, "sibling mix must lie in [0, 1]");
}

TrainTuple TupleSampler::sample_random_tuple(const TransactionLog& log,
                                             const Taxonomy& tax,
                                             std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, log.triple_count() - 1);
  const TransactionLog::Triple& triple = log.triple(pick(rng));
  const Basket& basket = log.transactions(triple.user)[triple.t];

  auto products = tax.nodes_at_level(0);
  if (basket.items.size() >= products.size())
    fail(ErrorCode::invalid_argument,
         "transaction covers every product; no negative exists");
  std::uniform_int_distribution<std::size_t> pick_neg(0, products.size() - 1);
  NodeId neg;
  do {
    neg = products[pick_neg(rng)];
  } while (basket.contains(neg));
  return {triple.user, triple.t, triple.item, neg, 0};
}

std::size_t TupleSampler::sample_sibling_tuples(const Taxonomy& tax,
                                                NodeId leaf, UserId user,
                                                std::int32_t t, int levels,
                                                std::mt19937_64& rng,
                                                std::vector<TrainTuple>& out) {
  std::size_t added = 0;
  for (NodeId node : tax.ancestor_path(leaf, levels)) {
    if (node == tax.root()) break;
    if (auto sib = tax.sample_sibling(node, rng)) {
      out.push_back({user, t, node, *sib, tax.level(node)});
      ++added;
    }
  }
  return added;
}

std::size_t TupleSampler::next(std::vector<TrainTuple>& out) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < sibling_mix_) {
    std::uniform_int_distribution<std::size_t> pick(0, log_.triple_count() - 1);
    const TransactionLog::Triple& triple = log_.triple(pick(rng_));
    return sample_sibling_tuples(tax_, triple.item, triple.user, triple.t,
                                 levels_, rng_, out);
  }
  out.push_back(sample_random_tuple(log_, tax_, rng_));
  return 1;
}

}  // namespace taxrec
