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
#include <random>
#include <vector>

#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

// One pairwise preference observation: user u at transaction t preferred
// `pos` over `neg`. Both sides sit at `level` (products for random draws, any
// level below the root for sibling draws).
struct TrainTuple {
  UserId user;
  std::int32_t t;
  NodeId pos;
  NodeId neg;
  std::int32_t level;
};

// Draws training tuples from a finalized log.
//
// A draw picks a purchase by uniform flat triple index, then either emits one
// product-level tuple with a uniformly sampled non-purchased negative, or
// (with probability sibling_mix) a group of tuples pitting each ancestor of
// the purchase against one of its siblings.
class TupleSampler {
 public:
  TupleSampler(const TransactionLog& log, const Taxonomy& tax,
               double sibling_mix, int levels, std::uint64_t seed);

  // Appends this draw's tuples to `out` and returns how many were added
  // (a sibling group can be empty when no ancestor has siblings).
  std::size_t next(std::vector<TrainTuple>& out);

  std::mt19937_64& rng() noexcept { return rng_; }

  // Picks (user, t, item) by flat triple index and a uniform product-level
  // negative not bought in that transaction.
  static TrainTuple sample_random_tuple(const TransactionLog& log,
                                        const Taxonomy& tax,
                                        std::mt19937_64& rng);

  // One tuple per ancestor of `leaf` that lies below the root within the
  // first `levels` path entries and has at least one sibling.
  static std::size_t sample_sibling_tuples(const Taxonomy& tax, NodeId leaf,
                                           UserId user, std::int32_t t,
                                           int levels, std::mt19937_64& rng,
                                           std::vector<TrainTuple>& out);

 private:
  const TransactionLog& log_;
  const Taxonomy& tax_;
  double sibling_mix_;
  int levels_;
  std::mt19937_64 rng_;
};

}  // namespace taxrec
