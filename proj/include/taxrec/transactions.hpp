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

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "taxrec/types.hpp"

namespace taxrec {

// One purchase event: the set of products bought together. Items are dense
// node ids, deduplicated and ascending.
struct Basket {
  std::vector<NodeId> items;

  bool contains(NodeId n) const {
    return std::binary_search(items.begin(), items.end(), n);
  }

  bool operator==(const Basket&) const = default;
};

// Per-user ordered purchase histories plus a flat (user, t, item) triple
// index. The triple index is the sampling universe for training: drawing a
// uniform flat index weights users by how many items they bought.
class TransactionLog {
 public:
  struct Triple {
    UserId user;
    std::int32_t t;
    NodeId item;
  };

  // Users must be added before their baskets; finalize() builds the triple
  // index and freezes the log.
  UserId add_user(std::int64_t external_id);
  void add_basket(UserId user, std::vector<NodeId> items);
  void finalize();

  std::size_t user_count() const noexcept { return users_.size(); }
  std::int64_t external_user_id(UserId u) const { return users_[u]; }
  std::span<const Basket> transactions(UserId u) const {
    return {baskets_[u].data(), baskets_[u].size()};
  }

  std::size_t transaction_count() const noexcept { return transaction_count_; }
  std::size_t triple_count() const noexcept { return triples_.size(); }
  const Triple& triple(std::size_t flat_index) const {
    return triples_[flat_index];
  }

  bool finalized() const noexcept { return finalized_; }

 private:
  std::vector<std::int64_t> users_;
  std::vector<std::vector<Basket>> baskets_;
  std::vector<Triple> triples_;
  std::size_t transaction_count_ = 0;
  bool finalized_ = false;
};

}  // namespace taxrec
