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

#include "taxrec/transactions.hpp"

namespace taxrec {

UserId TransactionLog::add_user(std::int64_t external_id) {
  if (finalized_) fail(ErrorCode::invalid_argument, "log already finalized");
  users_.push_back(external_id);
  baskets_.emplace_back();
  return static_cast<UserId>(users_.size() - 1);
}

void TransactionLog::add_basket(UserId user, std::vector<NodeId> items) {
  if (finalized_) fail(ErrorCode::invalid_argument, "log already finalized");
  if (user < 0 || static_cast<std::size_t>(user) >= users_.size())
    fail(ErrorCode::invalid_argument, "unknown user");
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  if (items.empty())
    fail(ErrorCode::invalid_argument, "transaction basket must be non-empty");
  baskets_[user].push_back(Basket{std::move(items)});
  ++transaction_count_;
}

void TransactionLog::finalize() {
  if (finalized_) return;
  std::size_t total = 0;
  for (const auto& user_baskets : baskets_)
    for (const Basket& b : user_baskets) total += b.items.size();
  triples_.reserve(total);
  for (UserId u = 0; u < static_cast<UserId>(users_.size()); ++u) {
    const auto& user_baskets = baskets_[u];
    for (std::size_t t = 0; t < user_baskets.size(); ++t)
      for (NodeId item : user_baskets[t].items)
        triples_.push_back({u, static_cast<std::int32_t>(t), item});
  }
  finalized_ = true;
}

}  // namespace taxrec
