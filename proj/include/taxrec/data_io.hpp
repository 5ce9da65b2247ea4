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

#include "taxrec/factors.hpp"
#include "taxrec/taxonomy.hpp"
#include "taxrec/transactions.hpp"
#include "taxrec/types.hpp"

namespace taxrec {

// Taxonomy file: one `node_id<TAB>parent_id<TAB>label` line per node,
// parent_id -1 for top-level nodes, '#' starts a comment line.
std::vector<NodeRecord> load_taxonomy_records(const std::string& path);
void save_taxonomy_records(const std::vector<NodeRecord>& records,
                           const std::string& path);

// Transaction file: `user_id t_index item_id [item_id ...]` per line,
// t_index counting from 0 per user without gaps.
//
// load_transactions requires every item to be a product of `tax`.
// load_corpus instead collects unknown items first and builds the taxonomy
// with them attached under UNCATEGORIZED, so nothing is dropped.
TransactionLog load_transactions(const std::string& path, const Taxonomy& tax);

struct Corpus {
  Taxonomy taxonomy;
  TransactionLog log;
  std::size_t unknown_items = 0;  // items not present in the taxonomy file
};

Corpus load_corpus(const std::string& taxonomy_path,
                   const std::string& transactions_path);

void save_transaction_log(const TransactionLog& log, const Taxonomy& tax,
                          const std::string& path);

// Model checkpoint: magic/version header, dimensions, the model shape
// (levels, history order), float32 row-major factor payload, trailing
// checksum over everything before it. Saving what load_checkpoint returned
// reproduces the file byte for byte.
void save_checkpoint(const FactorStore& store, int levels, int order,
                     const std::string& path);

struct Checkpoint {
  FactorStore store;
  int levels = -1;
  int order = 0;
};

Checkpoint load_checkpoint(const std::string& path, const Taxonomy& tax);

}  // namespace taxrec
