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
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "taxrec/types.hpp"

namespace taxrec {

// One line of a taxonomy file: a node, its parent (-1 for a top-level node),
// and a display label.
struct NodeRecord {
  std::int64_t id = 0;
  std::int64_t parent = -1;
  std::string label;
};

// A rooted product tree with uniform depth.
//
// Levels are counted from the bottom: purchasable products sit at level 0 and
// the single root sits at level depth(). Input forests are normalized at build
// time: a synthetic root is added above all top-level records, and chains of
// pass-through nodes are inserted wherever a branch is shallower than its
// siblings, so every product ends up exactly depth() steps below the root.
//
// Dense ids are assigned level by level from the root down (root is id 0,
// products occupy the final contiguous block), which lets callers treat
// "id < internal_count()" as the internal-node test and iterate any level as
// a contiguous range.
class Taxonomy {
 public:
  // Builds the tree. `uncategorized_items` lists external item ids that occur
  // in a transaction log but not in `records`; when non-empty they are
  // attached as products under a synthetic UNCATEGORIZED node one level above
  // the product level.
  static Taxonomy build(std::vector<NodeRecord> records,
                        const std::vector<std::int64_t>& uncategorized_items = {});

  std::size_t node_count() const noexcept { return parent_.size(); }
  std::size_t leaf_count() const noexcept { return leaf_count_; }
  std::size_t internal_count() const noexcept {
    return node_count() - leaf_count_;
  }

  // Number of edges from a product to the root.
  int depth() const noexcept { return depth_; }

  NodeId root() const noexcept { return 0; }
  bool is_leaf(NodeId n) const { return level_[n] == 0; }
  int level(NodeId n) const { return level_[n]; }
  NodeId parent(NodeId n) const { return parent_[n]; }

  std::int64_t external_id(NodeId n) const { return external_id_[n]; }
  const std::string& label(NodeId n) const { return label_[n]; }

  // Dense id for an external id, if present.
  std::optional<NodeId> find(std::int64_t external_id) const;

  std::span<const NodeId> children(NodeId n) const;

  // [node, parent, ..., root]; length is depth() - level(node) + 1.
  std::span<const NodeId> ancestor_path(NodeId n) const;

  // First `levels` entries of ancestor_path(n) (fewer when the path is
  // shorter). `levels` must lie in [1, depth() + 1].
  std::span<const NodeId> ancestor_path(NodeId n, int levels) const;

  // All nodes at a level, as a contiguous ascending id range.
  std::span<const NodeId> nodes_at_level(int level) const;

  // Uniform draw among the other children of n's parent; std::nullopt when n
  // is the root or an only child.
  std::optional<NodeId> sample_sibling(NodeId n, std::mt19937_64& rng) const;

  // Dense id of the synthetic UNCATEGORIZED node, when one was created.
  std::optional<NodeId> uncategorized() const { return uncategorized_; }

 private:
  Taxonomy() = default;
  void verify() const;

  std::vector<NodeId> parent_;
  std::vector<std::int32_t> level_;
  std::vector<std::int64_t> external_id_;
  std::vector<std::string> label_;

  // Children in CSR form; child ids ascend within each node.
  std::vector<std::uint32_t> child_offset_;
  std::vector<NodeId> child_ids_;

  // Root-terminated ancestor paths in CSR form.
  std::vector<std::uint32_t> path_offset_;
  std::vector<NodeId> path_ids_;

  // level_ids_ is just 0..n-1; level_begin_[l] marks where level l starts.
  std::vector<NodeId> level_ids_;
  std::vector<std::uint32_t> level_begin_;

  std::unordered_map<std::int64_t, NodeId> by_external_;
  std::size_t leaf_count_ = 0;
  int depth_ = 0;
  std::optional<NodeId> uncategorized_;
};

}  // namespace taxrec
