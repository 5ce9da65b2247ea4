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

#include "taxrec/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace taxrec {

namespace {

// Pre-normalization node: raw_parent indexes into the raw array, -1 only for
// the synthetic root.
struct RawNode {
  std::int64_t ext;
  int raw_parent;
  std::string label;
  int height = 0;
};

}  // namespace

Taxonomy Taxonomy::build(std::vector<NodeRecord> records,
                         const std::vector<std::int64_t>& uncategorized_items) {
  std::unordered_map<std::int64_t, int> raw_by_ext;
  raw_by_ext.reserve(records.size() + uncategorized_items.size() + 2);

  std::int64_t max_ext = -1;
  for (const NodeRecord& r : records) {
    if (r.id < 0) fail(ErrorCode::parse_error, "taxonomy node id must be >= 0");
    if (!raw_by_ext.emplace(r.id, 0).second)
      fail(ErrorCode::parse_error,
           "duplicate taxonomy node id " + std::to_string(r.id));
    max_ext = std::max(max_ext, r.id);
  }
  for (std::int64_t item : uncategorized_items) {
    if (raw_by_ext.count(item))
      fail(ErrorCode::invalid_argument,
           "item " + std::to_string(item) + " is already a taxonomy node");
    max_ext = std::max(max_ext, item);
  }

  std::int64_t next_synth_ext = max_ext + 1;
  std::vector<RawNode> raws;
  raws.reserve(records.size() + uncategorized_items.size() + 2);

  for (const NodeRecord& r : records)
    raws.push_back({r.id, -1, r.label});

  std::optional<std::size_t> uncat_raw;
  if (!uncategorized_items.empty()) {
    uncat_raw = raws.size();
    raws.push_back({next_synth_ext++, -1, "UNCATEGORIZED"});
    std::vector<std::int64_t> items(uncategorized_items);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (std::int64_t item : items)
      raws.push_back({item, static_cast<int>(*uncat_raw),
                      "item " + std::to_string(item)});
  }

  const int root_raw = static_cast<int>(raws.size());
  raws.push_back({next_synth_ext++, -1, "ROOT"});

  for (std::size_t i = 0; i < raws.size(); ++i)
    raw_by_ext[raws[i].ext] = static_cast<int>(i);

  // Resolve parents: every input top-level record (and UNCATEGORIZED) hangs
  // off the synthetic root.
  for (std::size_t i = 0; i < records.size(); ++i) {
    const NodeRecord& r = records[i];
    if (r.parent < 0) {
      raws[i].raw_parent = root_raw;
    } else {
      auto it = raw_by_ext.find(r.parent);
      if (it == raw_by_ext.end() ||
          static_cast<std::size_t>(it->second) >= records.size())
        fail(ErrorCode::parse_error,
             "node " + std::to_string(r.id) + " references unknown parent " +
                 std::to_string(r.parent));
      raws[i].raw_parent = it->second;
    }
  }
  if (uncat_raw) {
    raws[*uncat_raw].raw_parent = root_raw;
    for (std::size_t i = *uncat_raw + 1; i + 1 < raws.size(); ++i)
      raws[i].raw_parent = static_cast<int>(*uncat_raw);
  }

  // Children sorted by external id makes every later traversal deterministic.
  std::vector<std::vector<int>> raw_children(raws.size());
  for (std::size_t i = 0; i < raws.size(); ++i) {
    if (static_cast<int>(i) != root_raw)
      raw_children[raws[i].raw_parent].push_back(static_cast<int>(i));
  }
  for (auto& c : raw_children)
    std::sort(c.begin(), c.end(),
              [&](int a, int b) { return raws[a].ext < raws[b].ext; });

  // Reachability from the root doubles as cycle detection: every raw node has
  // a parent pointer, so anything the BFS misses sits on a cycle.
  std::vector<int> bfs_order;
  bfs_order.reserve(raws.size());
  {
    std::deque<int> queue{root_raw};
    std::vector<char> seen(raws.size(), 0);
    seen[root_raw] = 1;
    while (!queue.empty()) {
      int n = queue.front();
      queue.pop_front();
      bfs_order.push_back(n);
      for (int c : raw_children[n]) {
        if (seen[c])
          fail(ErrorCode::parse_error, "taxonomy contains a cycle");
        seen[c] = 1;
        queue.push_back(c);
      }
    }
    if (bfs_order.size() != raws.size())
      fail(ErrorCode::parse_error, "taxonomy contains a cycle");
  }

  // Heights bottom-up (children appear after their parent in BFS order).
  for (auto it = bfs_order.rbegin(); it != bfs_order.rend(); ++it) {
    int h = 0;
    for (int c : raw_children[*it]) h = std::max(h, raws[c].height + 1);
    raws[*it].height = h;
  }
  const int depth = raws[root_raw].height;

  // Final (padded) nodes. Pad chains are inserted wherever a child's subtree
  // is shallower than its siblings', so level(parent) == level(child) + 1
  // everywhere and all products land on level 0.
  struct FinalNode {
    int parent;  // index into finals, -1 for root
    int level;
    std::int64_t ext;
    const std::string* label;
  };
  std::vector<FinalNode> finals;
  finals.reserve(raws.size());
  static const std::string kPadLabel = "(passthrough)";

  struct QueueItem {
    int raw;
    int fparent;
  };
  std::optional<int> uncat_final;
  std::deque<QueueItem> queue{{root_raw, -1}};
  while (!queue.empty()) {
    auto [raw, fparent] = queue.front();
    queue.pop_front();
    const int level = fparent < 0 ? depth : finals[fparent].level - 1;
    const int self = static_cast<int>(finals.size());
    if (uncat_raw && raw == static_cast<int>(*uncat_raw)) uncat_final = self;
    finals.push_back({fparent, level, raws[raw].ext, &raws[raw].label});
    for (int c : raw_children[raw]) {
      int hang = self;
      for (int lvl = level - 1; lvl > raws[c].height; --lvl) {
        int pad = static_cast<int>(finals.size());
        finals.push_back({hang, lvl, next_synth_ext++, &kPadLabel});
        hang = pad;
      }
      queue.push_back({c, hang});
    }
  }

  // Dense ids: level blocks from the root down, ascending external id within
  // a block.
  std::vector<int> order(finals.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (finals[a].level != finals[b].level)
      return finals[a].level > finals[b].level;
    return finals[a].ext < finals[b].ext;
  });
  std::vector<NodeId> dense_of(finals.size());
  for (std::size_t d = 0; d < order.size(); ++d)
    dense_of[order[d]] = static_cast<NodeId>(d);

  Taxonomy tax;
  const std::size_t n = finals.size();
  tax.depth_ = depth;
  tax.parent_.resize(n);
  tax.level_.resize(n);
  tax.external_id_.resize(n);
  tax.label_.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    const FinalNode& f = finals[order[d]];
    tax.parent_[d] = f.parent < 0 ? -1 : dense_of[f.parent];
    tax.level_[d] = f.level;
    tax.external_id_[d] = f.ext;
    tax.label_[d] = *f.label;
    tax.by_external_.emplace(f.ext, static_cast<NodeId>(d));
  }
  tax.leaf_count_ = static_cast<std::size_t>(
      std::count(tax.level_.begin(), tax.level_.end(), 0));

  std::vector<std::uint32_t> child_count(n, 0);
  for (std::size_t d = 1; d < n; ++d) ++child_count[tax.parent_[d]];
  tax.child_offset_.assign(n + 1, 0);
  for (std::size_t d = 0; d < n; ++d)
    tax.child_offset_[d + 1] = tax.child_offset_[d] + child_count[d];
  tax.child_ids_.resize(n - 1);
  {
    std::vector<std::uint32_t> cursor(tax.child_offset_.begin(),
                                      tax.child_offset_.end() - 1);
    for (std::size_t d = 1; d < n; ++d)
      tax.child_ids_[cursor[tax.parent_[d]]++] = static_cast<NodeId>(d);
  }

  tax.path_offset_.assign(n + 1, 0);
  for (std::size_t d = 0; d < n; ++d)
    tax.path_offset_[d + 1] =
        tax.path_offset_[d] + static_cast<std::uint32_t>(depth - tax.level_[d] + 1);
  tax.path_ids_.resize(tax.path_offset_[n]);
  for (std::size_t d = 0; d < n; ++d) {
    std::uint32_t at = tax.path_offset_[d];
    NodeId cur = static_cast<NodeId>(d);
    while (true) {
      tax.path_ids_[at++] = cur;
      if (cur == 0) break;
      cur = tax.parent_[cur];
    }
  }

  tax.level_ids_.resize(n);
  std::iota(tax.level_ids_.begin(), tax.level_ids_.end(), 0);
  tax.level_begin_.assign(depth + 1, 0);
  {
    std::vector<std::uint32_t> count(depth + 1, 0);
    for (std::size_t d = 0; d < n; ++d) ++count[tax.level_[d]];
    tax.level_begin_[depth] = 0;
    for (int lvl = depth - 1; lvl >= 0; --lvl)
      tax.level_begin_[lvl] = tax.level_begin_[lvl + 1] + count[lvl + 1];
  }

  if (uncat_final) tax.uncategorized_ = dense_of[*uncat_final];

  tax.verify();
  return tax;
}

std::optional<NodeId> Taxonomy::find(std::int64_t external_id) const {
  auto it = by_external_.find(external_id);
  if (it == by_external_.end()) return std::nullopt;
  return it->second;
}

std::span<const NodeId> Taxonomy::children(NodeId n) const {
  return {child_ids_.data() + child_offset_[n],
          child_offset_[n + 1] - child_offset_[n]};
}

std::span<const NodeId> Taxonomy::ancestor_path(NodeId n) const {
  return {path_ids_.data() + path_offset_[n],
          path_offset_[n + 1] - path_offset_[n]};
}

std::span<const NodeId> Taxonomy::ancestor_path(NodeId n, int levels) const {
  if (levels < 1 || levels > depth_ + 1)
    fail(ErrorCode::invalid_argument,
         "ancestor path truncation must lie in [1, depth + 1]");
  auto full = ancestor_path(n);
  return full.first(std::min<std::size_t>(full.size(), levels));
}

std::span<const NodeId> Taxonomy::nodes_at_level(int level) const {
  if (level < 0 || level > depth_)
    fail(ErrorCode::invalid_argument, "no such taxonomy level");
  const std::uint32_t begin = level_begin_[level];
  const std::uint32_t end =
      level == 0 ? static_cast<std::uint32_t>(node_count())
                 : level_begin_[level - 1];
  return {level_ids_.data() + begin, end - begin};
}

std::optional<NodeId> Taxonomy::sample_sibling(NodeId n,
                                               std::mt19937_64& rng) const {
  if (n == root()) return std::nullopt;
  auto sibs = children(parent_[n]);
  if (sibs.size() < 2) return std::nullopt;
  const auto pos = static_cast<std::size_t>(
      std::lower_bound(sibs.begin(), sibs.end(), n) - sibs.begin());
  std::uniform_int_distribution<std::size_t> dist(0, sibs.size() - 2);
  const std::size_t draw = dist(rng);
  return sibs[draw < pos ? draw : draw + 1];
}

void Taxonomy::verify() const {
  const std::size_t n = node_count();
  if (n == 0) fail(ErrorCode::parse_error, "empty taxonomy");
  if (level_[0] != depth_ || parent_[0] != -1)
    fail(ErrorCode::parse_error, "root must be the sole node at the top level");
  for (std::size_t d = 1; d < n; ++d) {
    const NodeId p = parent_[d];
    if (p < 0 || static_cast<std::size_t>(p) >= n || p >= static_cast<NodeId>(d))
      fail(ErrorCode::parse_error, "parent ids must precede their children");
    if (level_[p] != level_[d] + 1)
      fail(ErrorCode::parse_error, "parent must sit exactly one level up");
  }
  for (std::size_t d = 0; d < n; ++d) {
    auto path = ancestor_path(static_cast<NodeId>(d));
    if (static_cast<int>(path.size()) != depth_ - level_[d] + 1 ||
        path.back() != 0)
      fail(ErrorCode::parse_error, "ancestor path must terminate at the root");
  }
}

}  // namespace taxrec
