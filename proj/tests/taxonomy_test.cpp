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
#include <map>
#include <random>
#include <set>

#include "doctest.h"

using namespace taxrec;

namespace {

std::vector<NodeRecord> records(
    std::initializer_list<std::tuple<std::int64_t, std::int64_t, const char*>>
        rows) {
  std::vector<NodeRecord> out;
  for (const auto& [id, parent, label] : rows)
    out.push_back({id, parent, label});
  return out;
}

// Two top categories, two subcategories each, two products each: a uniform
// depth-3 tree with 8 products.
Taxonomy balanced_tree() {
  return Taxonomy::build(records({{10, -1, "top_a"},
                                  {11, -1, "top_b"},
                                  {20, 10, "sub_aa"},
                                  {21, 10, "sub_ab"},
                                  {22, 11, "sub_ba"},
                                  {23, 11, "sub_bb"},
                                  {30, 20, "p0"},
                                  {31, 20, "p1"},
                                  {32, 21, "p2"},
                                  {33, 21, "p3"},
                                  {34, 22, "p4"},
                                  {35, 22, "p5"},
                                  {36, 23, "p6"},
                                  {37, 23, "p7"}}));
}

}  // namespace

TEST_SUITE_BEGIN("taxonomy");

TEST_CASE("balanced tree gets a synthetic root and bottom-up levels") {
  Taxonomy tax = balanced_tree();
  CHECK(tax.depth() == 3);
  CHECK(tax.node_count() == 15);  // 8 + 4 + 2 + synthetic root
  CHECK(tax.leaf_count() == 8);
  CHECK(tax.internal_count() == 7);
  CHECK(tax.level(tax.root()) == 3);
  CHECK(tax.root() == 0);

  const NodeId p0 = *tax.find(30);
  CHECK(tax.is_leaf(p0));
  CHECK(tax.level(p0) == 0);
  CHECK(tax.level(*tax.find(20)) == 1);
  CHECK(tax.level(*tax.find(10)) == 2);
}

TEST_CASE("ancestor path runs from the node to the root") {
  Taxonomy tax = balanced_tree();
  const NodeId p0 = *tax.find(30);
  auto path = tax.ancestor_path(p0);
  REQUIRE(path.size() == 4);  // product, sub, top, root
  CHECK(path[0] == p0);
  CHECK(path[1] == *tax.find(20));
  CHECK(path[2] == *tax.find(10));
  CHECK(path[3] == tax.root());

  auto root_path = tax.ancestor_path(tax.root());
  REQUIRE(root_path.size() == 1);
  CHECK(root_path[0] == tax.root());
}

TEST_CASE("path truncation counts levels from the node upward") {
  Taxonomy tax = balanced_tree();
  const NodeId p0 = *tax.find(30);
  CHECK(tax.ancestor_path(p0, 1).size() == 1);
  CHECK(tax.ancestor_path(p0, 1)[0] == p0);
  CHECK(tax.ancestor_path(p0, 2).size() == 2);
  CHECK(tax.ancestor_path(p0, 4).size() == 4);
  // Shorter paths are returned whole.
  CHECK(tax.ancestor_path(tax.root(), 4).size() == 1);
  CHECK_THROWS_AS(tax.ancestor_path(p0, 0), Error);
  CHECK_THROWS_AS(tax.ancestor_path(p0, 5), Error);
}

TEST_CASE("dense ids are level blocks from the root down") {
  Taxonomy tax = balanced_tree();
  // Every internal id precedes every product id.
  for (std::size_t n = 0; n < tax.node_count(); ++n) {
    const bool leaf = tax.is_leaf(static_cast<NodeId>(n));
    CHECK(leaf == (n >= tax.internal_count()));
  }
  std::size_t total = 0;
  int last_first_level = tax.depth() + 1;
  for (int level = tax.depth(); level >= 0; --level) {
    auto nodes = tax.nodes_at_level(level);
    total += nodes.size();
    for (NodeId n : nodes) CHECK(tax.level(n) == level);
    // Blocks are contiguous and ordered by descending level.
    if (!nodes.empty()) {
      CHECK(tax.level(nodes.front()) < last_first_level);
      last_first_level = level;
      CHECK(std::is_sorted(nodes.begin(), nodes.end()));
    }
  }
  CHECK(total == tax.node_count());
  CHECK(tax.nodes_at_level(3).size() == 1);
  CHECK(tax.nodes_at_level(2).size() == 2);
  CHECK(tax.nodes_at_level(1).size() == 4);
  CHECK(tax.nodes_at_level(0).size() == 8);
}

TEST_CASE("parents sit exactly one level up everywhere") {
  Taxonomy tax = balanced_tree();
  for (std::size_t n = 1; n < tax.node_count(); ++n) {
    const auto node = static_cast<NodeId>(n);
    CHECK(tax.level(tax.parent(node)) == tax.level(node) + 1);
    auto kids = tax.children(tax.parent(node));
    CHECK(std::find(kids.begin(), kids.end(), node) != kids.end());
  }
}

TEST_CASE("ragged branches are padded with pass-through nodes") {
  // One branch is a bare product under the top level; the other goes through
  // a subcategory. The bare product must be pushed down to level 0.
  Taxonomy tax = Taxonomy::build(records({{1, -1, "deep_top"},
                                          {2, 1, "deep_sub"},
                                          {3, 2, "deep_product"},
                                          {4, -1, "shallow_product"}}));
  CHECK(tax.depth() == 3);
  const NodeId shallow = *tax.find(4);
  CHECK(tax.is_leaf(shallow));
  CHECK(tax.level(shallow) == 0);
  // Two inserted pass-through ancestors before the root.
  auto path = tax.ancestor_path(shallow);
  REQUIRE(path.size() == 4);
  CHECK(tax.label(path[1]) == "(passthrough)");
  CHECK(tax.label(path[2]) == "(passthrough)");
  CHECK(path[3] == tax.root());
  // Pass-through nodes received fresh external ids.
  std::set<std::int64_t> ext;
  for (std::size_t n = 0; n < tax.node_count(); ++n)
    CHECK(ext.insert(tax.external_id(static_cast<NodeId>(n))).second);
}

TEST_CASE("unknown items are attached under UNCATEGORIZED at level 1") {
  Taxonomy tax = Taxonomy::build(records({{1, -1, "top"},
                                          {2, 1, "sub"},
                                          {3, 2, "product"}}),
                                 {100, 101});
  REQUIRE(tax.uncategorized().has_value());
  const NodeId uncat = *tax.uncategorized();
  CHECK(tax.level(uncat) == 1);
  CHECK(tax.label(uncat) == "UNCATEGORIZED");
  const NodeId extra = *tax.find(100);
  CHECK(tax.is_leaf(extra));
  CHECK(tax.parent(extra) == uncat);
  CHECK(tax.children(uncat).size() == 2);
  // Existing products keep their place.
  CHECK(tax.is_leaf(*tax.find(3)));
}

TEST_CASE("structural errors are rejected") {
  SUBCASE("cycle") {
    CHECK_THROWS_AS(
        Taxonomy::build(records({{1, 2, "a"}, {2, 1, "b"}})), Error);
  }
  SUBCASE("self loop") {
    CHECK_THROWS_AS(Taxonomy::build(records({{1, 1, "a"}})), Error);
  }
  SUBCASE("unknown parent") {
    CHECK_THROWS_AS(Taxonomy::build(records({{1, 99, "a"}})), Error);
  }
  SUBCASE("duplicate id") {
    CHECK_THROWS_AS(
        Taxonomy::build(records({{1, -1, "a"}, {1, -1, "b"}})), Error);
  }
  SUBCASE("negative id") {
    CHECK_THROWS_AS(Taxonomy::build(records({{-5, -1, "a"}})), Error);
  }
}

TEST_CASE("sibling draws are uniform over the other children") {
  Taxonomy tax = balanced_tree();
  const NodeId p0 = *tax.find(30);

  SUBCASE("root and only children have no siblings") {
    std::mt19937_64 rng(1);
    CHECK(!tax.sample_sibling(tax.root(), rng).has_value());
    Taxonomy chain = Taxonomy::build(records({{1, -1, "a"}, {2, 1, "b"}}));
    CHECK(!chain.sample_sibling(*chain.find(2), rng).has_value());
  }

  SUBCASE("the node itself is never drawn") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      auto sib = tax.sample_sibling(p0, rng);
      REQUIRE(sib.has_value());
      CHECK(*sib != p0);
      CHECK(tax.parent(*sib) == tax.parent(p0));
    }
  }

  SUBCASE("draw frequencies pass a chi-square check") {
    // Product 30 under a 6-way bottom category.
    Taxonomy wide = Taxonomy::build(records({{1, -1, "cat"},
                                             {30, 1, "p0"},
                                             {31, 1, "p1"},
                                             {32, 1, "p2"},
                                             {33, 1, "p3"},
                                             {34, 1, "p4"},
                                             {35, 1, "p5"},
                                             {36, 1, "p6"}}));
    std::mt19937_64 rng(3);
    std::map<NodeId, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
      ++counts[*wide.sample_sibling(*wide.find(30), rng)];
    REQUIRE(counts.size() == 6);
    const double expected = draws / 6.0;
    double chi2 = 0.0;
    for (const auto& [node, count] : counts) {
      const double diff = count - expected;
      chi2 += diff * diff / expected;
    }
    // 99.9th percentile of chi-square with 5 degrees of freedom.
    CHECK(chi2 < 20.52);
  }
}

TEST_CASE("single top-level record still hangs under a synthetic root") {
  Taxonomy tax = Taxonomy::build(records({{7, -1, "cat"}, {8, 7, "item"}}));
  CHECK(tax.depth() == 2);
  CHECK(tax.node_count() == 3);
  CHECK(tax.children(tax.root()).size() == 1);
  CHECK(tax.level(*tax.find(7)) == 1);
}

TEST_SUITE_END();
