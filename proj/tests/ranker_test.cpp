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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "taxrec/ranker.hpp"
#include "test_util.hpp"

namespace taxrec {
namespace {

TEST_SUITE("ranker") {

TEST_CASE("scorer reproduces the model affinity") {
  auto tax = test::small_tree();
  FactorStore store(2, tax.node_count(), 3);
  store.randomize(11, 0.3);

  const int levels = tax.depth() + 1;
  auto decay = DecayWeights::make(2, 0.8);
  Scorer scorer(store, tax, levels, decay);

  std::vector<Basket> history{Basket{{*tax.find(34)}},
                              Basket{{*tax.find(30), *tax.find(36)}}};
  for (UserId u : {0, 1}) {
    auto q = scorer.query(u, history);
    for (std::int64_t ext = 30; ext <= 37; ++ext) {
      const NodeId p = *tax.find(ext);
      CHECK(scorer.score(q, p) ==
            doctest::Approx(store.affinity(tax, u, p, history, decay, levels))
                .epsilon(1e-12));
    }
    // Category nodes are scoreable too; their effective vector is shorter.
    CHECK(std::isfinite(scorer.score(q, *tax.find(20))));
  }

  // Histories longer than the order only use the most recent transactions.
  std::vector<Basket> longer = history;
  longer.push_back(Basket{{*tax.find(33)}});
  auto q2 = scorer.query(0, longer);
  auto q1 = scorer.query(0, history);
  CHECK(q1 == q2);
}

TEST_CASE("exhaustive ranking orders by score with id tie breaks") {
  auto tax = test::small_tree();
  FactorStore store(1, tax.node_count(), 2);
  // All-zero factors: every product scores 0, so ranking must be by id.
  Scorer scorer(store, tax, 1, DecayWeights::make(0, 1.0));
  auto q = scorer.query(0, {});

  auto outcome = rank_exhaustive(scorer, q, 0);
  CHECK(outcome.level == 0);
  CHECK(outcome.universe == tax.leaf_count());
  CHECK(outcome.evaluations == tax.leaf_count());
  REQUIRE(outcome.ranking.size() == tax.leaf_count());
  for (std::size_t i = 1; i < outcome.ranking.size(); ++i)
    CHECK(outcome.ranking[i - 1].node < outcome.ranking[i].node);

  // With distinct scores, order follows the scores.
  FactorStore graded(1, tax.node_count(), 1);
  graded.user_factors().row(0)[0] = 1.0;
  for (std::int64_t ext = 30; ext <= 37; ++ext)
    graded.offsets(FactorStore::Kind::item).row(*tax.find(ext))[0] =
        static_cast<double>(ext % 3);
  Scorer gs(graded, tax, 1, DecayWeights::make(0, 1.0));
  auto gq = gs.query(0, {});
  auto graded_out = rank_exhaustive(gs, gq, 0);
  for (std::size_t i = 1; i < graded_out.ranking.size(); ++i) {
    CHECK(graded_out.ranking[i - 1].score >= graded_out.ranking[i].score);
    if (graded_out.ranking[i - 1].score == graded_out.ranking[i].score)
      CHECK(graded_out.ranking[i - 1].node < graded_out.ranking[i].node);
  }

  // Category levels rank their own nodes.
  auto cats = rank_exhaustive(scorer, q, 1);
  CHECK(cats.universe == tax.nodes_at_level(1).size());
}

TEST_CASE("cascade admission follows the per level keep counts") {
  // Wider tree so the keep arithmetic is visible: 4 tops, 3 subs each,
  // 4 products each = 48 products.
  std::vector<NodeRecord> recs;
  std::int64_t ext = 100;
  for (int a = 0; a < 4; ++a) {
    const std::int64_t top = ext++;
    recs.push_back({top, -1, "top"});
    for (int b = 0; b < 3; ++b) {
      const std::int64_t sub = ext++;
      recs.push_back({sub, top, "sub"});
      for (int c = 0; c < 4; ++c) recs.push_back({ext++, sub, "p"});
    }
  }
  auto tax = Taxonomy::build(recs);
  REQUIRE(tax.depth() == 3);
  REQUIRE(tax.leaf_count() == 48);

  FactorStore store(1, tax.node_count(), 4);
  store.randomize(5, 0.5);
  Scorer scorer(store, tax, tax.depth() + 1, DecayWeights::make(0, 1.0));
  auto q = scorer.query(0, {});

  CascadeSpec spec = CascadeSpec::uniform(0.5);
  auto outcome = rank_cascaded(scorer, q, spec, 0);

  // Level 2: 4 tops scored, ceil(0.5 * 4) = 2 kept. Level 1: their 6 subs
  // scored, ceil(0.5 * 12) = 6 kept (all). Level 0: 24 products scored,
  // ceil(0.5 * 48) = 24 kept.
  REQUIRE(outcome.level_trace.size() == 3);
  CHECK(outcome.level_trace[0].size() == 2);
  CHECK(outcome.level_trace[1].size() == 6);
  CHECK(outcome.level_trace[2].size() == 24);
  CHECK(outcome.evaluations == 4 + 6 + 24);
  CHECK(outcome.universe == 48);
  REQUIRE(outcome.ranking.size() == 24);

  // The kept tops are the two best by the same scores.
  auto tops = rank_exhaustive(scorer, q, 2);
  std::set<NodeId> kept;
  for (const auto& sn : outcome.level_trace[0]) kept.insert(sn.node);
  CHECK(kept == std::set<NodeId>{tops.ranking[0].node, tops.ranking[1].node});

  // Every admitted product descends from an admitted subcategory.
  std::set<NodeId> subs;
  for (const auto& sn : outcome.level_trace[1]) subs.insert(sn.node);
  for (const auto& sn : outcome.ranking) {
    CHECK(subs.count(tax.parent(sn.node)) == 1);
    auto chain = cascade_chain(tax, sn.node);
    REQUIRE(chain.size() == 2);
    CHECK(kept.count(chain[0]) == 1);
    CHECK(chain[1] == tax.parent(sn.node));
  }

  // Admitted products are ranked exactly as the exhaustive order restricted
  // to the admitted set.
  auto full = rank_exhaustive(scorer, q, 0);
  std::vector<NodeId> expect;
  std::set<NodeId> admitted;
  for (const auto& sn : outcome.ranking) admitted.insert(sn.node);
  for (const auto& sn : full.ranking)
    if (admitted.count(sn.node)) expect.push_back(sn.node);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(outcome.ranking[i].node == expect[i]);
}

TEST_CASE("full fractions make the cascade exhaustive") {
  auto tax = test::small_tree();
  FactorStore store(3, tax.node_count(), 4);
  store.randomize(21, 0.4);
  Scorer scorer(store, tax, tax.depth() + 1, DecayWeights::make(1, 1.0));

  std::vector<Basket> history{Basket{{*tax.find(32)}}};
  for (UserId u : {0, 1, 2}) {
    auto q = scorer.query(u, history);
    auto casc = rank_cascaded(scorer, q, CascadeSpec::uniform(1.0), 0);
    auto full = rank_exhaustive(scorer, q, 0);
    REQUIRE(casc.ranking.size() == full.ranking.size());
    for (std::size_t i = 0; i < full.ranking.size(); ++i) {
      CHECK(casc.ranking[i].node == full.ranking[i].node);
      CHECK(casc.ranking[i].score == full.ranking[i].score);
    }
  }
}

TEST_CASE("cascades can stop at category levels") {
  auto tax = test::small_tree();
  FactorStore store(1, tax.node_count(), 3);
  store.randomize(31, 0.4);
  Scorer scorer(store, tax, tax.depth() + 1, DecayWeights::make(0, 1.0));
  auto q = scorer.query(0, {});

  auto outcome = rank_cascaded(scorer, q, CascadeSpec::uniform(0.5), 1);
  CHECK(outcome.level == 1);
  CHECK(outcome.universe == tax.nodes_at_level(1).size());
  for (const auto& sn : outcome.ranking) CHECK(tax.level(sn.node) == 1);

  // Target at or above the start level is rejected, as are bad fractions.
  CHECK_THROWS_AS(rank_cascaded(scorer, q, CascadeSpec::uniform(0.5),
                                tax.depth()),
                  Error);
  CHECK_THROWS_AS(rank_cascaded(scorer, q, CascadeSpec::uniform(0.0), 0),
                  Error);
  CHECK_THROWS_AS(rank_cascaded(scorer, q, CascadeSpec::uniform(1.2), 0),
                  Error);
}

TEST_CASE("per level fractions override the default") {
  auto tax = test::small_tree();  // levels: 2 tops, 4 subs, 8 products
  FactorStore store(1, tax.node_count(), 2);
  store.randomize(41, 0.3);
  Scorer scorer(store, tax, tax.depth() + 1, DecayWeights::make(0, 1.0));
  auto q = scorer.query(0, {});

  CascadeSpec spec;
  spec.default_fraction = 1.0;
  const double pass = std::nan("");
  spec.per_level = {0.25, pass, 0.5};  // level 0 keeps 2 of 8; level 2 half
  CHECK(spec.fraction(0) == 0.25);
  CHECK(spec.fraction(1) == 1.0);  // NaN entries fall back to the default
  CHECK(spec.fraction(2) == 0.5);
  CHECK(spec.fraction(9) == 1.0);  // beyond the vector uses the default

  auto outcome = rank_cascaded(scorer, q, spec, 0);
  // Level 2: 2 tops, keep ceil(0.5 * 2) = 1. Level 1: 2 subs scored, keep
  // ceil(1.0 * 4) = 4 clamped to 2. Level 0: 4 products, keep ceil(0.25 * 8)
  // = 2.
  REQUIRE(outcome.level_trace.size() == 3);
  CHECK(outcome.level_trace[0].size() == 1);
  CHECK(outcome.level_trace[1].size() == 2);
  CHECK(outcome.ranking.size() == 2);
  CHECK(outcome.evaluations == 2 + 2 + 4);
}

TEST_CASE("top k recommendations truncate the chosen ranking") {
  auto tax = test::small_tree();
  FactorStore store(2, tax.node_count(), 3);
  store.randomize(51, 0.4);
  Scorer scorer(store, tax, tax.depth() + 1, DecayWeights::make(1, 1.0));
  std::vector<Basket> history{Basket{{*tax.find(35)}}};

  auto full = recommend_topk(scorer, 1, history, 3, nullptr);
  REQUIRE(full.size() == 3);
  auto q = scorer.query(1, history);
  auto exhaustive = rank_exhaustive(scorer, q, 0);
  for (int i = 0; i < 3; ++i) {
    CHECK(full[i].node == exhaustive.ranking[i].node);
    CHECK(full[i].score == exhaustive.ranking[i].score);
  }

  CascadeSpec spec = CascadeSpec::uniform(0.5);
  auto pruned = recommend_topk(scorer, 1, history, 100, &spec);
  // Keep counts: tops ceil(0.5*2)=1, subs ceil(0.5*4)=2, products
  // ceil(0.5*8)=4; a request larger than the admitted set returns all of it.
  CHECK(pruned.size() == 4);
}

TEST_CASE("scorer rejects a store that does not match the taxonomy") {
  auto tax = test::small_tree();
  FactorStore store(1, tax.node_count() + 3, 2);
  try {
    Scorer scorer(store, tax, 1, DecayWeights::make(0, 1.0));
    FAIL("expected dimension_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_mismatch);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace taxrec
