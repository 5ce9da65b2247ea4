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

#include "taxrec/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_set>

namespace taxrec {

SplitOutcome split(const TransactionLog& log, const SplitSpec& spec) {
  if (!log.finalized())
    fail(ErrorCode::invalid_argument, "log must be finalized before splitting");
  if (spec.mu <= 0.0 || spec.mu >= 1.0)
    fail(ErrorCode::invalid_argument, "split fraction must lie in (0, 1)");
  if (spec.sigma < 0.0)
    fail(ErrorCode::invalid_argument, "split spread must be >= 0");
  if (spec.holdout < 1)
    fail(ErrorCode::invalid_argument, "holdout length must be >= 1");

  SplitOutcome out;
  out.validation.resize(log.user_count());
  out.test.resize(log.user_count());
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> dist(spec.mu, spec.sigma);

  for (UserId u = 0; u < static_cast<UserId>(log.user_count()); ++u) {
    out.train.add_user(log.external_user_id(u));
    auto tx = log.transactions(u);
    const double f = std::clamp(dist(rng), 0.0, 1.0);
    const auto n_train = static_cast<std::size_t>(
        std::llround(f * static_cast<double>(tx.size())));
    for (std::size_t t = 0; t < n_train; ++t)
      out.train.add_basket(u, tx[t].items);
    const std::size_t holdout = static_cast<std::size_t>(spec.holdout);
    // Validation: last `holdout` train transactions, oldest first.
    for (std::size_t t = n_train - std::min(holdout, n_train); t < n_train; ++t)
      out.validation[u].push_back(tx[t]);
    // Test: first `holdout` post-train transactions.
    for (std::size_t t = n_train;
         t < std::min(tx.size(), n_train + holdout); ++t)
      out.test[u].push_back(tx[t]);
  }
  out.train.finalize();
  return out;
}

std::vector<std::vector<Basket>> filter_repeats(
    const std::vector<std::vector<Basket>>& heldout,
    const TransactionLog& train) {
  std::vector<std::vector<Basket>> out(heldout.size());
  for (std::size_t u = 0; u < heldout.size(); ++u) {
    std::unordered_set<NodeId> bought;
    for (const Basket& b : train.transactions(static_cast<UserId>(u)))
      bought.insert(b.items.begin(), b.items.end());
    for (const Basket& b : heldout[u]) {
      Basket kept;
      for (NodeId item : b.items)
        if (!bought.count(item)) kept.items.push_back(item);
      if (!kept.items.empty()) out[u].push_back(std::move(kept));
    }
  }
  return out;
}

double auc_from_ranks(std::vector<int> ranks, std::size_t universe) {
  if (ranks.empty() || ranks.size() >= universe)
    fail(ErrorCode::invalid_argument,
         "ranking quality needs both positives and non-positives");
  std::sort(ranks.begin(), ranks.end());
  const std::size_t pos = ranks.size();
  const std::size_t neg = universe - pos;
  // With `s` better-ranked positives, a positive at rank r beats
  // neg - (r - 1 - s) of the negatives.
  double correct = 0.0;
  for (std::size_t s = 0; s < pos; ++s) {
    const auto above = static_cast<double>(ranks[s] - 1) - static_cast<double>(s);
    correct += static_cast<double>(neg) - above;
  }
  return correct / (static_cast<double>(pos) * static_cast<double>(neg));
}

double mean_rank(std::span<const int> ranks) {
  if (ranks.empty())
    fail(ErrorCode::invalid_argument, "mean rank of an empty set");
  double sum = 0.0;
  for (int r : ranks) sum += r;
  return sum / static_cast<double>(ranks.size());
}

namespace {

struct UserMetrics {
  std::optional<double> auc;
  std::optional<double> mrank;
  std::vector<std::optional<double>> level_auc;  // indexed by level
  std::vector<int> cold_ranks;
  std::uint64_t evaluations = 0;
};

// Ranks of `positives` within a fully scored, contiguous id block.
// rank(x) = 1 + #{better score} + #{equal score, smaller id}.
std::vector<int> ranks_in_block(std::span<const double> scores, NodeId base,
                                std::span<const NodeId> positives) {
  std::vector<int> ranks;
  ranks.reserve(positives.size());
  for (NodeId p : positives) {
    const double sp = scores[p - base];
    int rank = 1;
    for (std::size_t x = 0; x < scores.size(); ++x) {
      if (scores[x] > sp ||
          (scores[x] == sp && static_cast<NodeId>(x) + base < p))
        ++rank;
    }
    ranks.push_back(rank);
  }
  return ranks;
}

// Ranks when only `admitted` (best-first) was scored: admitted nodes take
// the leading ranks, everything else follows in ascending id order.
std::vector<int> ranks_in_partial(const std::vector<ScoredNode>& admitted,
                                  std::span<const NodeId> level_nodes,
                                  std::span<const NodeId> positives) {
  const NodeId base = level_nodes.empty() ? 0 : level_nodes.front();
  std::vector<char> is_admitted(level_nodes.size(), 0);
  std::vector<int> admitted_rank(level_nodes.size(), 0);
  for (std::size_t i = 0; i < admitted.size(); ++i) {
    is_admitted[admitted[i].node - base] = 1;
    admitted_rank[admitted[i].node - base] = static_cast<int>(i) + 1;
  }
  std::vector<int> ranks;
  ranks.reserve(positives.size());
  for (NodeId p : positives) {
    if (is_admitted[p - base]) {
      ranks.push_back(admitted_rank[p - base]);
      continue;
    }
    int behind = 0;
    for (NodeId x = base; x < p; ++x)
      if (!is_admitted[x - base]) ++behind;
    ranks.push_back(static_cast<int>(admitted.size()) + behind + 1);
  }
  return ranks;
}

std::vector<NodeId> ancestors_at_level(const Taxonomy& tax,
                                       std::span<const NodeId> products,
                                       int level) {
  std::vector<NodeId> out;
  for (NodeId p : products) {
    auto path = tax.ancestor_path(p);
    out.push_back(path[level]);  // products sit at level 0
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

EvalReport evaluate(const FactorStore& store, const Taxonomy& tax,
                    const TransactionLog& train,
                    const std::vector<std::vector<Basket>>& heldout,
                    const EvalConfig& config) {
  if (heldout.size() != train.user_count())
    fail(ErrorCode::invalid_argument,
         "held-out slices must parallel the train log users");
  if (store.user_count() != train.user_count())
    fail(ErrorCode::dimension_mismatch,
         "factor store does not match the user set");

  const int levels =
      config.levels < 0 ? tax.depth() + 1 : config.levels;
  Scorer scorer(store, tax, levels, config.decay);

  // A product is cold when no train transaction of any user contains it.
  std::vector<char> trained(tax.node_count(), 0);
  for (std::size_t i = 0; i < train.triple_count(); ++i)
    trained[train.triple(i).item] = 1;

  const auto products = tax.nodes_at_level(0);
  const NodeId product_base = products.front();

  std::vector<UserMetrics> metrics(train.user_count());

  auto eval_user = [&](UserId u) {
    const auto& slice = heldout[u];
    if (slice.empty()) return;

    std::vector<NodeId> positives;
    for (const Basket& b : slice)
      positives.insert(positives.end(), b.items.begin(), b.items.end());
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()),
                    positives.end());
    if (positives.empty()) return;

    UserMetrics& m = metrics[u];
    m.level_auc.resize(tax.depth() + 1);

    auto past = train.transactions(u);
    std::vector<Basket> history;
    for (std::size_t n = 0;
         n < std::min<std::size_t>(past.size(), config.decay.order); ++n)
      history.push_back(past[past.size() - 1 - n]);
    const std::vector<double> q = scorer.query(u, history);

    std::vector<int> product_ranks;
    if (config.mode == RankMode::exhaustive) {
      std::vector<double> scores(products.size());
      for (std::size_t i = 0; i < products.size(); ++i)
        scores[i] = scorer.score(q, products[i]);
      m.evaluations += products.size();
      product_ranks = ranks_in_block(scores, product_base, positives);

      if (config.category_metrics) {
        for (int level = 1; level < tax.depth(); ++level) {
          auto level_nodes = tax.nodes_at_level(level);
          auto cat_pos = ancestors_at_level(tax, positives, level);
          std::vector<double> cat_scores(level_nodes.size());
          for (std::size_t i = 0; i < level_nodes.size(); ++i)
            cat_scores[i] = scorer.score(q, level_nodes[i]);
          m.evaluations += level_nodes.size();
          if (cat_pos.size() < level_nodes.size()) {
            auto cat_ranks =
                ranks_in_block(cat_scores, level_nodes.front(), cat_pos);
            m.level_auc[level] =
                auc_from_ranks(std::move(cat_ranks), level_nodes.size());
          }
        }
      }
    } else {
      RankOutcome outcome = rank_cascaded(scorer, q, config.cascade, 0);
      m.evaluations += outcome.evaluations;
      product_ranks = ranks_in_partial(outcome.ranking, products, positives);

      if (config.category_metrics) {
        for (int level = 1; level < tax.depth(); ++level) {
          auto level_nodes = tax.nodes_at_level(level);
          auto cat_pos = ancestors_at_level(tax, positives, level);
          const auto& admitted =
              outcome.level_trace[tax.depth() - 1 - level];
          if (cat_pos.size() < level_nodes.size()) {
            auto cat_ranks = ranks_in_partial(admitted, level_nodes, cat_pos);
            m.level_auc[level] =
                auc_from_ranks(std::move(cat_ranks), level_nodes.size());
          }
        }
      }
    }

    if (positives.size() < products.size()) {
      m.auc = auc_from_ranks(product_ranks, products.size());
      m.mrank = mean_rank(product_ranks);
    }
    if (config.category_metrics) {
      for (std::size_t i = 0; i < positives.size(); ++i)
        if (!trained[positives[i]]) m.cold_ranks.push_back(product_ranks[i]);
    }
  };

  const auto user_count = static_cast<UserId>(train.user_count());
  if (config.threads <= 1) {
    for (UserId u = 0; u < user_count; ++u) eval_user(u);
  } else {
    std::vector<std::thread> pool;
    std::atomic<UserId> cursor{0};
    for (int w = 0; w < config.threads; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const UserId u = cursor.fetch_add(64);
          if (u >= user_count) return;
          const UserId end = std::min<UserId>(u + 64, user_count);
          for (UserId v = u; v < end; ++v) eval_user(v);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // Aggregation in user order keeps the report independent of threading.
  EvalReport report;
  report.level_auc.assign(tax.depth() + 1, 0.0);
  std::vector<std::size_t> level_users(tax.depth() + 1, 0);
  double auc_sum = 0.0, mrank_sum = 0.0, cold_sum = 0.0;
  for (UserId u = 0; u < user_count; ++u) {
    const UserMetrics& m = metrics[u];
    report.evaluations += m.evaluations;
    if (m.auc) {
      auc_sum += *m.auc;
      mrank_sum += *m.mrank;
      ++report.users;
    }
    for (std::size_t level = 0; level < m.level_auc.size(); ++level) {
      if (m.level_auc[level]) {
        report.level_auc[level] += *m.level_auc[level];
        ++level_users[level];
      }
    }
    for (int r : m.cold_ranks) cold_sum += r;
    report.cold_count += m.cold_ranks.size();
  }
  if (report.users > 0) {
    report.auc = auc_sum / static_cast<double>(report.users);
    report.meanrank = mrank_sum / static_cast<double>(report.users);
  }
  for (std::size_t level = 0; level < report.level_auc.size(); ++level)
    if (level_users[level] > 0)
      report.level_auc[level] /= static_cast<double>(level_users[level]);
  if (report.cold_count > 0)
    report.cold_rank = cold_sum / static_cast<double>(report.cold_count);
  return report;
}

}  // namespace taxrec
