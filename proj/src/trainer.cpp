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

#include "taxrec/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "taxrec/eval.hpp"

namespace taxrec {

int ModelConfig::resolved_levels(const Taxonomy& tax) const {
  return update_levels < 0 ? tax.depth() + 1 : update_levels;
}

void ModelConfig::validate(const Taxonomy& tax) const {
  if (factors < 1)
    fail(ErrorCode::invalid_argument, "factor dimension must be >= 1");
  if (lambda < 0.0)
    fail(ErrorCode::invalid_argument, "regularization must be >= 0");
  if (epsilon <= 0.0)
    fail(ErrorCode::invalid_argument, "step size must be > 0");
  if (alpha < 0.0)
    fail(ErrorCode::invalid_argument, "short-term weight must be >= 0");
  if (max_prev_transactions < 0)
    fail(ErrorCode::invalid_argument, "history order must be >= 0");
  if (update_levels != -1 &&
      (update_levels < 1 || update_levels > tax.depth() + 1))
    fail(ErrorCode::invalid_argument,
         "update levels must be -1 or lie in [1, depth + 1]");
  if (sibling_mix < 0.0 || sibling_mix > 1.0)
    fail(ErrorCode::invalid_argument, "sibling mix must lie in [0, 1]");
  if (epochs < 0) fail(ErrorCode::invalid_argument, "epochs must be >= 0");
  if (threads < 1) fail(ErrorCode::invalid_argument, "threads must be >= 1");
  if (cache_threshold < 0.0)
    fail(ErrorCode::invalid_argument, "cache threshold must be >= 0");
  if (init_stddev <= 0.0)
    fail(ErrorCode::invalid_argument, "init spread must be > 0");
}

namespace {

struct Workspace {
  std::vector<double> vu, q, veff_i, veff_j, delta;
  std::vector<double> grad_user, grad_pos, grad_neg, grad_next;
  std::vector<std::pair<NodeId, double>> hist;  // distinct items + decay coef
  std::vector<std::vector<double>> hist_eff;

  explicit Workspace(int K)
      : vu(K), q(K), veff_i(K), veff_j(K), delta(K), grad_user(K),
        grad_pos(K), grad_neg(K), grad_next(K) {}
};

// Distinct items of the `order` transactions before t with their decay
// coefficients; an item in several recent baskets accumulates one coefficient
// so its factor row is touched once per update.
void build_history(const TransactionLog& log, const DecayWeights& decay,
                   UserId u, std::int32_t t, Workspace& ws) {
  ws.hist.clear();
  if (decay.order == 0 || t == 0) return;
  auto past = log.transactions(u);
  const int avail = std::min<std::int32_t>(decay.order, t);
  for (int n = 1; n <= avail; ++n) {
    const Basket& basket = past[t - n];
    const double w =
        decay.weights[n - 1] / static_cast<double>(basket.items.size());
    for (NodeId item : basket.items) {
      bool found = false;
      for (auto& [id, coef] : ws.hist) {
        if (id == item) {
          coef += w;
          found = true;
          break;
        }
      }
      if (!found) ws.hist.emplace_back(item, w);
    }
  }
}

struct LockSet {
  std::vector<std::shared_mutex> user, item, next;
  LockSet(std::size_t users, std::size_t nodes)
      : user(users), item(nodes), next(nodes) {}

  std::vector<std::shared_mutex>& of(FactorStore::Kind kind) {
    return kind == FactorStore::Kind::item ? item : next;
  }
};

// Thread-local pending deltas for internal (shared-ancestor) rows. A row is
// written back once its accumulated delta max-norm crosses the threshold, and
// unconditionally at epoch end.
struct InternalCache {
  Matrix delta;
  std::vector<double> norm;
  std::vector<char> dirty;
  std::vector<NodeId> rows;

  InternalCache(std::size_t internal_count, int K)
      : delta(internal_count, K), norm(internal_count, 0.0),
        dirty(internal_count, 0) {}
};

// Row access for one SGD step. The unlocked instantiation compiles to plain
// loads and stores; the arithmetic is shared so both paths apply identical
// update formulas.
template <bool kLocked>
struct RowAccess {
  FactorStore& store;
  const Taxonomy& tax;
  LockSet* locks = nullptr;
  InternalCache* item_cache = nullptr;
  InternalCache* next_cache = nullptr;
  double cache_threshold = 0.0;
  NodeId internal_count = 0;

  void load_user(UserId u, std::vector<double>& out) {
    auto row = store.user_factors().row(u);
    if constexpr (kLocked) {
      std::shared_lock lock(locks->user[u]);
      std::copy(row.begin(), row.end(), out.begin());
    } else {
      std::copy(row.begin(), row.end(), out.begin());
    }
  }

  void load_effective(FactorStore::Kind kind, NodeId node, int levels,
                      std::vector<double>& out) {
    const Matrix& m = store.offsets(kind);
    auto path = tax.ancestor_path(node, levels);
    for (std::size_t p = 0; p < path.size(); ++p) {
      auto row = m.row(path[p]);
      if constexpr (kLocked) {
        std::shared_lock lock(locks->of(kind)[path[p]]);
        if (p == 0)
          std::copy(row.begin(), row.end(), out.begin());
        else
          for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
      } else {
        if (p == 0)
          std::copy(row.begin(), row.end(), out.begin());
        else
          for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
      }
    }
  }

  void apply_user(UserId u, std::span<const double> g, double eps) {
    auto row = store.user_factors().row(u);
    if constexpr (kLocked) {
      std::unique_lock lock(locks->user[u]);
      for (std::size_t k = 0; k < g.size(); ++k) row[k] += eps * g[k];
    } else {
      for (std::size_t k = 0; k < g.size(); ++k) row[k] += eps * g[k];
    }
  }

  void apply_path(FactorStore::Kind kind, NodeId node, int levels,
                  std::span<const double> g, double eps) {
    Matrix& m = store.offsets(kind);
    for (NodeId a : tax.ancestor_path(node, levels)) {
      if constexpr (!kLocked) {
        auto row = m.row(a);
        for (std::size_t k = 0; k < g.size(); ++k) row[k] += eps * g[k];
      } else if (a >= internal_count || cache_threshold <= 0.0) {
        auto row = m.row(a);
        std::unique_lock lock(locks->of(kind)[a]);
        for (std::size_t k = 0; k < g.size(); ++k) row[k] += eps * g[k];
      } else {
        InternalCache& cache =
            kind == FactorStore::Kind::item ? *item_cache : *next_cache;
        auto pending = cache.delta.row(a);
        if (!cache.dirty[a]) {
          cache.dirty[a] = 1;
          cache.rows.push_back(a);
        }
        double norm = cache.norm[a];
        for (std::size_t k = 0; k < g.size(); ++k) {
          pending[k] += eps * g[k];
          norm = std::max(norm, std::fabs(pending[k]));
        }
        cache.norm[a] = norm;
        if (norm > cache_threshold) flush_row(kind, cache, a);
      }
    }
  }

  void flush_row(FactorStore::Kind kind, InternalCache& cache, NodeId a) {
    if constexpr (kLocked) {
      auto pending = cache.delta.row(a);
      auto row = store.offsets(kind).row(a);
      {
        std::unique_lock lock(locks->of(kind)[a]);
        for (std::size_t k = 0; k < pending.size(); ++k) row[k] += pending[k];
      }
      std::fill(pending.begin(), pending.end(), 0.0);
      cache.norm[a] = 0.0;
    }
  }

  void flush_all() {
    if constexpr (kLocked) {
      for (NodeId a : item_cache->rows)
        flush_row(FactorStore::Kind::item, *item_cache, a);
      item_cache->rows.clear();
      std::fill(item_cache->dirty.begin(), item_cache->dirty.end(), 0);
      for (NodeId a : next_cache->rows)
        flush_row(FactorStore::Kind::next, *next_cache, a);
      next_cache->rows.clear();
      std::fill(next_cache->dirty.begin(), next_cache->dirty.end(), 0);
    }
  }
};

// One pairwise update. Gradients are computed from pre-update values, then
// applied: user row, positive path, negative path, history paths.
template <bool kLocked>
double sgd_step(const TrainTuple& tup, const TransactionLog& log,
                const DecayWeights& decay, int levels, double lambda,
                double eps, RowAccess<kLocked>& rows, Workspace& ws) {
  const std::size_t K = ws.q.size();
  build_history(log, decay, tup.user, tup.t, ws);

  rows.load_user(tup.user, ws.vu);
  std::copy(ws.vu.begin(), ws.vu.end(), ws.q.begin());
  if (ws.hist_eff.size() < ws.hist.size())
    ws.hist_eff.resize(ws.hist.size(), std::vector<double>(K));
  for (std::size_t h = 0; h < ws.hist.size(); ++h) {
    rows.load_effective(FactorStore::Kind::next, ws.hist[h].first, levels,
                        ws.hist_eff[h]);
    const double coef = ws.hist[h].second;
    for (std::size_t k = 0; k < K; ++k) ws.q[k] += coef * ws.hist_eff[h][k];
  }
  rows.load_effective(FactorStore::Kind::item, tup.pos, levels, ws.veff_i);
  rows.load_effective(FactorStore::Kind::item, tup.neg, levels, ws.veff_j);

  double s_i = 0.0;
  for (std::size_t k = 0; k < K; ++k) s_i += ws.q[k] * ws.veff_i[k];
  double s_j = 0.0;
  for (std::size_t k = 0; k < K; ++k) s_j += ws.q[k] * ws.veff_j[k];
  const double d = s_i - s_j;
  const double c = 1.0 - stable_sigmoid(d);
  if (!std::isfinite(d) || !std::isfinite(c))
    fail(ErrorCode::divergence, "non-finite pairwise score during training");

  for (std::size_t k = 0; k < K; ++k) ws.delta[k] = ws.veff_i[k] - ws.veff_j[k];
  for (std::size_t k = 0; k < K; ++k)
    ws.grad_user[k] = c * ws.delta[k] - lambda * ws.vu[k];
  for (std::size_t k = 0; k < K; ++k)
    ws.grad_pos[k] = c * ws.q[k] - lambda * ws.veff_i[k];
  for (std::size_t k = 0; k < K; ++k)
    ws.grad_neg[k] = -(c * ws.q[k]) - lambda * ws.veff_j[k];

  rows.apply_user(tup.user, ws.grad_user, eps);
  rows.apply_path(FactorStore::Kind::item, tup.pos, levels, ws.grad_pos, eps);
  rows.apply_path(FactorStore::Kind::item, tup.neg, levels, ws.grad_neg, eps);
  for (std::size_t h = 0; h < ws.hist.size(); ++h) {
    const double coef = ws.hist[h].second;
    for (std::size_t k = 0; k < K; ++k)
      ws.grad_next[k] = c * ws.delta[k] * coef - lambda * ws.hist_eff[h][k];
    rows.apply_path(FactorStore::Kind::next, ws.hist[h].first, levels,
                    ws.grad_next, eps);
  }
  return c;
}

}  // namespace

TrainResult train(FactorStore& store, const TransactionLog& log,
                  const Taxonomy& tax, const ModelConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate(tax);
  if (!log.finalized())
    fail(ErrorCode::invalid_argument, "log must be finalized before training");
  if (log.triple_count() == 0)
    fail(ErrorCode::invalid_argument, "cannot train on an empty log");
  if (store.user_count() != log.user_count() ||
      store.node_count() != tax.node_count())
    fail(ErrorCode::dimension_mismatch,
         "factor store does not match the corpus");

  const int levels = config.resolved_levels(tax);
  const DecayWeights decay =
      DecayWeights::make(config.max_prev_transactions, config.alpha);
  store.randomize(derive_seed(config.seed, "init"), config.init_stddev);

  const auto internal_count = static_cast<NodeId>(tax.internal_count());
  const std::uint64_t budget = config.tuple_budget;
  TrainResult result;

  if (config.threads == 1) {
    TupleSampler sampler(log, tax, config.sibling_mix, levels,
                         derive_seed(config.seed, "sampler"));
    RowAccess<false> rows{store, tax};
    Workspace ws(config.factors);
    std::vector<TrainTuple> buf;
    bool budget_hit = false;

    for (int epoch = 0; epoch < config.epochs && !budget_hit; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      double c_sum = 0.0;
      std::uint64_t applied = 0;
      for (std::size_t draw = 0; draw < log.triple_count(); ++draw) {
        buf.clear();
        sampler.next(buf);
        for (const TrainTuple& tup : buf) {
          if (budget != 0 && result.total_tuples == budget) {
            budget_hit = true;
            break;
          }
          c_sum += sgd_step(tup, log, decay, levels, config.lambda,
                            config.epsilon, rows, ws);
          ++applied;
          ++result.total_tuples;
        }
        if (budget_hit) break;
      }
      if (!store.all_finite())
        fail(ErrorCode::divergence,
             "factors diverged in epoch " + std::to_string(epoch));
      EpochStats stats;
      stats.epoch = epoch;
      stats.tuples = applied;
      stats.mean_c = applied ? c_sum / static_cast<double>(applied) : 0.0;
      stats.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.epochs.push_back(stats);
      if (on_epoch) on_epoch(stats);
    }
    return result;
  }

  // Parallel path: row-level reader/writer locks, product and user rows
  // written through, internal rows batched per thread.
  const int T = config.threads;
  LockSet locks(store.user_count(), store.node_count());
  std::vector<TupleSampler> samplers;
  std::vector<InternalCache> item_caches, next_caches;
  std::vector<Workspace> workspaces;
  samplers.reserve(T);
  for (int w = 0; w < T; ++w) {
    samplers.emplace_back(log, tax, config.sibling_mix, levels,
                          derive_seed(config.seed, "sampler") ^
                              static_cast<std::uint64_t>(w));
    item_caches.emplace_back(internal_count, config.factors);
    next_caches.emplace_back(internal_count, config.factors);
    workspaces.emplace_back(config.factors);
  }

  std::atomic<std::uint64_t> budget_used{0};
  std::atomic<bool> stop{false};

  for (int epoch = 0; epoch < config.epochs && !stop.load(); ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> c_sums(T, 0.0);
    std::vector<std::uint64_t> applied(T, 0);
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::atomic<bool> abort{false};

    const std::size_t base_draws = log.triple_count() / T;
    const std::size_t extra = log.triple_count() % T;

    auto work = [&](int w) {
      RowAccess<true> rows{store,
                           tax,
                           &locks,
                           &item_caches[w],
                           &next_caches[w],
                           config.cache_threshold,
                           internal_count};
      try {
        std::vector<TrainTuple> buf;
        const std::size_t draws =
            base_draws + (static_cast<std::size_t>(w) < extra ? 1 : 0);
        for (std::size_t draw = 0; draw < draws && !abort.load(); ++draw) {
          buf.clear();
          samplers[w].next(buf);
          for (const TrainTuple& tup : buf) {
            if (budget != 0) {
              // Reserve a slot; slots past the budget are never applied, so
              // the cap is exact under any interleaving.
              const std::uint64_t slot =
                  budget_used.fetch_add(1, std::memory_order_relaxed);
              if (slot >= budget) {
                abort.store(true);
                stop.store(true);
                break;
              }
            }
            c_sums[w] += sgd_step(tup, log, decay, levels, config.lambda,
                                  config.epsilon, rows, workspaces[w]);
            ++applied[w];
          }
        }
        rows.flush_all();
      } catch (...) {
        std::scoped_lock lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        stop.store(true);
      }
    };

    std::vector<std::thread> pool;
    pool.reserve(T);
    for (int w = 0; w < T; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    if (!store.all_finite())
      fail(ErrorCode::divergence,
           "factors diverged in epoch " + std::to_string(epoch));

    EpochStats stats;
    stats.epoch = epoch;
    for (int w = 0; w < T; ++w) {
      stats.tuples += applied[w];
      stats.mean_c += c_sums[w];
    }
    stats.mean_c =
        stats.tuples ? stats.mean_c / static_cast<double>(stats.tuples) : 0.0;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.total_tuples += stats.tuples;
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

double train_step(FactorStore& store, const TransactionLog& log,
                  const Taxonomy& tax, const ModelConfig& config,
                  const TrainTuple& tuple) {
  config.validate(tax);
  if (!log.finalized())
    fail(ErrorCode::invalid_argument, "log must be finalized before training");
  if (store.user_count() != log.user_count() ||
      store.node_count() != tax.node_count())
    fail(ErrorCode::dimension_mismatch,
         "factor store does not match the corpus");
  if (tuple.user < 0 || tuple.user >= static_cast<UserId>(log.user_count()) ||
      tuple.t < 0 ||
      tuple.t >= static_cast<std::int32_t>(log.transactions(tuple.user).size()))
    fail(ErrorCode::invalid_argument, "tuple outside the log");

  const int levels = config.resolved_levels(tax);
  const DecayWeights decay =
      DecayWeights::make(config.max_prev_transactions, config.alpha);
  RowAccess<false> rows{store, tax};
  Workspace ws(store.factor_dim());
  return sgd_step(tuple, log, decay, levels, config.lambda, config.epsilon,
                  rows, ws);
}

CvOutcome cross_validate(const TransactionLog& train_log, const Taxonomy& tax,
                         const ModelConfig& base,
                         const std::vector<CvCandidate>& candidates,
                         int holdout) {
  if (candidates.empty())
    fail(ErrorCode::invalid_argument, "no hyperparameter candidates");
  if (holdout < 1)
    fail(ErrorCode::invalid_argument, "holdout length must be >= 1");

  TransactionLog inner;
  std::vector<std::vector<Basket>> val(train_log.user_count());
  const auto h = static_cast<std::size_t>(holdout);
  bool any_val = false;
  for (UserId u = 0; u < static_cast<UserId>(train_log.user_count()); ++u) {
    inner.add_user(train_log.external_user_id(u));
    auto tx = train_log.transactions(u);
    if (tx.size() >= h + 1) {
      for (std::size_t t = 0; t < tx.size() - h; ++t)
        inner.add_basket(u, tx[t].items);
      for (std::size_t t = tx.size() - h; t < tx.size(); ++t)
        val[u].push_back(tx[t]);
      any_val = true;
    } else {
      for (const Basket& b : tx) inner.add_basket(u, b.items);
    }
  }
  inner.finalize();
  if (inner.triple_count() == 0 || !any_val)
    fail(ErrorCode::invalid_argument,
         "not enough history to hold out a validation slice");

  EvalConfig ec;
  ec.levels = base.update_levels;
  ec.decay = DecayWeights::make(base.max_prev_transactions, base.alpha);
  ec.threads = base.threads;
  ec.category_metrics = false;

  CvOutcome out;
  out.best = base;
  double best_auc = -1.0;
  for (const CvCandidate& cand : candidates) {
    ModelConfig cfg = base;
    cfg.lambda = cand.lambda;
    cfg.factors = cand.factors;
    FactorStore store(train_log.user_count(), tax.node_count(), cfg.factors);
    train(store, inner, tax, cfg);
    const EvalReport report = evaluate(store, tax, inner, val, ec);
    out.candidate_auc.push_back(report.auc);
    if (report.auc > best_auc) {
      best_auc = report.auc;
      out.best = cfg;
    }
  }
  return out;
}

}  // namespace taxrec
