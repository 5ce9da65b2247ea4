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

#include "taxrec/factors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace taxrec {

DecayWeights DecayWeights::make(int order, double alpha) {
  if (order < 0)
    fail(ErrorCode::invalid_argument, "history order must be >= 0");
  if (alpha < 0.0)
    fail(ErrorCode::invalid_argument, "history weight must be >= 0");
  DecayWeights d;
  d.order = order;
  d.alpha = alpha;
  d.weights.reserve(order);
  for (int n = 1; n <= order; ++n)
    d.weights.push_back(alpha * std::exp(-static_cast<double>(n) / order));
  return d;
}

FactorStore::FactorStore(std::size_t user_count, std::size_t node_count,
                         int factor_dim)
    : factor_dim_(factor_dim),
      user_factors_(user_count, factor_dim),
      item_offsets_(node_count, factor_dim),
      next_offsets_(node_count, factor_dim) {
  if (factor_dim < 1)
    fail(ErrorCode::invalid_argument, "factor dimension must be >= 1");
}

void FactorStore::randomize(std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  user_factors_.fill_gaussian(stddev, rng);
  item_offsets_.fill_gaussian(stddev, rng);
  next_offsets_.fill_gaussian(stddev, rng);
}

void FactorStore::effective_factor(const Taxonomy& tax, NodeId node, Kind kind,
                                   int levels, std::span<double> out) const {
  const Matrix& m = offsets(kind);
  auto path = tax.ancestor_path(node, levels);
  auto first = m.row(path[0]);
  for (int k = 0; k < factor_dim_; ++k) out[k] = first[k];
  for (std::size_t p = 1; p < path.size(); ++p) {
    auto row = m.row(path[p]);
    for (int k = 0; k < factor_dim_; ++k) out[k] += row[k];
  }
}

double FactorStore::affinity(const Taxonomy& tax, UserId u, NodeId candidate,
                             std::span<const Basket> history,
                             const DecayWeights& decay, int levels) const {
  if (history.size() > static_cast<std::size_t>(decay.order))
    fail(ErrorCode::invalid_argument, "more history than the model order");
  const int K = factor_dim_;
  std::vector<double> cand(K), prev(K);
  effective_factor(tax, candidate, Kind::item, levels, cand);

  auto vu = user_factors_.row(u);
  double score = 0.0;
  for (int k = 0; k < K; ++k) score += vu[k] * cand[k];

  for (std::size_t n = 1; n <= history.size(); ++n) {
    const Basket& basket = history[n - 1];
    if (basket.items.empty())
      fail(ErrorCode::invalid_argument, "history basket must be non-empty");
    const double w =
        decay.weights[n - 1] / static_cast<double>(basket.items.size());
    double inner = 0.0;
    for (NodeId prev_item : basket.items) {
      effective_factor(tax, prev_item, Kind::next, levels, prev);
      for (int k = 0; k < K; ++k) inner += prev[k] * cand[k];
    }
    score += w * inner;
  }
  return score;
}

bool FactorStore::all_finite() const {
  return user_factors_.all_finite() && item_offsets_.all_finite() &&
         next_offsets_.all_finite();
}

namespace {

void write_row(std::ofstream& out, const char* kind, std::int64_t id, int level,
               std::span<const double> values) {
  out << kind << ',' << id << ',' << level;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  }
  out << '\n';
}

}  // namespace

void export_factors(const FactorStore& store, const Taxonomy& tax,
                    const TransactionLog* log, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");

  out << "kind,node_or_user_id,level";
  for (int k = 0; k < store.factor_dim(); ++k) out << ",f_" << k;
  out << '\n';

  for (std::size_t u = 0; u < store.user_count(); ++u) {
    const std::int64_t id =
        log ? log->external_user_id(static_cast<UserId>(u))
            : static_cast<std::int64_t>(u);
    write_row(out, "user", id, -1, store.user_factors().row(u));
  }
  for (std::size_t n = 0; n < store.node_count(); ++n) {
    const auto node = static_cast<NodeId>(n);
    write_row(out, "item_offset", tax.external_id(node), tax.level(node),
              store.offsets(FactorStore::Kind::item).row(n));
  }
  for (std::size_t n = 0; n < store.node_count(); ++n) {
    const auto node = static_cast<NodeId>(n);
    write_row(out, "next_offset", tax.external_id(node), tax.level(node),
              store.offsets(FactorStore::Kind::next).row(n));
  }
  std::vector<double> eff(store.factor_dim());
  for (std::size_t n = 0; n < store.node_count(); ++n) {
    const auto node = static_cast<NodeId>(n);
    store.effective_factor(tax, node, FactorStore::Kind::item, tax.depth() + 1,
                           eff);
    write_row(out, "item_effective", tax.external_id(node), tax.level(node),
              eff);
  }
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

}  // namespace taxrec
