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

#include "taxrec/generator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

#include "taxrec/data_io.hpp"

namespace taxrec {

void SynthSpec::validate() const {
  if (users < 1) fail(ErrorCode::invalid_argument, "users must be >= 1");
  if (branching.size() < 2)
    fail(ErrorCode::invalid_argument,
         "branching needs at least one category tier plus products");
  for (int b : branching)
    if (b < 1)
      fail(ErrorCode::invalid_argument, "branching factors must be >= 1");
  if (mean_transactions < 1.0)
    fail(ErrorCode::invalid_argument, "mean transactions must be >= 1");
  if (max_transactions < 1)
    fail(ErrorCode::invalid_argument, "max transactions must be >= 1");
  if (basket_min < 1 || basket_max < basket_min)
    fail(ErrorCode::invalid_argument, "need 1 <= basket_min <= basket_max");
  if (preference_alpha <= 0.0)
    fail(ErrorCode::invalid_argument, "preference concentration must be > 0");
  if (copurchase_strength < 0.0 || copurchase_strength > 1.0)
    fail(ErrorCode::invalid_argument, "co-purchase strength must lie in [0, 1]");
  if (popularity_skew < 0.0)
    fail(ErrorCode::invalid_argument, "popularity skew must be >= 0");
  if (cold_fraction < 0.0 || cold_fraction >= 1.0)
    fail(ErrorCode::invalid_argument, "cold fraction must lie in [0, 1)");
}

SynthSummary generate_corpus(const SynthSpec& spec, const std::string& dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create directory " + dir);

  const int tiers = static_cast<int>(spec.branching.size());
  std::vector<std::size_t> tier_size(tiers);
  std::vector<std::int64_t> tier_first(tiers);
  std::size_t running = 1;
  std::int64_t next_ext = 0;
  for (int t = 0; t < tiers; ++t) {
    running *= static_cast<std::size_t>(spec.branching[t]);
    tier_size[t] = running;
    tier_first[t] = next_ext;
    next_ext += static_cast<std::int64_t>(running);
  }
  const std::size_t products = tier_size[tiers - 1];
  const int per_bottom = spec.branching[tiers - 1];
  const std::size_t bottoms = tiers >= 2 ? tier_size[tiers - 2] : 1;

  std::vector<NodeRecord> records;
  records.reserve(next_ext);
  for (int t = 0; t < tiers; ++t) {
    for (std::size_t i = 0; i < tier_size[t]; ++i) {
      NodeRecord rec;
      rec.id = tier_first[t] + static_cast<std::int64_t>(i);
      rec.parent =
          t == 0 ? -1
                 : tier_first[t - 1] +
                       static_cast<std::int64_t>(i / spec.branching[t]);
      rec.label = t == tiers - 1
                      ? "item_" + std::to_string(i)
                      : "cat_" + std::to_string(t) + "_" + std::to_string(i);
      records.push_back(std::move(rec));
    }
  }

  std::mt19937_64 rng(spec.seed);

  // Cold products: randomly chosen, but never a whole bottom category, so
  // every category stays purchasable during the main phase.
  const auto cold_target = static_cast<std::size_t>(
      std::floor(spec.cold_fraction * static_cast<double>(products)));
  std::vector<char> is_cold(products, 0);
  std::vector<std::size_t> cold_list;
  {
    std::vector<std::size_t> pool(products);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> per_cat(products / per_bottom + 1, 0);
    for (std::size_t p : pool) {
      if (cold_list.size() == cold_target) break;
      const std::size_t cat = p / per_bottom;
      if (per_cat[cat] >= per_bottom - 1) continue;
      ++per_cat[cat];
      is_cold[p] = 1;
      cold_list.push_back(p);
    }
    std::sort(cold_list.begin(), cold_list.end());
  }

  // Per bottom category: power-law popularity over its warm products.
  std::vector<std::discrete_distribution<int>> cat_pick;
  cat_pick.reserve(products / per_bottom);
  for (std::size_t cat = 0; cat < products / per_bottom; ++cat) {
    std::vector<double> w(per_bottom);
    for (int r = 0; r < per_bottom; ++r) {
      const std::size_t p = cat * per_bottom + r;
      w[r] = is_cold[p] ? 0.0
                        : 1.0 / std::pow(static_cast<double>(r + 1),
                                         spec.popularity_skew);
    }
    cat_pick.emplace_back(w.begin(), w.end());
  }

  // Fixed companion: the next sibling category, cyclically.
  const int sibling_count = tiers >= 2 ? spec.branching[tiers - 2] : 1;
  auto companion = [&](std::size_t cat) {
    const std::size_t local = cat % sibling_count;
    return cat - local + (local + 1) % sibling_count;
  };

  const std::size_t top_count = tier_size[0];
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> basket_size(spec.basket_min,
                                                 spec.basket_max);
  std::gamma_distribution<double> gamma(spec.preference_alpha, 1.0);
  const double stop_p = 1.0 / spec.mean_transactions;

  const std::string tax_path = (fs::path(dir) / "taxonomy.tsv").string();
  const std::string tx_path = (fs::path(dir) / "transactions.txt").string();
  const std::string gt_path = (fs::path(dir) / "ground_truth.jsonl").string();
  save_taxonomy_records(records, tax_path);

  std::ofstream tx(tx_path);
  std::ofstream gt(gt_path);
  if (!tx || !gt) fail(ErrorCode::io_error, "cannot write corpus files");

  using nlohmann::json;
  gt << json{{"type", "summary"},
             {"users", spec.users},
             {"products", products},
             {"tiers", tier_size},
             {"seed", spec.seed}}
            .dump()
     << '\n';
  {
    json cold_ext = json::array();
    for (std::size_t p : cold_list)
      cold_ext.push_back(tier_first[tiers - 1] + static_cast<std::int64_t>(p));
    gt << json{{"type", "cold_items"}, {"items", cold_ext}}.dump() << '\n';
  }
  if (tiers >= 2) {
    json pairs = json::array();
    for (std::size_t cat = 0; cat < bottoms; ++cat)
      pairs.push_back({tier_first[tiers - 2] + static_cast<std::int64_t>(cat),
                       tier_first[tiers - 2] +
                           static_cast<std::int64_t>(companion(cat))});
    gt << json{{"type", "companion_map"}, {"pairs", pairs}}.dump() << '\n';
  }

  std::size_t total_tx = 0;
  std::vector<double> pref(top_count);
  const std::size_t cats_per_top =
      (products / per_bottom) / top_count;  // bottom categories per top cat

  for (std::size_t u = 0; u < spec.users; ++u) {
    double sum = 0.0;
    for (std::size_t c = 0; c < top_count; ++c) {
      pref[c] = gamma(rng);
      sum += pref[c];
    }
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      std::fill(pref.begin(), pref.end(), 1.0 / top_count);
      sum = 1.0;
    }
    for (double& p : pref) p /= sum;
    std::discrete_distribution<int> top_pick(pref.begin(), pref.end());

    std::geometric_distribution<int> extra(stop_p);
    const int n_tx = std::min(1 + extra(rng), spec.max_transactions);

    std::vector<std::size_t> prev_bottom;
    for (int t = 0; t < n_tx; ++t) {
      const int m = basket_size(rng);
      std::vector<std::size_t> picked;  // product indices, distinct
      std::vector<std::size_t> bottoms_now;
      for (int slot = 0; slot < m; ++slot) {
        for (int attempt = 0; attempt < 5; ++attempt) {
          std::size_t cat;
          if (!prev_bottom.empty() && coin(rng) < spec.copurchase_strength) {
            std::uniform_int_distribution<std::size_t> from(
                0, prev_bottom.size() - 1);
            cat = companion(prev_bottom[from(rng)]);
          } else {
            // Taxonomy-coherent choice: the top category follows the user's
            // preference vector; the bottom category within it is uniform, so
            // leaf co-occurrence alone carries only top-level taste.
            const auto top = static_cast<std::size_t>(top_pick(rng));
            std::uniform_int_distribution<std::size_t> within(
                0, cats_per_top - 1);
            cat = top * cats_per_top + within(rng);
          }
          const std::size_t product =
              cat * per_bottom + static_cast<std::size_t>(cat_pick[cat](rng));
          if (std::find(picked.begin(), picked.end(), product) ==
              picked.end()) {
            picked.push_back(product);
            bottoms_now.push_back(cat);
            break;
          }
        }
      }
      if (picked.empty()) {
        // All attempts collided (tiny catalogs only); fall back to the most
        // popular product of a preferred category.
        const auto top = static_cast<std::size_t>(top_pick(rng));
        picked.push_back(top * cats_per_top * per_bottom);
        bottoms_now.push_back(top * cats_per_top);
      }
      if (t == n_tx - 1 && !cold_list.empty() && coin(rng) < 0.5) {
        std::uniform_int_distribution<std::size_t> pick_cold(
            0, cold_list.size() - 1);
        const std::size_t cold = cold_list[pick_cold(rng)];
        if (std::find(picked.begin(), picked.end(), cold) == picked.end()) {
          if (static_cast<int>(picked.size()) < spec.basket_max)
            picked.push_back(cold);
          else
            picked.back() = cold;
        }
      }
      std::sort(picked.begin(), picked.end());
      picked.erase(std::unique(picked.begin(), picked.end()), picked.end());

      tx << u << ' ' << t;
      for (std::size_t p : picked)
        tx << ' ' << tier_first[tiers - 1] + static_cast<std::int64_t>(p);
      tx << '\n';
      ++total_tx;
      prev_bottom = std::move(bottoms_now);
    }

    gt << json{{"type", "preference"}, {"user", u}, {"weights", pref}}.dump()
       << '\n';
  }
  if (!tx || !gt) fail(ErrorCode::io_error, "failed writing corpus files");
  tx.close();
  gt.close();

  SynthSummary summary;
  summary.taxonomy_path = tax_path;
  summary.transactions_path = tx_path;
  summary.ground_truth_path = gt_path;
  summary.users = spec.users;
  summary.products = products;
  summary.transactions = total_tx;
  summary.nodes_per_tier = tier_size;
  summary.cold_products = cold_list.size();
  return summary;
}

}  // namespace taxrec
