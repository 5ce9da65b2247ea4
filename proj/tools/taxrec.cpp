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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "taxrec/data_io.hpp"
#include "taxrec/eval.hpp"
#include "taxrec/generator.hpp"
#include "taxrec/manifest.hpp"
#include "taxrec/trainer.hpp"

#ifndef TAXREC_BUILD_ID
#define TAXREC_BUILD_ID "unknown"
#endif

namespace {

namespace fs = std::filesystem;
using namespace taxrec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io_error, "cannot create directory " + dir);
}

// Flags shared by train and evaluate.
struct SplitFlags {
  double mu = 0.5;
  double sigma = 0.05;
  int holdout = 1;
  std::uint64_t seed = 42;

  void attach(CLI::App& cmd) {
    cmd.add_option("--mu", mu, "Mean train fraction of each user's history");
    cmd.add_option("--split-sigma", sigma, "Spread of the train fraction");
    cmd.add_option("--holdout", holdout,
                   "Held-out transactions per user (validation and test)");
    cmd.add_option("--split-seed", seed, "Seed for the per-user split draws");
  }

  SplitSpec spec() const { return {mu, sigma, holdout, seed}; }
};

struct ModelFlags {
  ModelConfig config;
  std::string preset;

  void attach(CLI::App& cmd) {
    cmd.add_option("--factors", config.factors, "Factor dimension K");
    cmd.add_option("--lambda", config.lambda, "L2 regularization strength");
    cmd.add_option("--epsilon", config.epsilon, "SGD step size");
    cmd.add_option("--alpha", config.alpha, "Short-term interest weight");
    cmd.add_option("--max-prev-transactions", config.max_prev_transactions,
                   "Recent transactions feeding short-term interest");
    cmd.add_option("--taxonomy-update-levels", config.update_levels,
                   "Ancestor levels updated per step (-1 = whole path)");
    cmd.add_option("--sibling-mix", config.sibling_mix,
                   "Fraction of draws spent on sibling tuples");
    cmd.add_option("--epochs", config.epochs, "Training epochs");
    cmd.add_option("--threads", config.threads, "Trainer threads");
    cmd.add_option("--seed", config.seed, "Model seed");
    cmd.add_option("--cache-threshold", config.cache_threshold,
                   "Pending-delta max-norm that flushes a shared row "
                   "(0 = write through)");
    cmd.add_option("--preset", preset,
                   "Model preset: mf0, mf1, fpmc, tf40, tf41")
        ->check(CLI::IsMember({"mf0", "mf1", "fpmc", "tf40", "tf41"}));
  }

  // Presets fill the structural fields a user did not set explicitly.
  void resolve(const CLI::App& cmd) {
    if (preset.empty()) return;
    const bool u_set = cmd.count("--taxonomy-update-levels") > 0;
    const bool n_set = cmd.count("--max-prev-transactions") > 0;
    int levels;
    int order;
    if (preset == "mf0") {
      levels = 1;
      order = 0;
    } else if (preset == "mf1" || preset == "fpmc") {
      levels = 1;
      order = 1;
    } else if (preset == "tf40") {
      levels = -1;
      order = 0;
    } else {  // tf41
      levels = -1;
      order = 1;
    }
    if (!u_set) config.update_levels = levels;
    if (!n_set) config.max_prev_transactions = order;
  }

  void record(RunManifest& m) const {
    m.settings["factors"] = std::to_string(config.factors);
    m.settings["lambda"] = fmt(config.lambda);
    m.settings["epsilon"] = fmt(config.epsilon);
    m.settings["alpha"] = fmt(config.alpha);
    m.settings["max_prev_transactions"] =
        std::to_string(config.max_prev_transactions);
    m.settings["taxonomy_update_levels"] = std::to_string(config.update_levels);
    m.settings["sibling_mix"] = fmt(config.sibling_mix);
    m.settings["epochs"] = std::to_string(config.epochs);
    m.settings["threads"] = std::to_string(config.threads);
    m.settings["seed"] = std::to_string(config.seed);
    m.settings["cache_threshold"] = fmt(config.cache_threshold);
    if (!preset.empty()) m.settings["preset"] = preset;
  }
};

Corpus load_and_report(const std::string& tax_path, const std::string& tx_path) {
  Corpus corpus = load_corpus(tax_path, tx_path);
  if (corpus.unknown_items > 0)
    std::cerr << "warning: " << corpus.unknown_items
              << " item(s) were not in the taxonomy; attached under "
                 "UNCATEGORIZED\n";
  return corpus;
}

int run_generate(const SynthSpec& spec, const std::string& out_dir,
                 const std::string& branching_csv, RunManifest manifest) {
  SynthSpec resolved = spec;
  if (!branching_csv.empty()) {
    resolved.branching.clear();
    std::istringstream ss(branching_csv);
    std::string part;
    while (std::getline(ss, part, ','))
      resolved.branching.push_back(std::stoi(part));
  }
  ensure_dir(out_dir);
  const SynthSummary summary = generate_corpus(resolved, out_dir);
  manifest.settings["users"] = std::to_string(resolved.users);
  manifest.settings["seed"] = std::to_string(resolved.seed);
  {
    std::string b;
    for (std::size_t i = 0; i < resolved.branching.size(); ++i)
      b += (i ? "," : "") + std::to_string(resolved.branching[i]);
    manifest.settings["branching"] = b;
  }
  manifest.settings["mean_transactions"] = fmt(resolved.mean_transactions);
  manifest.settings["copurchase_strength"] =
      fmt(resolved.copurchase_strength);
  manifest.settings["cold_fraction"] = fmt(resolved.cold_fraction);
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "generated " << summary.users << " users, "
            << summary.transactions << " transactions over "
            << summary.products << " products ("
            << summary.cold_products << " cold)\n";
  return kExitOk;
}

int run_train(const std::string& tax_path, const std::string& tx_path,
              const std::string& out_dir, const SplitFlags& split_flags,
              const ModelFlags& model, bool val_auc, RunManifest manifest) {
  Corpus corpus = load_and_report(tax_path, tx_path);
  SplitOutcome parts = split(corpus.log, split_flags.spec());

  ensure_dir(out_dir);
  const std::string diag_path =
      (fs::path(out_dir) / "diagnostics.csv").string();
  std::ofstream diag(diag_path, std::ios::app);
  if (!diag) fail(ErrorCode::io_error, "cannot open " + diag_path);
  if (fs::file_size(diag_path) == 0)
    diag << "epoch,mean_c,val_auc,wall_seconds\n";

  const ModelConfig& cfg = model.config;
  FactorStore store(corpus.log.user_count(), corpus.taxonomy.node_count(),
                    cfg.factors);

  EvalConfig val_cfg;
  val_cfg.levels = cfg.update_levels;
  val_cfg.decay = DecayWeights::make(cfg.max_prev_transactions, cfg.alpha);
  val_cfg.threads = cfg.threads;
  val_cfg.category_metrics = false;

  auto on_epoch = [&](const EpochStats& stats) {
    std::string val = "";
    if (val_auc) {
      const EvalReport report = evaluate(store, corpus.taxonomy, parts.train,
                                         parts.validation, val_cfg);
      val = fmt(report.auc);
    }
    diag << stats.epoch << ',' << fmt(stats.mean_c) << ',' << val << ','
         << fmt(stats.wall_seconds) << '\n';
    diag.flush();
    std::cerr << "epoch " << stats.epoch << ": mean_c=" << fmt(stats.mean_c)
              << (val.empty() ? "" : " val_auc=" + val) << " ("
              << fmt(stats.wall_seconds) << "s)\n";
  };

  const TrainResult result =
      train(store, parts.train, corpus.taxonomy, cfg, on_epoch);

  const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(store, cfg.update_levels, cfg.max_prev_transactions, ckpt);

  model.record(manifest);
  manifest.settings["taxonomy"] = tax_path;
  manifest.settings["transactions"] = tx_path;
  manifest.settings["mu"] = fmt(split_flags.mu);
  manifest.settings["split_seed"] = std::to_string(split_flags.seed);
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "trained " << result.total_tuples << " tuples over "
            << result.epochs.size() << " epoch(s); checkpoint " << ckpt
            << '\n';
  return kExitOk;
}

int run_evaluate(const std::string& tax_path, const std::string& tx_path,
                 const std::string& ckpt_path, const std::string& out_dir,
                 const SplitFlags& split_flags, double alpha, double lambda,
                 const std::string& mode, double keep_fraction,
                 bool filter_bought, int threads, RunManifest manifest) {
  Corpus corpus = load_and_report(tax_path, tx_path);
  SplitOutcome parts = split(corpus.log, split_flags.spec());
  Checkpoint cp = load_checkpoint(ckpt_path, corpus.taxonomy);
  if (cp.store.user_count() != corpus.log.user_count())
    fail(ErrorCode::dimension_mismatch,
         "checkpoint was trained on a different user set");

  auto heldout =
      filter_bought ? filter_repeats(parts.test, parts.train) : parts.test;

  EvalConfig cfg;
  cfg.levels = cp.levels;
  cfg.decay = DecayWeights::make(cp.order, alpha);
  cfg.mode = mode == "cascaded" ? RankMode::cascaded : RankMode::exhaustive;
  cfg.cascade = CascadeSpec::uniform(keep_fraction);
  cfg.threads = threads;

  const EvalReport report =
      evaluate(cp.store, corpus.taxonomy, parts.train, heldout, cfg);

  ensure_dir(out_dir);
  manifest.settings["taxonomy"] = tax_path;
  manifest.settings["transactions"] = tx_path;
  manifest.settings["checkpoint"] = ckpt_path;
  manifest.settings["mu"] = fmt(split_flags.mu);
  manifest.settings["split_seed"] = std::to_string(split_flags.seed);
  manifest.settings["mode"] = mode;
  manifest.settings["keep_fraction"] = fmt(keep_fraction);
  manifest.settings["alpha"] = fmt(alpha);
  manifest.settings["lambda"] = fmt(lambda);
  manifest.settings["filter_repeats"] = filter_bought ? "1" : "0";

  const std::string results_path =
      (fs::path(out_dir) / "results.csv").string();
  {
    std::ofstream results(results_path, std::ios::app);
    if (!results) fail(ErrorCode::io_error, "cannot open " + results_path);
    if (fs::file_size(results_path) == 0)
      results << "config_hash,mu,K,lambda,U,N,auc,meanrank,cat_auc_L1,"
                 "cat_auc_L2,cat_auc_L3,coldstart_rank,users\n";
    auto level_auc = [&](int level) {
      return static_cast<std::size_t>(level) < report.level_auc.size()
                 ? report.level_auc[level]
                 : 0.0;
    };
    results << std::hex << manifest.config_hash() << std::dec << ','
            << fmt(split_flags.mu) << ',' << cp.store.factor_dim() << ','
            << fmt(lambda) << ',' << cp.levels << ',' << cp.order << ','
            << fmt(report.auc) << ',' << fmt(report.meanrank) << ','
            << fmt(level_auc(1)) << ',' << fmt(level_auc(2)) << ','
            << fmt(level_auc(3)) << ',' << fmt(report.cold_rank) << ','
            << report.users << '\n';
  }

  {
    nlohmann::json doc{{"auc", report.auc},
                       {"meanrank", report.meanrank},
                       {"level_auc", report.level_auc},
                       {"coldstart_rank", report.cold_rank},
                       {"coldstart_items", report.cold_count},
                       {"users", report.users},
                       {"evaluations", report.evaluations},
                       {"mode", mode}};
    std::ofstream rep((fs::path(out_dir) / "report.json").string());
    rep << doc.dump(2) << '\n';
    if (!rep) fail(ErrorCode::io_error, "failed writing report.json");
  }
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::cout << "auc=" << fmt(report.auc) << " meanrank=" << fmt(report.meanrank)
            << " users=" << report.users << " evaluations="
            << report.evaluations << '\n';
  return kExitOk;
}

int run_recommend(const std::string& tax_path, const std::string& tx_path,
                  const std::string& ckpt_path, const std::string& out_dir,
                  std::size_t k, double alpha, const std::string& mode,
                  double keep_fraction,
                  const std::vector<std::int64_t>& only_users,
                  RunManifest manifest) {
  Corpus corpus = load_and_report(tax_path, tx_path);
  Checkpoint cp = load_checkpoint(ckpt_path, corpus.taxonomy);
  if (cp.store.user_count() != corpus.log.user_count())
    fail(ErrorCode::dimension_mismatch,
         "checkpoint was trained on a different user set");

  const int levels = cp.levels < 0 ? corpus.taxonomy.depth() + 1 : cp.levels;
  Scorer scorer(cp.store, corpus.taxonomy, levels,
                DecayWeights::make(cp.order, alpha));
  const CascadeSpec cascade = CascadeSpec::uniform(keep_fraction);
  const CascadeSpec* spec = mode == "cascaded" ? &cascade : nullptr;

  std::vector<UserId> targets;
  if (only_users.empty()) {
    targets.resize(corpus.log.user_count());
    for (std::size_t u = 0; u < targets.size(); ++u)
      targets[u] = static_cast<UserId>(u);
  } else {
    for (std::int64_t ext : only_users) {
      bool found = false;
      for (UserId u = 0; u < static_cast<UserId>(corpus.log.user_count()); ++u)
        if (corpus.log.external_user_id(u) == ext) {
          targets.push_back(u);
          found = true;
          break;
        }
      if (!found)
        fail(ErrorCode::invalid_argument,
             "unknown user " + std::to_string(ext));
    }
  }

  ensure_dir(out_dir);
  const std::string rec_path =
      (fs::path(out_dir) / "recommendations.csv").string();
  std::ofstream out(rec_path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + rec_path);
  out << "user_id,rank,node_id,score,level\n";
  for (UserId u : targets) {
    auto past = corpus.log.transactions(u);
    std::vector<Basket> history;
    for (std::size_t n = 0;
         n < std::min<std::size_t>(past.size(), cp.order); ++n)
      history.push_back(past[past.size() - 1 - n]);
    const auto top = recommend_topk(scorer, u, history, k, spec);
    for (std::size_t r = 0; r < top.size(); ++r)
      out << corpus.log.external_user_id(u) << ',' << r + 1 << ','
          << corpus.taxonomy.external_id(top[r].node) << ','
          << fmt(top[r].score) << ','
          << corpus.taxonomy.level(top[r].node) << '\n';
  }
  if (!out) fail(ErrorCode::io_error, "failed writing " + rec_path);

  manifest.settings["checkpoint"] = ckpt_path;
  manifest.settings["k"] = std::to_string(k);
  manifest.settings["mode"] = mode;
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote top-" << k << " recommendations for " << targets.size()
            << " user(s) to " << rec_path << '\n';
  return kExitOk;
}

int run_export(const std::string& tax_path, const std::string& tx_path,
               const std::string& ckpt_path, const std::string& out_dir,
               RunManifest manifest) {
  auto records = load_taxonomy_records(tax_path);
  Taxonomy tax = Taxonomy::build(std::move(records));
  std::optional<TransactionLog> log;
  if (!tx_path.empty()) {
    Corpus corpus = load_corpus(tax_path, tx_path);
    tax = std::move(corpus.taxonomy);
    log = std::move(corpus.log);
  }
  Checkpoint cp = load_checkpoint(ckpt_path, tax);

  ensure_dir(out_dir);
  const std::string out_path = (fs::path(out_dir) / "factors.csv").string();
  export_factors(cp.store, tax, log ? &*log : nullptr, out_path);
  manifest.settings["checkpoint"] = ckpt_path;
  manifest.write((fs::path(out_dir) / "manifest.json").string());
  std::cout << "wrote factors to " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taxonomy-aware sequential recommender"};
  app.set_version_flag("--version", std::string("taxrec ") + TAXREC_BUILD_ID);
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus");
  SynthSpec synth;
  std::string gen_out = "corpus";
  std::string branching_csv;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--users", synth.users, "Number of users");
  gen->add_option("--branching", branching_csv,
                  "Comma-separated children per tier, products last");
  gen->add_option("--mean-transactions", synth.mean_transactions,
                  "Mean transactions per user");
  gen->add_option("--max-transactions", synth.max_transactions,
                  "Transaction cap per user");
  gen->add_option("--basket-min", synth.basket_min, "Smallest basket");
  gen->add_option("--basket-max", synth.basket_max, "Largest basket");
  gen->add_option("--preference-alpha", synth.preference_alpha,
                  "Dirichlet concentration of user preferences");
  gen->add_option("--copurchase", synth.copurchase_strength,
                  "Probability the next transaction follows a companion "
                  "category");
  gen->add_option("--cold-fraction", synth.cold_fraction,
                  "Fraction of products held back until final transactions");
  gen->add_option("--seed", synth.seed, "Generator seed");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on a purchase log");
  std::string tr_tax, tr_tx, tr_out = "run";
  bool tr_val_auc = true;
  SplitFlags tr_split;
  ModelFlags tr_model;
  tr->add_option("--taxonomy", tr_tax, "Taxonomy TSV")->required();
  tr->add_option("--transactions", tr_tx, "Transaction log")->required();
  tr->add_option("--out", tr_out, "Output directory");
  tr->add_flag("--val-auc,!--no-val-auc", tr_val_auc,
               "Score validation AUC each epoch");
  tr_split.attach(*tr);
  tr_model.attach(*tr);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  std::string ev_tax, ev_tx, ev_ckpt, ev_out = "eval";
  std::string ev_mode = "exhaustive";
  double ev_alpha = 1.0, ev_lambda = 0.0, ev_keep = 0.5;
  bool ev_filter = true;
  int ev_threads = 1;
  SplitFlags ev_split;
  ev->add_option("--taxonomy", ev_tax, "Taxonomy TSV")->required();
  ev->add_option("--transactions", ev_tx, "Transaction log")->required();
  ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint")->required();
  ev->add_option("--out", ev_out, "Output directory");
  ev->add_option("--mode", ev_mode, "Ranking mode")
      ->check(CLI::IsMember({"exhaustive", "cascaded"}));
  ev->add_option("--keep-fraction", ev_keep,
                 "Fraction of each level kept while cascading");
  ev->add_option("--alpha", ev_alpha,
                 "Short-term weight used when the model has history order");
  ev->add_option("--lambda", ev_lambda,
                 "Training regularization, recorded with the results");
  ev->add_flag("--filter-repeats,!--no-filter-repeats", ev_filter,
               "Drop already-bought items from test baskets");
  ev->add_option("--threads", ev_threads, "Evaluation threads");
  ev_split.attach(*ev);

  // recommend
  auto* rc = app.add_subcommand("recommend", "Write top-k products per user");
  std::string rc_tax, rc_tx, rc_ckpt, rc_out = "recs";
  std::string rc_mode = "exhaustive";
  double rc_alpha = 1.0, rc_keep = 0.5;
  std::size_t rc_k = 10;
  std::vector<std::int64_t> rc_users;
  rc->add_option("--taxonomy", rc_tax, "Taxonomy TSV")->required();
  rc->add_option("--transactions", rc_tx, "Transaction log")->required();
  rc->add_option("--checkpoint", rc_ckpt, "Model checkpoint")->required();
  rc->add_option("--out", rc_out, "Output directory");
  rc->add_option("--k", rc_k, "Recommendations per user");
  rc->add_option("--mode", rc_mode, "Ranking mode")
      ->check(CLI::IsMember({"exhaustive", "cascaded"}));
  rc->add_option("--keep-fraction", rc_keep,
                 "Fraction of each level kept while cascading");
  rc->add_option("--alpha", rc_alpha, "Short-term weight");
  rc->add_option("--user", rc_users, "Restrict to these user ids");

  // export-factors
  auto* ex = app.add_subcommand("export-factors",
                                "Dump factor rows and effective vectors");
  std::string ex_tax, ex_tx, ex_ckpt, ex_out = "factors";
  ex->add_option("--taxonomy", ex_tax, "Taxonomy TSV")->required();
  ex->add_option("--transactions", ex_tx,
                 "Transaction log (maps user rows to external ids)");
  ex->add_option("--checkpoint", ex_ckpt, "Model checkpoint")->required();
  ex->add_option("--out", ex_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed())
      return run_generate(synth, gen_out, branching_csv,
                          RunManifest::create("generate"));
    if (tr->parsed()) {
      tr_model.resolve(*tr);
      return run_train(tr_tax, tr_tx, tr_out, tr_split, tr_model, tr_val_auc,
                       RunManifest::create("train"));
    }
    if (ev->parsed())
      return run_evaluate(ev_tax, ev_tx, ev_ckpt, ev_out, ev_split, ev_alpha,
                          ev_lambda, ev_mode, ev_keep, ev_filter, ev_threads,
                          RunManifest::create("evaluate"));
    if (rc->parsed())
      return run_recommend(rc_tax, rc_tx, rc_ckpt, rc_out, rc_k, rc_alpha,
                           rc_mode, rc_keep, rc_users,
                           RunManifest::create("recommend"));
    if (ex->parsed())
      return run_export(ex_tax, ex_tx, ex_ckpt, ex_out,
                        RunManifest::create("export-factors"));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::divergence ? kExitDiverged : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
