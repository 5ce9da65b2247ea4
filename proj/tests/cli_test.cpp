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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

namespace taxrec {
namespace {

int run_cli(const std::string& args, const std::string& log_path) {
  const std::string cmd =
      std::string(TAXREC_CLI_PATH) + " " + args + " > " + log_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  return fields;
}

TEST_SUITE("cli") {

TEST_CASE("the full pipeline runs end to end") {
  test::TempDir tmp("cli");
  const std::string log = tmp.file("out.log");
  const std::string corpus = tmp.file("corpus");
  const std::string tax = corpus + "/taxonomy.tsv";
  const std::string txs = corpus + "/transactions.txt";

  REQUIRE(run_cli("generate --out " + corpus +
                      " --users 300 --branching 4,3,5 --mean-transactions 5"
                      " --seed 3",
                  log) == 0);
  CHECK(!test::read_file(tax).empty());
  CHECK(!test::read_file(txs).empty());
  CHECK(!test::read_file(corpus + "/ground_truth.jsonl").empty());
  CHECK(!test::read_file(corpus + "/manifest.json").empty());

  const std::string run = tmp.file("run");
  REQUIRE(run_cli("train --taxonomy " + tax + " --transactions " + txs +
                      " --out " + run +
                      " --preset mf0 --factors 8 --epochs 3 --seed 5",
                  log) == 0);
  CHECK(!test::read_file(run + "/model.ckpt").empty());

  auto diag = read_lines(run + "/diagnostics.csv");
  REQUIRE(diag.size() == 4);  // header + one row per epoch
  CHECK(diag[0] == "epoch,mean_c,val_auc,wall_seconds");
  for (std::size_t i = 1; i < diag.size(); ++i) {
    auto fields = split_csv(diag[i]);
    REQUIRE(fields.size() == 4);
    CHECK(std::stoi(fields[0]) == static_cast<int>(i) - 1);
    CHECK(std::stod(fields[2]) >= 0.0);  // validation score present
  }

  const std::string manifest = test::read_file(run + "/manifest.json");
  auto mdoc = nlohmann::json::parse(manifest);
  CHECK(mdoc["command"] == "train");
  CHECK(mdoc["settings"]["preset"] == "mf0");
  CHECK(mdoc["settings"]["taxonomy_update_levels"] == "1");

  const std::string ev = tmp.file("eval");
  REQUIRE(run_cli("evaluate --taxonomy " + tax + " --transactions " + txs +
                      " --checkpoint " + run + "/model.ckpt --out " + ev,
                  log) == 0);

  auto results = read_lines(ev + "/results.csv");
  REQUIRE(results.size() == 2);
  CHECK(results[0] ==
        "config_hash,mu,K,lambda,U,N,auc,meanrank,cat_auc_L1,cat_auc_L2,"
        "cat_auc_L3,coldstart_rank,users");
  auto row = split_csv(results[1]);
  REQUIRE(row.size() == 13);
  CHECK(row[2] == "8");   // K
  CHECK(row[4] == "1");   // preset mf0 pins one path level
  CHECK(row[5] == "0");   // and zero history order
  const double auc = std::stod(row[6]);
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);

  auto report = nlohmann::json::parse(test::read_file(ev + "/report.json"));
  CHECK(report["mode"] == "exhaustive");
  CHECK(report["users"].get<int>() > 0);
  CHECK(report["auc"].get<double>() == doctest::Approx(auc).epsilon(1e-5));
  const auto exhaustive_evals = report["evaluations"].get<std::uint64_t>();

  const std::string evc = tmp.file("eval_cascaded");
  REQUIRE(run_cli("evaluate --taxonomy " + tax + " --transactions " + txs +
                      " --checkpoint " + run + "/model.ckpt --out " + evc +
                      " --mode cascaded --keep-fraction 0.5",
                  log) == 0);
  auto creport = nlohmann::json::parse(test::read_file(evc + "/report.json"));
  CHECK(creport["mode"] == "cascaded");
  CHECK(creport["evaluations"].get<std::uint64_t>() < exhaustive_evals);

  const std::string recs = tmp.file("recs");
  REQUIRE(run_cli("recommend --taxonomy " + tax + " --transactions " + txs +
                      " --checkpoint " + run + "/model.ckpt --out " + recs +
                      " --k 5 --user 0 --user 7",
                  log) == 0);
  auto rec_lines = read_lines(recs + "/recommendations.csv");
  REQUIRE(rec_lines.size() == 11);  // header + 5 per user
  CHECK(rec_lines[0] == "user_id,rank,node_id,score,level");
  double prev = 1e300;
  for (std::size_t i = 1; i <= 5; ++i) {
    auto fields = split_csv(rec_lines[i]);
    REQUIRE(fields.size() == 5);
    CHECK(fields[0] == "0");
    CHECK(std::stoi(fields[1]) == static_cast<int>(i));
    CHECK(fields[4] == "0");  // products only
    const double score = std::stod(fields[3]);
    CHECK(score <= prev);
    prev = score;
  }

  const std::string fx = tmp.file("factors");
  REQUIRE(run_cli("export-factors --taxonomy " + tax + " --transactions " +
                      txs + " --checkpoint " + run + "/model.ckpt --out " + fx,
                  log) == 0);
  auto factor_lines = read_lines(fx + "/factors.csv");
  REQUIRE(factor_lines.size() > 1);
  CHECK(factor_lines[0].rfind("kind,node_or_user_id,level,f_0", 0) == 0);
}

TEST_CASE("usage problems exit with code 2") {
  test::TempDir tmp("cliusage");
  const std::string log = tmp.file("out.log");
  CHECK(run_cli("no-such-command", log) == 2);
  CHECK(run_cli("train --taxonomy only.tsv", log) == 2);  // missing required
  CHECK(run_cli("evaluate --taxonomy a --transactions b --checkpoint c"
                " --mode sideways",
                log) == 2);
  CHECK(run_cli("", log) == 2);  // a subcommand is required

  // Input errors share the usage exit code.
  CHECK(run_cli("train --taxonomy /nonexistent.tsv --transactions /none.txt",
                log) == 2);
}

TEST_CASE("training divergence exits with code 3") {
  test::TempDir tmp("clidiv");
  const std::string log = tmp.file("out.log");
  const std::string corpus = tmp.file("corpus");
  REQUIRE(run_cli("generate --out " + corpus +
                      " --users 50 --branching 3,2,4 --seed 9",
                  log) == 0);
  CHECK(run_cli("train --taxonomy " + corpus + "/taxonomy.tsv" +
                    " --transactions " + corpus + "/transactions.txt" +
                    " --out " + tmp.file("run") +
                    " --epochs 3 --epsilon 1e9 --no-val-auc",
                log) == 3);
}

}  // TEST_SUITE

}  // namespace
}  // namespace taxrec
