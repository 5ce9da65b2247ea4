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

#include "taxrec/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace taxrec {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  fail(ErrorCode::parse_error,
       path + ":" + std::to_string(line) + ": " + what);
}

bool skippable(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;  // blank
}

}  // namespace

std::vector<NodeRecord> load_taxonomy_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  std::vector<NodeRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      parse_fail(path, lineno, "expected node_id<TAB>parent_id<TAB>label");
    NodeRecord rec;
    try {
      rec.id = std::stoll(line.substr(0, tab1));
      rec.parent = std::stoll(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      parse_fail(path, lineno, "node and parent ids must be integers");
    }
    rec.label = line.substr(tab2 + 1);
    if (!rec.label.empty() && rec.label.back() == '\r') rec.label.pop_back();
    records.push_back(std::move(rec));
  }
  return records;
}

void save_taxonomy_records(const std::vector<NodeRecord>& records,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  for (const NodeRecord& rec : records)
    out << rec.id << '\t' << rec.parent << '\t' << rec.label << '\n';
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

namespace {

// Shared line-level parser; on_item decides what unknown items do.
template <typename ItemFn>
TransactionLog parse_transactions(const std::string& path, ItemFn&& on_item) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  TransactionLog log;
  std::map<std::int64_t, UserId> users;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    std::istringstream fields(line);
    std::int64_t ext_user;
    std::int64_t t_index;
    if (!(fields >> ext_user >> t_index))
      parse_fail(path, lineno, "expected user_id t_index item...");
    auto [it, fresh] = users.try_emplace(ext_user, 0);
    if (fresh) it->second = log.add_user(ext_user);
    const UserId u = it->second;
    const auto expected =
        static_cast<std::int64_t>(log.transactions(u).size());
    if (t_index != expected)
      parse_fail(path, lineno,
                 "transaction index " + std::to_string(t_index) +
                     " out of order (expected " + std::to_string(expected) +
                     ")");
    std::vector<NodeId> items;
    std::int64_t ext_item;
    while (fields >> ext_item) items.push_back(on_item(ext_item, lineno));
    if (!fields.eof())
      parse_fail(path, lineno, "item ids must be integers");
    if (items.empty()) parse_fail(path, lineno, "empty transaction");
    log.add_basket(u, std::move(items));
  }
  log.finalize();
  return log;
}

}  // namespace

TransactionLog load_transactions(const std::string& path, const Taxonomy& tax) {
  return parse_transactions(path, [&](std::int64_t ext, std::size_t lineno) {
    auto node = tax.find(ext);
    if (!node)
      parse_fail(path, lineno,
                 "unknown item " + std::to_string(ext));
    if (!tax.is_leaf(*node))
      parse_fail(path, lineno,
                 "item " + std::to_string(ext) + " is not a product");
    return *node;
  });
}

Corpus load_corpus(const std::string& taxonomy_path,
                   const std::string& transactions_path) {
  auto records = load_taxonomy_records(taxonomy_path);
  Taxonomy probe = Taxonomy::build(records);

  // First pass: find items the taxonomy does not know.
  std::vector<std::int64_t> unknown;
  {
    std::ifstream in(transactions_path);
    if (!in) fail(ErrorCode::io_error, "cannot open " + transactions_path);
    std::string line;
    while (std::getline(in, line)) {
      if (skippable(line)) continue;
      std::istringstream fields(line);
      std::int64_t ext_user, t_index, ext_item;
      if (!(fields >> ext_user >> t_index)) continue;  // second pass reports
      while (fields >> ext_item)
        if (!probe.find(ext_item)) unknown.push_back(ext_item);
    }
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
  }

  Corpus corpus{unknown.empty() ? std::move(probe)
                                : Taxonomy::build(std::move(records), unknown),
                TransactionLog{}, unknown.size()};
  corpus.log = load_transactions(transactions_path, corpus.taxonomy);
  return corpus;
}

void save_transaction_log(const TransactionLog& log, const Taxonomy& tax,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  for (UserId u = 0; u < static_cast<UserId>(log.user_count()); ++u) {
    auto tx = log.transactions(u);
    for (std::size_t t = 0; t < tx.size(); ++t) {
      out << log.external_user_id(u) << ' ' << t;
      for (NodeId item : tx[t].items) out << ' ' << tax.external_id(item);
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

namespace {

constexpr char kMagic[4] = {'T', 'F', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& at) {
  T value;
  std::memcpy(&value, buf.data() + at, sizeof(T));
  at += sizeof(T);
  return value;
}

void put_matrix(std::string& buf, const Matrix& m) {
  for (double v : m.values()) put(buf, static_cast<float>(v));
}

void take_matrix(const std::string& buf, std::size_t& at, Matrix& m) {
  for (double& v : m.values()) v = take<float>(buf, at);
}

}  // namespace

void save_checkpoint(const FactorStore& store, int levels, int order,
                     const std::string& path) {
  std::string buf;
  const std::size_t floats =
      (store.user_count() + 2 * store.node_count()) * store.factor_dim();
  buf.reserve(40 + floats * sizeof(float));
  buf.append(kMagic, sizeof(kMagic));
  put(buf, kVersion);
  put(buf, static_cast<std::uint32_t>(store.factor_dim()));
  put(buf, static_cast<std::uint64_t>(store.user_count()));
  put(buf, static_cast<std::uint64_t>(store.node_count()));
  put(buf, static_cast<std::int32_t>(levels));
  put(buf, static_cast<std::int32_t>(order));
  put_matrix(buf, store.user_factors());
  put_matrix(buf, store.offsets(FactorStore::Kind::item));
  put_matrix(buf, store.offsets(FactorStore::Kind::next));
  put(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::io_error, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path, const Taxonomy& tax) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream raw;
  raw << in.rdbuf();
  const std::string buf = raw.str();

  constexpr std::size_t header = sizeof(kMagic) + 2 * sizeof(std::uint32_t) +
                                 2 * sizeof(std::uint64_t) +
                                 2 * sizeof(std::int32_t);
  if (buf.size() < header + sizeof(std::uint64_t))
    fail(ErrorCode::parse_error, path + ": truncated checkpoint");
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    fail(ErrorCode::parse_error, path + ": not a factor checkpoint");

  std::size_t at = sizeof(kMagic);
  const auto version = take<std::uint32_t>(buf, at);
  if (version != kVersion)
    fail(ErrorCode::version_mismatch,
         path + ": unsupported checkpoint version " + std::to_string(version));

  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::size_t cat = body;
  const auto stored_sum = take<std::uint64_t>(buf, cat);
  if (fnv1a64(buf.data(), body) != stored_sum)
    fail(ErrorCode::checksum_mismatch, path + ": checkpoint checksum mismatch");

  const auto K = take<std::uint32_t>(buf, at);
  const auto users = take<std::uint64_t>(buf, at);
  const auto nodes = take<std::uint64_t>(buf, at);
  const auto levels = take<std::int32_t>(buf, at);
  const auto order = take<std::int32_t>(buf, at);
  if (K < 1) fail(ErrorCode::parse_error, path + ": bad factor dimension");
  if (nodes != tax.node_count())
    fail(ErrorCode::dimension_mismatch,
         path + ": checkpoint has " + std::to_string(nodes) +
             " nodes, taxonomy has " + std::to_string(tax.node_count()));
  if (body - header != (users + 2 * nodes) * K * sizeof(float))
    fail(ErrorCode::parse_error, path + ": payload size mismatch");

  Checkpoint cp{FactorStore(users, nodes, static_cast<int>(K)),
                levels, order};
  take_matrix(buf, at, cp.store.user_factors());
  take_matrix(buf, at, cp.store.offsets(FactorStore::Kind::item));
  take_matrix(buf, at, cp.store.offsets(FactorStore::Kind::next));
  return cp;
}

}  // namespace taxrec
