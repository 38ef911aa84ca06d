// Copyright 2026 The fedkge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedkge/kg_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fedkge/errors.h"
#include "fedkge/rng.h"
#include "json.hpp"

namespace fedkge {
namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::int32_t Lookup(const Dictionary& dict, std::string_view name,
                    std::size_t line_no, const char* kind) {
  auto id = dict.Find(name);
  if (!id) {
    throw LookupError("line " + std::to_string(line_no) + ": unknown " + kind +
                      " '" + std::string(name) + "'");
  }
  return *id;
}

}  // namespace

std::int32_t Dictionary::Intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::int32_t> Dictionary::Find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph ParseTriples(std::istream& in, const Dictionary* entity_dict,
                            const Dictionary* relation_dict) {
  KnowledgeGraph kg;
  if (entity_dict) kg.entities = *entity_dict;
  if (relation_dict) kg.relations = *relation_dict;
  TripleSet seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected 'head<TAB>relation<TAB>tail'",
                       line_no);
    }
    Triple t;
    if (entity_dict) {
      t.head = Lookup(kg.entities, fields[0], line_no, "entity");
      t.tail = Lookup(kg.entities, fields[2], line_no, "entity");
    } else {
      t.head = kg.entities.Intern(fields[0]);
      t.tail = kg.entities.Intern(fields[2]);
    }
    t.relation = relation_dict
                     ? Lookup(kg.relations, fields[1], line_no, "relation")
                     : kg.relations.Intern(fields[1]);
    if (!seen.insert(t).second) {
      ++kg.duplicate_count;
      continue;
    }
    kg.triples.push_back(t);
  }
  return kg;
}

Dictionary LoadDictionary(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  std::vector<std::pair<std::int64_t, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    std::int64_t id = -1;
    if (fields.size() == 2) {
      try {
        std::size_t used = 0;
        id = std::stoll(std::string(fields[1]), &used);
        if (used != fields[1].size()) id = -1;
      } catch (const std::exception&) {
        id = -1;
      }
    }
    if (id < 0 || fields[0].empty()) {
      throw ParseError(path.string() + " line " + std::to_string(line_no) +
                           ": expected 'name<TAB>id'",
                       line_no);
    }
    entries.emplace_back(id, std::string(fields[0]));
  }
  std::sort(entries.begin(), entries.end());
  Dictionary dict;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != static_cast<std::int64_t>(i) ||
        dict.Intern(entries[i].second) != static_cast<std::int32_t>(i)) {
      throw ParseError(path.string() +
                           ": ids must be unique names mapped to "
                           "dense ids 0..N-1",
                       0);
    }
  }
  return dict;
}

void WriteDictionary(const Dictionary& dict,
                     const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  for (std::size_t i = 0; i < dict.size(); ++i) {
    out << dict.names()[i] << '\t' << i << '\n';
  }
}

KnowledgeGraph LoadTriples(
    const std::filesystem::path& path,
    const std::optional<std::filesystem::path>& entity_dict_path,
    const std::optional<std::filesystem::path>& relation_dict_path) {
  std::optional<Dictionary> entities;
  std::optional<Dictionary> relations;
  if (entity_dict_path) entities = LoadDictionary(*entity_dict_path);
  if (relation_dict_path) relations = LoadDictionary(*relation_dict_path);
  auto in = OpenForRead(path);
  return ParseTriples(in, entities ? &*entities : nullptr,
                      relations ? &*relations : nullptr);
}

void ClientDataset::RefreshLocalSets() {
  std::set<EntityId> entities;
  std::set<RelationId> relations;
  for (const auto* part : {&train, &valid, &test}) {
    for (const Triple& t : *part) {
      entities.insert(t.head);
      entities.insert(t.tail);
      relations.insert(t.relation);
    }
  }
  local_entities.assign(entities.begin(), entities.end());
  local_relations.assign(relations.begin(), relations.end());
}

TripleSet ClientDataset::AllTriples() const {
  TripleSet all;
  all.reserve(num_triples());
  all.insert(train.begin(), train.end());
  all.insert(valid.begin(), valid.end());
  all.insert(test.begin(), test.end());
  return all;
}

std::vector<ClientDataset> FederatedSplit(const KnowledgeGraph& kg,
                                          int num_clients, SplitRatios ratios,
                                          std::uint64_t seed) {
  if (num_clients < 1) throw ConfigError("num_clients must be >= 1");
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("ratios must be non-negative and sum to 1");
  }
  if (static_cast<std::size_t>(num_clients) > kg.triples.size()) {
    throw ConfigError("num_clients (" + std::to_string(num_clients) +
                      ") exceeds triple count (" +
                      std::to_string(kg.triples.size()) + ")");
  }
  std::vector<Triple> shuffled = kg.triples;
  Rng rng(DeriveSeed(seed, "split"));
  rng.Shuffle(std::span<Triple>(shuffled));

  std::vector<std::vector<Triple>> dealt(num_clients);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    dealt[i % num_clients].push_back(shuffled[i]);
  }

  std::vector<ClientDataset> clients(num_clients);
  for (int c = 0; c < num_clients; ++c) {
    auto& share = dealt[c];
    const auto n = static_cast<double>(share.size());
    // The epsilon absorbs representation error such as 0.29 * 100.
    const auto n_valid =
        static_cast<std::size_t>(std::floor(n * ratios.valid + 1e-9));
    const auto n_test =
        static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = share.size() - n_valid - n_test;
    ClientDataset& client = clients[c];
    client.client_id = c;
    client.train.assign(share.begin(), share.begin() + n_train);
    client.valid.assign(share.begin() + n_train,
                        share.begin() + n_train + n_valid);
    client.test.assign(share.begin() + n_train + n_valid, share.end());
    client.RefreshLocalSets();
  }
  return clients;
}

Summary Summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

SplitStats ComputeSplitStats(std::span<const ClientDataset> clients) {
  if (clients.empty()) throw ContractViolation("no clients");
  SplitStats stats;
  std::vector<double> e, r, t;
  for (const auto& c : clients) {
    stats.entity_counts.push_back(c.local_entities.size());
    stats.relation_counts.push_back(c.local_relations.size());
    stats.triple_counts.push_back(c.num_triples());
    e.push_back(static_cast<double>(c.local_entities.size()));
    r.push_back(static_cast<double>(c.local_relations.size()));
    t.push_back(static_cast<double>(c.num_triples()));
  }
  stats.entities = Summarize(e);
  stats.relations = Summarize(r);
  stats.triples = Summarize(t);
  return stats;
}

void WriteTriples(std::span<const Triple> triples, const Dictionary& entities,
                  const Dictionary& relations,
                  const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  for (const Triple& t : triples) {
    out << entities.Name(t.head) << '\t' << relations.Name(t.relation) << '\t'
        << entities.Name(t.tail) << '\n';
  }
}

void WriteSplit(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                std::span<const ClientDataset> clients) {
  std::filesystem::create_directories(dir);
  WriteDictionary(kg.entities, dir / "entities.dict");
  WriteDictionary(kg.relations, dir / "relations.dict");
  for (const auto& c : clients) {
    const auto cdir = dir / ("client_" + std::to_string(c.client_id));
    std::filesystem::create_directories(cdir);
    WriteTriples(c.train, kg.entities, kg.relations, cdir / "train.txt");
    WriteTriples(c.valid, kg.entities, kg.relations, cdir / "valid.txt");
    WriteTriples(c.test, kg.entities, kg.relations, cdir / "test.txt");
  }
  const SplitStats stats = ComputeSplitStats(clients);
  nlohmann::ordered_json j;
  j["num_clients"] = clients.size();
  j["entity_counts"] = stats.entity_counts;
  j["relation_counts"] = stats.relation_counts;
  j["triple_counts"] = stats.triple_counts;
  j["entities"] = {{"mean", stats.entities.mean},
                   {"stddev", stats.entities.stddev}};
  j["relations"] = {{"mean", stats.relations.mean},
                    {"stddev", stats.relations.stddev}};
  j["triples"] = {{"mean", stats.triples.mean},
                  {"stddev", stats.triples.stddev}};
  auto out = OpenForWrite(dir / "stats.json");
  out << j.dump(2) << '\n';
}

LoadedSplit ReadSplit(const std::filesystem::path& dir) {
  LoadedSplit split;
  split.entities = LoadDictionary(dir / "entities.dict");
  split.relations = LoadDictionary(dir / "relations.dict");
  for (int c = 0;; ++c) {
    const auto cdir = dir / ("client_" + std::to_string(c));
    if (!std::filesystem::is_directory(cdir)) break;
    ClientDataset client;
    client.client_id = c;
    auto read = [&](const char* name) {
      auto in = OpenForRead(cdir / name);
      return ParseTriples(in, &split.entities, &split.relations).triples;
    };
    client.train = read("train.txt");
    client.valid = read("valid.txt");
    client.test = read("test.txt");
    client.RefreshLocalSets();
    split.clients.push_back(std::move(client));
  }
  if (split.clients.empty()) {
    throw IoError("no client_<i> directories under " + dir.string());
  }
  return split;
}

std::uint64_t DatasetFingerprint(std::span<const ClientDataset> clients) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
    h ^= h >> 32;
  };
  for (const auto& c : clients) {
    mix(0xC11E47ULL + static_cast<std::uint64_t>(c.client_id));
    for (const auto* part : {&c.train, &c.valid, &c.test}) {
      mix(part->size());
      for (const Triple& t : *part) {
        mix(static_cast<std::uint32_t>(t.head));
        mix(static_cast<std::uint32_t>(t.relation));
        mix(static_cast<std::uint32_t>(t.tail));
      }
    }
  }
  return h;
}

}  // namespace fedkge
