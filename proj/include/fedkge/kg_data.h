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

#ifndef FEDKGE_KG_DATA_H_
#define FEDKGE_KG_DATA_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fedkge {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t x = static_cast<std::uint32_t>(t.head);
    x = x * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint32_t>(t.relation);
    x = x * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint32_t>(t.tail);
    return static_cast<std::size_t>(x ^ (x >> 29));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Bijection between names and dense ids 0..N-1.
class Dictionary {
 public:
  // Returns the id of `name`, assigning the next id on first sight.
  std::int32_t Intern(std::string_view name);
  std::optional<std::int32_t> Find(std::string_view name) const;
  const std::string& Name(std::int32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

struct KnowledgeGraph {
  std::vector<Triple> triples;
  Dictionary entities;
  Dictionary relations;
  // Number of input lines dropped because they repeated an earlier triple.
  std::size_t duplicate_count = 0;
};

// Parses `head<TAB>relation<TAB>tail` lines. When dictionaries are given,
// names must already be present in them (LookupError otherwise) and the
// returned graph carries copies of them.
KnowledgeGraph ParseTriples(std::istream& in,
                            const Dictionary* entity_dict = nullptr,
                            const Dictionary* relation_dict = nullptr);

KnowledgeGraph LoadTriples(
    const std::filesystem::path& path,
    const std::optional<std::filesystem::path>& entity_dict_path = {},
    const std::optional<std::filesystem::path>& relation_dict_path = {});

// Reads `name<TAB>id` lines; ids must form 0..N-1.
Dictionary LoadDictionary(const std::filesystem::path& path);
void WriteDictionary(const Dictionary& dict, const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

struct ClientDataset {
  int client_id = 0;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  // Sorted, unique ids appearing in train, valid or test.
  std::vector<EntityId> local_entities;
  std::vector<RelationId> local_relations;

  std::size_t num_triples() const {
    return train.size() + valid.size() + test.size();
  }
  // Recomputes local_entities / local_relations from the partitions.
  void RefreshLocalSets();
  TripleSet AllTriples() const;
};

// Shuffles the graph once with the seed, deals triples round-robin to
// `num_clients` clients and partitions each client's share by `ratios`
// (valid and test floored, remainder to train).
std::vector<ClientDataset> FederatedSplit(const KnowledgeGraph& kg,
                                          int num_clients, SplitRatios ratios,
                                          std::uint64_t seed);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Summary Summarize(std::span<const double> values);

struct SplitStats {
  std::vector<std::size_t> entity_counts;
  std::vector<std::size_t> relation_counts;
  std::vector<std::size_t> triple_counts;
  Summary entities;
  Summary relations;
  Summary triples;
};

SplitStats ComputeSplitStats(std::span<const ClientDataset> clients);

// Split directory layout: entities.dict, relations.dict, stats.json and one
// client_<i>/ directory per client holding train.txt, valid.txt, test.txt.
void WriteSplit(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                std::span<const ClientDataset> clients);

struct LoadedSplit {
  Dictionary entities;
  Dictionary relations;
  std::vector<ClientDataset> clients;
};

LoadedSplit ReadSplit(const std::filesystem::path& dir);

void WriteTriples(std::span<const Triple> triples, const Dictionary& entities,
                  const Dictionary& relations,
                  const std::filesystem::path& path);

// Order-sensitive 64-bit fingerprint of the clients' partitions.
std::uint64_t DatasetFingerprint(std::span<const ClientDataset> clients);

}  // namespace fedkge

#endif  // FEDKGE_KG_DATA_H_
