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

#ifndef FEDKGE_TESTS_TEST_UTIL_H_
#define FEDKGE_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedkge/kg_data.h"
#include "fedkge/model.h"
#include "fedkge/rng.h"

namespace fedkge::testing {

// Fresh empty directory under the system temp dir.
std::filesystem::path TempDir(const std::string& name);

// Graph with `n` distinct triples over `entities` entities and `relations`
// relations, drawn from `seed`.
KnowledgeGraph RandomGraph(std::size_t n, int entities, int relations,
                           std::uint64_t seed);

std::string ReadFile(const std::filesystem::path& path);

EmbeddingTable RandomTable(ModelKind kind, int entities, int relations, int dim,
                           std::uint64_t seed, double scale = 1.0);

// Relative error |analytic - numeric| / (|analytic| + |numeric|) of the
// batch-loss gradient against central differences (step 1e-5) at a random
// parameter point, with the self-adversarial weights held fixed.
double GradientCheckError(ModelKind kind, std::uint64_t seed);

// Rank by sorting the full (filtered) score list of a query; ties use the
// midpoint rule.
std::int64_t SortedRank(const EmbeddingTable& table, const Triple& query,
                        std::span<const EntityId> candidates,
                        const TripleSet* filter);

// Ten-triple instance over a one-dimensional DistMult table whose scores take
// few distinct values, so ties are frequent.
struct RankingInstance {
  ClientDataset client;
  EmbeddingTable table;
};
RankingInstance TiedRankingInstance(std::uint64_t seed);

}  // namespace fedkge::testing

#endif  // FEDKGE_TESTS_TEST_UTIL_H_
