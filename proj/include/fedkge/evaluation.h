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

#ifndef FEDKGE_EVALUATION_H_
#define FEDKGE_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fedkge/kg_data.h"
#include "fedkge/model.h"

namespace fedkge {

struct RankResult {
  Triple query;
  std::int64_t rank = 1;
  bool filtered = false;
};

// Ranks `truth` among `candidates` as the tail of (head, relation, ?).
// rank = 1 + #strictly higher + floor(#equal others / 2). With a filter set,
// candidates c != truth such that (head, relation, c) is known are skipped.
RankResult RankTail(const EmbeddingTable& table, EntityId head,
                    RelationId relation, EntityId truth,
                    std::span<const EntityId> candidates,
                    const TripleSet* filter = nullptr);

enum class EvalSplit { kValid, kTest };

enum class CandidateScope {
  kLocal,   // the client's own entities
  kGlobal,  // every entity row of the table
};

struct EvalOptions {
  bool filtered = true;
  CandidateScope scope = CandidateScope::kLocal;
};

struct ClientMetrics {
  int client_id = 0;
  std::size_t num_queries = 0;
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
};

struct MetricsReport {
  // Unweighted means over clients.
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::vector<ClientMetrics> per_client;
};

// Metrics from explicit ranks. Throws MetricError on an empty list.
ClientMetrics MetricsFromRanks(std::span<const std::int64_t> ranks);

ClientMetrics EvaluateClient(const ClientDataset& client,
                             const EmbeddingTable& table, EvalSplit split,
                             const EvalOptions& options = {});

MetricsReport Evaluate(std::span<const ClientDataset> clients,
                       std::span<const EmbeddingTable> tables, EvalSplit split,
                       const EvalOptions& options = {});

// First round whose validation MRR reaches `target`.
std::optional<int> RoundsToTarget(
    std::span<const std::pair<int, double>> series, double target);

struct CommReport {
  int rounds = 0;
  std::vector<std::uint64_t> payload_elements;  // per round
  std::uint64_t cost_elements = 0;
  std::uint64_t cost_bytes = 0;
};

struct RoundLog;

// Sums the uploaded payload over the first `rounds` rounds.
CommReport CommunicationCost(std::span<const RoundLog> logs, int rounds);

// 1 - cost_a / cost_b.
double CostReduction(const CommReport& a, const CommReport& b);

}  // namespace fedkge

#endif  // FEDKGE_EVALUATION_H_
