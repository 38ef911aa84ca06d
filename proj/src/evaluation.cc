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

#include "fedkge/evaluation.h"

#include <numeric>

#include "fedkge/errors.h"
#include "fedkge/federation.h"

namespace fedkge {
namespace {

std::int64_t RankWithBuffer(const EmbeddingTable& table, EntityId head,
                            RelationId relation, EntityId truth,
                            std::span<const EntityId> candidates,
                            const TripleSet* filter,
                            std::vector<double>& scores) {
  scores.resize(candidates.size());
  ScoreTails(table, head, relation, candidates, scores);
  std::size_t truth_index = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == truth) {
      truth_index = i;
      break;
    }
  }
  if (truth_index == candidates.size()) {
    throw ContractViolation("truth entity " + std::to_string(truth) +
                            " is not a candidate");
  }
  const double target = scores[truth_index];
  std::int64_t higher = 0;
  std::int64_t equal = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == truth_index || candidates[i] == truth) continue;
    if (filter && filter->contains(Triple{head, relation, candidates[i]})) {
      continue;
    }
    if (scores[i] > target) {
      ++higher;
    } else if (scores[i] == target) {
      ++equal;
    }
  }
  return 1 + higher + equal / 2;
}

}  // namespace

RankResult RankTail(const EmbeddingTable& table, EntityId head,
                    RelationId relation, EntityId truth,
                    std::span<const EntityId> candidates,
                    const TripleSet* filter) {
  std::vector<double> scores;
  RankResult result;
  result.query = Triple{head, relation, truth};
  result.filtered = filter != nullptr;
  result.rank =
      RankWithBuffer(table, head, relation, truth, candidates, filter, scores);
  return result;
}

ClientMetrics MetricsFromRanks(std::span<const std::int64_t> ranks) {
  if (ranks.empty()) throw MetricError("metrics over an empty query set");
  ClientMetrics m;
  m.num_queries = ranks.size();
  for (std::int64_t r : ranks) {
    m.mrr += 1.0 / static_cast<double>(r);
    m.hits1 += r <= 1 ? 1.0 : 0.0;
    m.hits3 += r <= 3 ? 1.0 : 0.0;
    m.hits10 += r <= 10 ? 1.0 : 0.0;
  }
  const auto n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.hits1 /= n;
  m.hits3 /= n;
  m.hits10 /= n;
  return m;
}

ClientMetrics EvaluateClient(const ClientDataset& client,
                             const EmbeddingTable& table, EvalSplit split,
                             const EvalOptions& options) {
  const auto& queries = split == EvalSplit::kValid ? client.valid : client.test;
  if (queries.empty()) {
    throw MetricError("client " + std::to_string(client.client_id) +
                      " has an empty evaluation split");
  }
  std::vector<EntityId> global;
  std::span<const EntityId> candidates = client.local_entities;
  if (options.scope == CandidateScope::kGlobal) {
    global.resize(table.num_entities());
    std::iota(global.begin(), global.end(), 0);
    candidates = global;
  }
  TripleSet known;
  if (options.filtered) known = client.AllTriples();
  std::vector<double> scores;
  std::vector<std::int64_t> ranks;
  ranks.reserve(queries.size());
  for (const Triple& q : queries) {
    ranks.push_back(
        RankWithBuffer(table, q.head, q.relation, q.tail, candidates,
                       options.filtered ? &known : nullptr, scores));
  }
  ClientMetrics m = MetricsFromRanks(ranks);
  m.client_id = client.client_id;
  return m;
}

MetricsReport Evaluate(std::span<const ClientDataset> clients,
                       std::span<const EmbeddingTable> tables, EvalSplit split,
                       const EvalOptions& options) {
  if (clients.size() != tables.size()) {
    throw ContractViolation("one table per client required");
  }
  if (clients.empty()) throw MetricError("no clients to evaluate");
  MetricsReport report;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    report.per_client.push_back(
        EvaluateClient(clients[i], tables[i], split, options));
  }
  const auto n = static_cast<double>(clients.size());
  for (const auto& m : report.per_client) {
    report.mrr += m.mrr / n;
    report.hits1 += m.hits1 / n;
    report.hits3 += m.hits3 / n;
    report.hits10 += m.hits10 / n;
  }
  return report;
}

std::optional<int> RoundsToTarget(
    std::span<const std::pair<int, double>> series, double target) {
  for (const auto& [round, mrr] : series) {
    if (mrr >= target) return round;
  }
  return std::nullopt;
}

CommReport CommunicationCost(std::span<const RoundLog> logs, int rounds) {
  if (rounds < 0 || static_cast<std::size_t>(rounds) > logs.size()) {
    throw ContractViolation("logs cover " + std::to_string(logs.size()) +
                            " rounds, asked for " + std::to_string(rounds));
  }
  CommReport report;
  report.rounds = rounds;
  for (int i = 0; i < rounds; ++i) {
    std::uint64_t elements = 0;
    for (const auto& upload : logs[i].uploads) elements += upload.elements;
    report.payload_elements.push_back(elements);
    report.cost_elements += elements;
  }
  report.cost_bytes = report.cost_elements * kBytesPerScalar;
  return report;
}

double CostReduction(const CommReport& a, const CommReport& b) {
  if (b.cost_elements == 0) {
    throw MetricError("reference cost is zero");
  }
  return 1.0 - static_cast<double>(a.cost_elements) /
                   static_cast<double>(b.cost_elements);
}

}  // namespace fedkge
