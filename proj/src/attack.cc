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

#include "fedkge/attack.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedkge/errors.h"
#include "fedkge/rng.h"

namespace fedkge {
namespace {

double Norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Relation vectors are compared in the space the scoring function uses:
// RotatE phases become unit complex numbers, others stay as stored.
Matrix RelationFeatures(const Matrix& rows, ModelKind kind) {
  if (kind != ModelKind::kRotatE) return rows;
  Matrix out(rows.rows(), 2 * rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t k = 0; k < rows.cols(); ++k) {
      out(i, 2 * k) = std::cos(rows(i, k));
      out(i, 2 * k + 1) = std::sin(rows(i, k));
    }
  }
  return out;
}

Matrix GatherRows(const Matrix& source, std::span<const std::int32_t> ids) {
  Matrix out(ids.size(), source.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::ranges::copy(source.row(ids[i]), out.row(i).begin());
  }
  return out;
}

std::vector<std::int32_t> SeededPermutation(std::span<const std::int32_t> ids,
                                            std::uint64_t seed) {
  std::vector<std::int32_t> out(ids.begin(), ids.end());
  Rng rng(seed);
  rng.Shuffle(std::span<std::int32_t>(out));
  return out;
}

std::vector<std::int32_t> LeakedPrefix(std::span<const std::int32_t> ids,
                                       double ratio, std::uint64_t seed) {
  auto perm = SeededPermutation(ids, seed);
  const auto k = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(perm.size()) - 1e-9));
  perm.resize(std::min(perm.size(), k));
  std::ranges::sort(perm);
  return perm;
}

}  // namespace

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  const double na = Norm2(a), nb = Norm2(b);
  if (na == 0.0 || nb == 0.0) return -1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

std::vector<std::int32_t> MatchByCosine(const Matrix& unknown,
                                        std::span<const std::int32_t> ids,
                                        const Matrix& candidates) {
  if (ids.size() != candidates.rows()) {
    throw ContractViolation("candidate ids and rows differ in length");
  }
  if (ids.empty()) throw InsufficientKnowledgeError("no candidates to match");
  if (unknown.rows() > 0 && unknown.cols() != candidates.cols()) {
    throw ContractViolation("embedding widths differ");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, {}, [&](std::size_t i) { return ids[i]; });
  std::vector<double> norms(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    norms[j] = Norm2(candidates.row(j));
  }

  std::vector<std::int32_t> out(unknown.rows());
  for (std::size_t i = 0; i < unknown.rows(); ++i) {
    const auto u = unknown.row(i);
    const double nu = Norm2(u);
    double best = -std::numeric_limits<double>::infinity();
    std::int32_t best_id = ids[order.front()];
    for (std::size_t j : order) {
      double sim = -1.0;
      if (nu > 0.0 && norms[j] > 0.0) {
        const auto c = candidates.row(j);
        double dot = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) dot += u[k] * c[k];
        sim = dot / (nu * norms[j]);
      }
      if (sim > best) {
        best = sim;
        best_id = ids[j];
      }
    }
    out[i] = best_id;
  }
  return out;
}

std::vector<EntityId> ReconstructEntities(const Matrix& lee,
                                          const ElementEmbeddingPairs& eep) {
  if (eep.entity_ids.empty()) {
    throw InsufficientKnowledgeError("EEP holds no entity pairs");
  }
  return MatchByCosine(lee, eep.entity_ids, eep.entity_vectors);
}

std::vector<double> InferRelationEmbedding(std::span<const double> head,
                                           std::span<const double> tail,
                                           ModelKind kind) {
  if (head.size() != tail.size()) {
    throw ContractViolation("head and tail widths differ");
  }
  const std::size_t n = head.size();
  std::vector<double> r;
  switch (kind) {
    case ModelKind::kTransE:
      r.resize(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = tail[i] - head[i];
      break;
    case ModelKind::kDistMult:
      r.resize(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = head[i] * tail[i];
      break;
    case ModelKind::kRotatE:
      r.resize(n / 2);
      for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = head[2 * k], b = head[2 * k + 1];
        const double c = tail[2 * k], d = tail[2 * k + 1];
        if (a == 0.0 && b == 0.0) {
          r[k] = 0.0;
          continue;
        }
        // arg(t / h) = arg(t * conj(h))
        r[k] = std::atan2(d * a - c * b, c * a + d * b);
      }
      break;
    case ModelKind::kComplEx:
      r.resize(n);
      for (std::size_t k = 0; k < n; k += 2) {
        const double a = head[k], b = head[k + 1];
        const double c = tail[k], d = tail[k + 1];
        // conj(h) * t
        r[k] = a * c + b * d;
        r[k + 1] = a * d - b * c;
      }
      break;
  }
  return r;
}

std::vector<RelationId> ReconstructRelations(
    const AdversaryKnowledge& knowledge,
    std::span<const TripleSkeleton> skeleton) {
  const auto& eep = knowledge.eep;
  if (eep.relation_ids.empty()) {
    throw InsufficientKnowledgeError("EEP holds no relation pairs");
  }
  const Matrix known = RelationFeatures(eep.relation_vectors, knowledge.kind);

  if (knowledge.lre) {
    const Matrix lre = RelationFeatures(*knowledge.lre, knowledge.kind);
    const auto by_position = MatchByCosine(lre, eep.relation_ids, known);
    std::vector<RelationId> out;
    out.reserve(skeleton.size());
    for (const auto& s : skeleton) out.push_back(by_position.at(s.relation));
    return out;
  }

  const std::size_t width = known.cols();
  Matrix inferred(skeleton.size(), width);
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    auto r = InferRelationEmbedding(knowledge.lee.row(skeleton[i].head),
                                    knowledge.lee.row(skeleton[i].tail),
                                    knowledge.kind);
    if (knowledge.kind == ModelKind::kRotatE) {
      Matrix one(1, r.size());
      std::ranges::copy(r, one.row(0).begin());
      std::ranges::copy(RelationFeatures(one, knowledge.kind).row(0),
                        inferred.row(i).begin());
    } else {
      std::ranges::copy(r, inferred.row(i).begin());
    }
  }
  return MatchByCosine(inferred, eep.relation_ids, known);
}

ReconstructionReport ReconstructTriples(
    std::span<const EntityId> entity_map,
    std::span<const RelationId> relation_map, const TargetGroundTruth& truth) {
  if (entity_map.size() != truth.entity_at.size()) {
    throw ContractViolation("entity map does not cover every position");
  }
  if (!relation_map.empty() && relation_map.size() != truth.triples.size()) {
    throw ContractViolation("relation map does not cover every triple");
  }
  ReconstructionReport report;
  std::size_t correct_entities = 0;
  for (std::size_t i = 0; i < entity_map.size(); ++i) {
    const bool ok = entity_map[i] == truth.entity_at[i];
    report.entity_correct.push_back(ok);
    correct_entities += ok;
  }
  std::size_t correct_triples = 0;
  for (std::size_t i = 0; i < truth.triples.size(); ++i) {
    const auto& s = truth.skeleton[i];
    const auto& t = truth.triples[i];
    const bool ok = !relation_map.empty() && relation_map[i] == t.relation &&
                    entity_map[s.head] == t.head &&
                    entity_map[s.tail] == t.tail;
    report.triple_correct.push_back(ok);
    correct_triples += ok;
  }
  if (!entity_map.empty()) {
    report.err = static_cast<double>(correct_entities) /
                 static_cast<double>(entity_map.size());
  }
  if (!truth.triples.empty()) {
    report.trr = static_cast<double>(correct_triples) /
                 static_cast<double>(truth.triples.size());
  }
  return report;
}

AdversaryKnowledge BuildAdversaryKnowledge(const RunArtifacts& run, int target,
                                           const LeakageOptions& options,
                                           TargetGroundTruth* truth) {
  const int num_clients = static_cast<int>(run.clients.size());
  if (run.tables.size() != run.clients.size()) {
    throw ContractViolation("one table per client required");
  }
  if (options.traitor < 0 || options.traitor >= num_clients || target < 0 ||
      target >= num_clients || target == options.traitor) {
    throw ConfigError("invalid traitor/target pair");
  }
  if (!(options.leakage_ratio > 0.0 && options.leakage_ratio <= 1.0)) {
    throw ConfigError("leakage_ratio must be in (0, 1]");
  }
  if (run.mode == Mode::kLocal) {
    throw InsufficientKnowledgeError(
        "Local runs share no embeddings; the adversary has no LEE");
  }
  const ClientDataset& traitor = run.clients[options.traitor];
  const EmbeddingTable& traitor_table = run.tables[options.traitor];
  const ClientDataset& victim = run.clients[target];
  const EmbeddingTable& victim_table = run.tables[target];

  AdversaryKnowledge k;
  k.kind = run.kind;
  k.eep.entity_ids =
      LeakedPrefix(traitor.local_entities, options.leakage_ratio,
                   DeriveSeed(options.seed, "eep-entities",
                              {static_cast<std::uint64_t>(options.traitor)}));
  k.eep.entity_vectors = GatherRows(traitor_table.entities, k.eep.entity_ids);
  k.eep.relation_ids =
      LeakedPrefix(traitor.local_relations, options.leakage_ratio,
                   DeriveSeed(options.seed, "eep-relations",
                              {static_cast<std::uint64_t>(options.traitor)}));
  k.eep.relation_vectors =
      GatherRows(traitor_table.relations, k.eep.relation_ids);

  const auto entity_order = SeededPermutation(
      victim.local_entities,
      DeriveSeed(options.seed, "lee", {static_cast<std::uint64_t>(target)}));
  k.lee = GatherRows(victim_table.entities, entity_order);
  std::vector<std::int32_t> relation_order;
  if (run.mode == Mode::kFedR) {
    relation_order = SeededPermutation(
        victim.local_relations,
        DeriveSeed(options.seed, "lre", {static_cast<std::uint64_t>(target)}));
    k.lre = GatherRows(victim_table.relations, relation_order);
  }

  if (truth) {
    truth->entity_at = entity_order;
    truth->relation_at = relation_order;
    std::vector<int> entity_pos(victim_table.num_entities(), -1);
    for (std::size_t i = 0; i < entity_order.size(); ++i) {
      entity_pos[entity_order[i]] = static_cast<int>(i);
    }
    std::vector<int> relation_pos(victim_table.num_relations(), -1);
    for (std::size_t i = 0; i < relation_order.size(); ++i) {
      relation_pos[relation_order[i]] = static_cast<int>(i);
    }
    truth->triples.clear();
    truth->skeleton.clear();
    for (const auto* part : {&victim.train, &victim.valid, &victim.test}) {
      for (const Triple& t : *part) {
        truth->triples.push_back(t);
        truth->skeleton.push_back(
            {entity_pos[t.head], relation_pos[t.relation], entity_pos[t.tail]});
      }
    }
  }
  return k;
}

LeakageResult LeakageExperiment(const RunArtifacts& run,
                                const LeakageOptions& options) {
  LeakageResult result;
  result.mode = run.mode;
  result.leakage_ratio = options.leakage_ratio;
  if (run.mode == Mode::kLocal) {
    throw InsufficientKnowledgeError(
        "Local runs share no embeddings; the adversary has no LEE");
  }
  for (int target = 0; target < static_cast<int>(run.clients.size());
       ++target) {
    if (target == options.traitor) continue;
    TargetLeakage entry;
    entry.client_id = target;
    if (run.secagg) {
      // The server only ever saw masked shares and their sum.
      result.note =
          "secure aggregation: no per-client embeddings in the transcript";
      result.targets.push_back(entry);
      continue;
    }
    TargetGroundTruth truth;
    const AdversaryKnowledge k =
        BuildAdversaryKnowledge(run, target, options, &truth);
    const auto entities = ReconstructEntities(k.lee, k.eep);
    const auto relations = ReconstructRelations(k, truth.skeleton);
    entry.report = ReconstructTriples(entities, relations, truth);
    result.targets.push_back(std::move(entry));
  }
  return result;
}

}  // namespace fedkge
