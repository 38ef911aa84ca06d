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

#ifndef FEDKGE_ATTACK_H_
#define FEDKGE_ATTACK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedkge/federation.h"
#include "fedkge/kg_data.h"
#include "fedkge/matrix.h"
#include "fedkge/model.h"

namespace fedkge {

// Element-embedding pairs leaked by the traitor client.
struct ElementEmbeddingPairs {
  std::vector<EntityId> entity_ids;
  Matrix entity_vectors;
  std::vector<RelationId> relation_ids;
  Matrix relation_vectors;
};

struct AdversaryKnowledge {
  ElementEmbeddingPairs eep;
  Matrix lee;                 // target entity embeddings, row = position
  std::optional<Matrix> lre;  // target relation embeddings (FedR only)
  ModelKind kind = ModelKind::kTransE;
};

// Cosine similarity; -1 when either vector is zero.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

// For each row of `unknown`, the id of the most similar candidate row.
// Ties go to the lowest id.
std::vector<std::int32_t> MatchByCosine(const Matrix& unknown,
                                        std::span<const std::int32_t> ids,
                                        const Matrix& candidates);

// Predicted entity id for every LEE position.
std::vector<EntityId> ReconstructEntities(const Matrix& lee,
                                          const ElementEmbeddingPairs& eep);

// Closed-form relation guess from a head/tail pair: TransE t - h, RotatE
// phases arg(t_i / h_i), DistMult h * t, ComplEx conj(h) * t.
std::vector<double> InferRelationEmbedding(std::span<const double> head,
                                           std::span<const double> tail,
                                           ModelKind kind);

// Positions of a target triple inside LEE (head, tail) and LRE (relation).
struct TripleSkeleton {
  int head = 0;
  int relation = 0;
  int tail = 0;
};

// Predicted relation id for every skeleton triple. Uses LRE when present
// (FedR), otherwise infers the relation from the LEE endpoints (FedE).
// Throws InsufficientKnowledgeError when the EEP holds no relations.
std::vector<RelationId> ReconstructRelations(
    const AdversaryKnowledge& knowledge,
    std::span<const TripleSkeleton> skeleton);

// Evaluation-only view of the target.
struct TargetGroundTruth {
  std::vector<EntityId> entity_at;      // LEE position -> true id
  std::vector<RelationId> relation_at;  // LRE position -> true id
  std::vector<Triple> triples;
  std::vector<TripleSkeleton> skeleton;  // parallel to triples
};

struct ReconstructionReport {
  double err = 0.0;
  double trr = 0.0;
  std::vector<bool> entity_correct;
  std::vector<bool> triple_correct;
};

// A triple counts iff head, relation and tail are all predicted correctly.
// An empty relation map reconstructs nothing.
ReconstructionReport ReconstructTriples(
    std::span<const EntityId> entity_map,
    std::span<const RelationId> relation_map, const TargetGroundTruth& truth);

struct RunArtifacts {
  Mode mode = Mode::kFedE;
  bool secagg = false;
  ModelKind kind = ModelKind::kTransE;
  std::vector<ClientDataset> clients;
  std::vector<EmbeddingTable> tables;
};

struct LeakageOptions {
  double leakage_ratio = 1.0;
  int traitor = 0;
  std::uint64_t seed = 0;
};

// Knowledge of an adversary colluding with `options.traitor` against
// `target`; fills `truth` for scoring. EEP subsets for different leakage
// ratios are nested prefixes of one seeded permutation.
AdversaryKnowledge BuildAdversaryKnowledge(const RunArtifacts& run, int target,
                                           const LeakageOptions& options,
                                           TargetGroundTruth* truth);

struct TargetLeakage {
  int client_id = 0;
  ReconstructionReport report;
};

struct LeakageResult {
  Mode mode = Mode::kFedE;
  double leakage_ratio = 1.0;
  std::vector<TargetLeakage> targets;
  std::string note;
};

// Runs the attack against every non-traitor client. Local runs share
// nothing and are refused; runs aggregated through secure aggregation
// expose no per-client vectors and yield all-zero reports.
LeakageResult LeakageExperiment(const RunArtifacts& run,
                                const LeakageOptions& options);

}  // namespace fedkge

#endif  // FEDKGE_ATTACK_H_
