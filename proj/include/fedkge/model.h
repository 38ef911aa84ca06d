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

#ifndef FEDKGE_MODEL_H_
#define FEDKGE_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedkge/kg_data.h"
#include "fedkge/matrix.h"
#include "fedkge/rng.h"

namespace fedkge {

enum class ModelKind { kTransE, kRotatE, kDistMult, kComplEx };

std::string_view ModelKindName(ModelKind kind);
// Case-insensitive; throws ConfigError on unknown names.
ModelKind ParseModelKind(std::string_view name);

enum class Norm { kL2, kL1 };

// kBoth corrupts head or tail with probability 1/2 per negative.
enum class Corruption { kBoth, kTailOnly };

// Width of an entity row / relation row for a model of embedding size `dim`.
// RotatE entities are `dim` complex numbers stored as interleaved
// (re, im) pairs and relations are `dim` phase angles. ComplEx uses
// interleaved pairs on both sides, so `dim` must be even.
std::size_t EntityWidth(ModelKind kind, int dim);
std::size_t RelationWidth(ModelKind kind, int dim);

struct EmbeddingTable {
  ModelKind kind = ModelKind::kTransE;
  Norm norm = Norm::kL2;
  Matrix entities;
  Matrix relations;

  std::size_t num_entities() const { return entities.rows(); }
  std::size_t num_relations() const { return relations.rows(); }

  friend bool operator==(const EmbeddingTable&,
                         const EmbeddingTable&) = default;
};

struct TrainConfig {
  double margin = 10.0;      // gamma
  double temperature = 1.0;  // alpha of self-adversarial sampling
  int num_negatives = 256;
  double learning_rate = 0.001;
  int local_epochs = 3;
  int batch_size = 512;
  int dim = 128;
  std::uint64_t seed = 0;
  Norm norm = Norm::kL2;
  Corruption corruption = Corruption::kBoth;

  void Validate(ModelKind kind) const;
};

// Uniform in [-sqrt(6/dim), sqrt(6/dim)]; RotatE phases uniform in [-pi, pi].
void InitEntityRows(ModelKind kind, int dim, Matrix& rows, std::uint64_t seed);
void InitRelationRows(ModelKind kind, int dim, Matrix& rows,
                      std::uint64_t seed);

EmbeddingTable InitEmbeddings(ModelKind kind, std::size_t num_entities,
                              std::size_t num_relations, int dim,
                              std::uint64_t seed, Norm norm = Norm::kL2);

// Plausibility score; higher is more plausible.
double Score(const EmbeddingTable& table, const Triple& triple);

// Scores every candidate as the tail of (head, relation, ?). Uses the same
// arithmetic as Score, so the results are bitwise equal to per-triple calls.
void ScoreTails(const EmbeddingTable& table, EntityId head, RelationId relation,
                std::span<const EntityId> candidates, std::span<double> out);

// Draws `n` corruptions of `triple` whose replaced entity comes from
// `local_entities`. Candidates found in `known` are redrawn a bounded number
// of times and kept after that.
std::vector<Triple> NegativeSample(const Triple& triple, int n,
                                   std::span<const EntityId> local_entities,
                                   const TripleSet* known,
                                   Corruption corruption, Rng& rng);

// Softmax of alpha * score over the negatives.
std::vector<double> SelfAdversarialWeights(std::span<const double> scores,
                                           double temperature);

// -log sigma(gamma + s(pos)) - sum_i p_i log sigma(-s(neg_i) - gamma)
double LossSelfAdversarial(const EmbeddingTable& table, const Triple& positive,
                           std::span<const Triple> negatives,
                           const TrainConfig& cfg);

// Gradient storage that is dense in memory but tracks which rows were
// touched, so optimizers and callers can stay sparse.
class SparseGradient {
 public:
  SparseGradient() = default;
  explicit SparseGradient(const EmbeddingTable& shape);

  std::span<double> EntityRow(EntityId id);
  std::span<double> RelationRow(RelationId id);

  std::span<const double> entity_grad(EntityId id) const {
    return entities_.row(id);
  }
  std::span<const double> relation_grad(RelationId id) const {
    return relations_.row(id);
  }
  const std::vector<EntityId>& touched_entities() const {
    return touched_entities_;
  }
  const std::vector<RelationId>& touched_relations() const {
    return touched_relations_;
  }
  bool Matches(const EmbeddingTable& table) const;

  // Zeroes touched rows and forgets them.
  void Clear();

 private:
  Matrix entities_;
  Matrix relations_;
  std::vector<char> entity_mark_;
  std::vector<char> relation_mark_;
  std::vector<EntityId> touched_entities_;
  std::vector<RelationId> touched_relations_;
};

struct TrainingExample {
  Triple positive;
  std::vector<Triple> negatives;
};

// Accumulates the gradient of the mean loss over `batch` into `grad` (which
// is cleared first) and returns that mean loss.
double AccumulateGradient(const EmbeddingTable& table,
                          std::span<const TrainingExample> batch,
                          const TrainConfig& cfg, SparseGradient& grad);

// Single-example convenience wrapper.
SparseGradient ComputeGradient(const EmbeddingTable& table,
                               const Triple& positive,
                               std::span<const Triple> negatives,
                               const TrainConfig& cfg);

struct AdamState {
  Matrix entity_m, entity_v;
  Matrix relation_m, relation_v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState For(const EmbeddingTable& table);
};

// Lazy Adam: moments and parameters change only on touched rows; the step
// counter is shared.
void AdamStep(AdamState& state, EmbeddingTable& table,
              const SparseGradient& grad, double learning_rate);

}  // namespace fedkge

#endif  // FEDKGE_MODEL_H_
