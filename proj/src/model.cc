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

#include "fedkge/model.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include "fedkge/errors.h"

namespace fedkge {
namespace {

constexpr int kMaxNegativeRedraws = 10;

bool IsDistance(ModelKind kind) {
  return kind == ModelKind::kTransE || kind == ModelKind::kRotatE;
}

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// The relation operand that Combine() consumes. For RotatE this expands the
// phase vector into interleaved unit complex numbers; other models use the
// stored row directly.
class RelationOperand {
 public:
  RelationOperand(ModelKind kind, std::span<const double> row) : kind_(kind) {
    if (kind == ModelKind::kRotatE) {
      expanded_.resize(2 * row.size());
      for (std::size_t k = 0; k < row.size(); ++k) {
        expanded_[2 * k] = std::cos(row[k]);
        expanded_[2 * k + 1] = std::sin(row[k]);
      }
      values_ = expanded_;
    } else {
      values_ = row;
    }
  }

  std::span<const double> values() const { return values_; }
  ModelKind kind() const { return kind_; }

 private:
  ModelKind kind_;
  std::vector<double> expanded_;
  std::span<const double> values_;
};

// q = h (op) r: translation, complex product or element-wise product.
void Combine(ModelKind kind, std::span<const double> h,
             std::span<const double> r, std::span<double> q) {
  const std::size_t n = q.size();
  switch (kind) {
    case ModelKind::kTransE:
      for (std::size_t i = 0; i < n; ++i) q[i] = h[i] + r[i];
      break;
    case ModelKind::kDistMult:
      for (std::size_t i = 0; i < n; ++i) q[i] = h[i] * r[i];
      break;
    case ModelKind::kRotatE:
    case ModelKind::kComplEx:
      for (std::size_t i = 0; i < n; i += 2) {
        const double a = h[i], b = h[i + 1];
        const double c = r[i], d = r[i + 1];
        q[i] = a * c - b * d;
        q[i + 1] = a * d + b * c;
      }
      break;
  }
}

double TailScore(ModelKind kind, Norm norm, std::span<const double> q,
                 std::span<const double> t) {
  const std::size_t n = q.size();
  // Four fixed partial sums let the compiler vectorize while keeping the
  // summation order, and hence the result, independent of the target.
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t i = 0;
  if (!IsDistance(kind)) {
    for (; i + 4 <= n; i += 4) {
      a0 += q[i] * t[i];
      a1 += q[i + 1] * t[i + 1];
      a2 += q[i + 2] * t[i + 2];
      a3 += q[i + 3] * t[i + 3];
    }
    for (; i < n; ++i) a0 += q[i] * t[i];
    return (a0 + a1) + (a2 + a3);
  }
  if (norm == Norm::kL2) {
    for (; i + 4 <= n; i += 4) {
      const double x0 = q[i] - t[i], x1 = q[i + 1] - t[i + 1];
      const double x2 = q[i + 2] - t[i + 2], x3 = q[i + 3] - t[i + 3];
      a0 += x0 * x0;
      a1 += x1 * x1;
      a2 += x2 * x2;
      a3 += x3 * x3;
    }
    for (; i < n; ++i) {
      const double x = q[i] - t[i];
      a0 += x * x;
    }
    return -std::sqrt((a0 + a1) + (a2 + a3));
  }
  double acc = 0.0;
  if (kind == ModelKind::kTransE) {
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(q[i] - t[i]);
    return -acc;
  }
  // RotatE L1: sum of complex moduli.
  for (std::size_t i = 0; i < n; i += 2) {
    const double xr = q[i] - t[i], xi = q[i + 1] - t[i + 1];
    acc += std::sqrt(xr * xr + xi * xi);
  }
  return -acc;
}

// Adds w * d score / d(h, r-operand, t) for q = Combine(h, r).
// `g` is scratch of the same width as q.
void AddScoreGradient(ModelKind kind, Norm norm, std::span<const double> h,
                      std::span<const double> r, std::span<const double> t,
                      std::span<const double> q, double score, double w,
                      std::span<double> g, std::span<double> gh,
                      std::span<double> gr, std::span<double> gt) {
  const std::size_t n = q.size();
  // g = d score / d q; gt gets its own term.
  if (IsDistance(kind)) {
    if (norm == Norm::kL2) {
      const double len = -score;
      const double inv = len > 0.0 ? -1.0 / len : 0.0;
      for (std::size_t i = 0; i < n; ++i) g[i] = (q[i] - t[i]) * inv;
    } else if (kind == ModelKind::kTransE) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = q[i] - t[i];
        g[i] = x > 0.0 ? -1.0 : (x < 0.0 ? 1.0 : 0.0);
      }
    } else {
      for (std::size_t i = 0; i < n; i += 2) {
        const double xr = q[i] - t[i], xi = q[i + 1] - t[i + 1];
        const double len = std::sqrt(xr * xr + xi * xi);
        const double inv = len > 0.0 ? -1.0 / len : 0.0;
        g[i] = xr * inv;
        g[i + 1] = xi * inv;
      }
    }
    for (std::size_t i = 0; i < n; ++i) gt[i] -= w * g[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = t[i];
      gt[i] += w * q[i];
    }
  }

  switch (kind) {
    case ModelKind::kTransE:
      for (std::size_t i = 0; i < n; ++i) {
        gh[i] += w * g[i];
        gr[i] += w * g[i];
      }
      break;
    case ModelKind::kDistMult:
      for (std::size_t i = 0; i < n; ++i) {
        gh[i] += w * g[i] * r[i];
        gr[i] += w * g[i] * h[i];
      }
      break;
    case ModelKind::kRotatE:
    case ModelKind::kComplEx:
      for (std::size_t i = 0; i < n; i += 2) {
        const double a = h[i], b = h[i + 1];
        const double c = r[i], d = r[i + 1];
        const double gre = g[i], gim = g[i + 1];
        gh[i] += w * (gre * c + gim * d);
        gh[i + 1] += w * (-gre * d + gim * c);
        gr[i] += w * (gre * a + gim * b);
        gr[i + 1] += w * (-gre * b + gim * a);
      }
      break;
  }
}

void CheckIds(const EmbeddingTable& table, const Triple& t) {
  const auto ne = static_cast<EntityId>(table.num_entities());
  const auto nr = static_cast<RelationId>(table.num_relations());
  if (t.head < 0 || t.head >= ne || t.tail < 0 || t.tail >= ne ||
      t.relation < 0 || t.relation >= nr) {
    throw IndexError("triple (" + std::to_string(t.head) + ", " +
                     std::to_string(t.relation) + ", " +
                     std::to_string(t.tail) + ") out of range");
  }
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransE:
      return "TransE";
    case ModelKind::kRotatE:
      return "RotatE";
    case ModelKind::kDistMult:
      return "DistMult";
    case ModelKind::kComplEx:
      return "ComplEx";
  }
  return "unknown";
}

ModelKind ParseModelKind(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(c));
  if (lower == "transe") return ModelKind::kTransE;
  if (lower == "rotate") return ModelKind::kRotatE;
  if (lower == "distmult") return ModelKind::kDistMult;
  if (lower == "complex") return ModelKind::kComplEx;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

std::size_t EntityWidth(ModelKind kind, int dim) {
  return kind == ModelKind::kRotatE ? 2 * static_cast<std::size_t>(dim)
                                    : static_cast<std::size_t>(dim);
}

std::size_t RelationWidth(ModelKind, int dim) {
  return static_cast<std::size_t>(dim);
}

void TrainConfig::Validate(ModelKind kind) const {
  if (!(margin > 0)) throw ConfigError("margin must be > 0");
  if (!(temperature > 0)) throw ConfigError("temperature must be > 0");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (num_negatives < 1) throw ConfigError("num_negatives must be >= 1");
  if (local_epochs < 0) throw ConfigError("local_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (kind == ModelKind::kComplEx && dim % 2 != 0) {
    throw ConfigError("ComplEx requires an even dim");
  }
}

void InitEntityRows(ModelKind kind, int dim, Matrix& rows, std::uint64_t seed) {
  if (kind == ModelKind::kComplEx && dim % 2 != 0) {
    throw ConfigError("ComplEx requires an even dim");
  }
  const double bound = std::sqrt(6.0 / dim);
  Rng rng(seed);
  for (double& v : rows.values()) v = rng.Uniform(-bound, bound);
}

void InitRelationRows(ModelKind kind, int dim, Matrix& rows,
                      std::uint64_t seed) {
  if (kind == ModelKind::kComplEx && dim % 2 != 0) {
    throw ConfigError("ComplEx requires an even dim");
  }
  Rng rng(seed);
  if (kind == ModelKind::kRotatE) {
    for (double& v : rows.values()) {
      v = rng.Uniform(-std::numbers::pi, std::numbers::pi);
    }
    return;
  }
  const double bound = std::sqrt(6.0 / dim);
  for (double& v : rows.values()) v = rng.Uniform(-bound, bound);
}

EmbeddingTable InitEmbeddings(ModelKind kind, std::size_t num_entities,
                              std::size_t num_relations, int dim,
                              std::uint64_t seed, Norm norm) {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  EmbeddingTable table;
  table.kind = kind;
  table.norm = norm;
  table.entities = Matrix(num_entities, EntityWidth(kind, dim));
  table.relations = Matrix(num_relations, RelationWidth(kind, dim));
  InitEntityRows(kind, dim, table.entities, DeriveSeed(seed, "entities"));
  InitRelationRows(kind, dim, table.relations, DeriveSeed(seed, "relations"));
  return table;
}

double Score(const EmbeddingTable& table, const Triple& triple) {
  CheckIds(table, triple);
  const RelationOperand rel(table.kind, table.relations.row(triple.relation));
  std::vector<double> q(table.entities.cols());
  Combine(table.kind, table.entities.row(triple.head), rel.values(), q);
  return TailScore(table.kind, table.norm, q, table.entities.row(triple.tail));
}

void ScoreTails(const EmbeddingTable& table, EntityId head, RelationId relation,
                std::span<const EntityId> candidates, std::span<double> out) {
  CheckIds(table, Triple{head, relation, head});
  if (out.size() != candidates.size()) {
    throw ContractViolation("ScoreTails: output size mismatch");
  }
  const RelationOperand rel(table.kind, table.relations.row(relation));
  std::vector<double> q(table.entities.cols());
  Combine(table.kind, table.entities.row(head), rel.values(), q);
  const auto ne = static_cast<EntityId>(table.num_entities());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] < 0 || candidates[i] >= ne) {
      throw IndexError("candidate entity out of range");
    }
    out[i] =
        TailScore(table.kind, table.norm, q, table.entities.row(candidates[i]));
  }
}

std::vector<Triple> NegativeSample(const Triple& triple, int n,
                                   std::span<const EntityId> local_entities,
                                   const TripleSet* known,
                                   Corruption corruption, Rng& rng) {
  std::vector<Triple> out;
  if (n <= 0) return out;
  if (local_entities.size() < 2) {
    throw ContractViolation("negative sampling needs >= 2 local entities");
  }
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const bool corrupt_head =
        corruption == Corruption::kBoth && rng.Bernoulli(0.5);
    Triple neg = triple;
    for (int attempt = 0; attempt <= kMaxNegativeRedraws; ++attempt) {
      const EntityId e = local_entities[rng.UniformInt(local_entities.size())];
      neg = triple;
      (corrupt_head ? neg.head : neg.tail) = e;
      if (known == nullptr || !known->contains(neg)) break;
    }
    out.push_back(neg);
  }
  return out;
}

std::vector<double> SelfAdversarialWeights(std::span<const double> scores,
                                           double temperature) {
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) top = std::max(top, temperature * s);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(temperature * scores[i] - top);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double LossSelfAdversarial(const EmbeddingTable& table, const Triple& positive,
                           std::span<const Triple> negatives,
                           const TrainConfig& cfg) {
  if (negatives.empty()) throw ContractViolation("no negatives");
  const double gamma = cfg.margin;
  double loss = Softplus(-(gamma + Score(table, positive)));
  std::vector<double> scores;
  scores.reserve(negatives.size());
  for (const Triple& t : negatives) scores.push_back(Score(table, t));
  const auto p = SelfAdversarialWeights(scores, cfg.temperature);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    loss += p[i] * Softplus(scores[i] + gamma);
  }
  return loss;
}

SparseGradient::SparseGradient(const EmbeddingTable& shape)
    : entities_(shape.entities.rows(), shape.entities.cols()),
      relations_(shape.relations.rows(), shape.relations.cols()),
      entity_mark_(shape.entities.rows(), 0),
      relation_mark_(shape.relations.rows(), 0) {}

std::span<double> SparseGradient::EntityRow(EntityId id) {
  if (!entity_mark_[id]) {
    entity_mark_[id] = 1;
    touched_entities_.push_back(id);
  }
  return entities_.row(id);
}

std::span<double> SparseGradient::RelationRow(RelationId id) {
  if (!relation_mark_[id]) {
    relation_mark_[id] = 1;
    touched_relations_.push_back(id);
  }
  return relations_.row(id);
}

bool SparseGradient::Matches(const EmbeddingTable& table) const {
  return entities_.SameShape(table.entities) &&
         relations_.SameShape(table.relations);
}

void SparseGradient::Clear() {
  for (EntityId id : touched_entities_) {
    std::ranges::fill(entities_.row(id), 0.0);
    entity_mark_[id] = 0;
  }
  for (RelationId id : touched_relations_) {
    std::ranges::fill(relations_.row(id), 0.0);
    relation_mark_[id] = 0;
  }
  touched_entities_.clear();
  touched_relations_.clear();
}

double AccumulateGradient(const EmbeddingTable& table,
                          std::span<const TrainingExample> batch,
                          const TrainConfig& cfg, SparseGradient& grad) {
  if (!grad.Matches(table)) {
    throw ContractViolation("gradient shape does not match the table");
  }
  grad.Clear();
  if (batch.empty()) return 0.0;
  const ModelKind kind = table.kind;
  const std::size_t width = table.entities.cols();
  const double gamma = cfg.margin;
  const double scale = 1.0 / static_cast<double>(batch.size());

  std::vector<double> q(width), g(width), operand_grad(width);
  std::vector<double> scores;
  double total_loss = 0.0;

  for (const TrainingExample& ex : batch) {
    if (ex.negatives.empty()) throw ContractViolation("no negatives");
    CheckIds(table, ex.positive);
    for (const Triple& t : ex.negatives) {
      CheckIds(table, t);
      if (t.relation != ex.positive.relation) {
        throw ContractViolation("negative changes the relation");
      }
    }
    const RelationId rel_id = ex.positive.relation;
    const RelationOperand rel(kind, table.relations.row(rel_id));
    const auto r = rel.values();

    auto score_of = [&](const Triple& t) {
      Combine(kind, table.entities.row(t.head), r, q);
      return TailScore(kind, table.norm, q, table.entities.row(t.tail));
    };

    const double pos_score = score_of(ex.positive);
    scores.resize(ex.negatives.size());
    for (std::size_t i = 0; i < ex.negatives.size(); ++i) {
      scores[i] = score_of(ex.negatives[i]);
    }
    const auto p = SelfAdversarialWeights(scores, cfg.temperature);

    double loss = Softplus(-(gamma + pos_score));
    for (std::size_t i = 0; i < scores.size(); ++i) {
      loss += p[i] * Softplus(scores[i] + gamma);
    }
    total_loss += loss;

    std::ranges::fill(operand_grad, 0.0);
    auto add = [&](const Triple& t, double score, double w) {
      const auto h = table.entities.row(t.head);
      const auto tv = table.entities.row(t.tail);
      Combine(kind, h, r, q);
      // gh and gt alias when head == tail; both only accumulate.
      auto gh = grad.EntityRow(t.head);
      auto gt = grad.EntityRow(t.tail);
      AddScoreGradient(kind, table.norm, h, r, tv, q, score, w, g, gh,
                       operand_grad, gt);
    };
    // dL/ds_pos = -sigma(-(gamma + s_pos)); dL/ds_i = p_i sigma(s_i + gamma).
    add(ex.positive, pos_score, -Sigmoid(-(gamma + pos_score)) * scale);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      add(ex.negatives[i], scores[i],
          p[i] * Sigmoid(scores[i] + gamma) * scale);
    }

    auto gr = grad.RelationRow(rel_id);
    if (kind == ModelKind::kRotatE) {
      // Chain rule through u = (cos theta, sin theta).
      for (std::size_t k = 0; k < gr.size(); ++k) {
        gr[k] += operand_grad[2 * k] * -r[2 * k + 1] +
                 operand_grad[2 * k + 1] * r[2 * k];
      }
    } else {
      for (std::size_t k = 0; k < gr.size(); ++k) gr[k] += operand_grad[k];
    }
  }
  return total_loss * scale;
}

SparseGradient ComputeGradient(const EmbeddingTable& table,
                               const Triple& positive,
                               std::span<const Triple> negatives,
                               const TrainConfig& cfg) {
  SparseGradient grad(table);
  TrainingExample ex{positive, {negatives.begin(), negatives.end()}};
  AccumulateGradient(table, std::span<const TrainingExample>(&ex, 1), cfg,
                     grad);
  return grad;
}

AdamState AdamState::For(const EmbeddingTable& table) {
  AdamState s;
  s.entity_m = Matrix(table.entities.rows(), table.entities.cols());
  s.entity_v = s.entity_m;
  s.relation_m = Matrix(table.relations.rows(), table.relations.cols());
  s.relation_v = s.relation_m;
  return s;
}

void AdamStep(AdamState& state, EmbeddingTable& table,
              const SparseGradient& grad, double learning_rate) {
  if (!state.entity_m.SameShape(table.entities) ||
      !state.relation_m.SameShape(table.relations) || !grad.Matches(table)) {
    throw ContractViolation("Adam state, table and gradient shapes differ");
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  auto update = [&](std::span<double> param, std::span<double> m,
                    std::span<double> v, std::span<const double> g) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      param[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  for (EntityId id : grad.touched_entities()) {
    update(table.entities.row(id), state.entity_m.row(id),
           state.entity_v.row(id), grad.entity_grad(id));
  }
  for (RelationId id : grad.touched_relations()) {
    update(table.relations.row(id), state.relation_m.row(id),
           state.relation_v.row(id), grad.relation_grad(id));
  }
}

}  // namespace fedkge
