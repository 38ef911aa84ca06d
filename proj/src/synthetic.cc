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

#include "fedkge/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fedkge/errors.h"
#include "fedkge/matrix.h"
#include "fedkge/rng.h"

namespace fedkge {
namespace {

double Gaussian(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument positive.
  const double u = 1.0 - rng.UniformDouble();
  const double v = rng.UniformDouble();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

// Index drawn with probability proportional to exp(logits[i]).
std::size_t SampleLogits(std::span<const double> logits, Rng& rng) {
  const double top = *std::ranges::max_element(logits);
  double total = 0.0;
  for (double l : logits) total += std::exp(l - top);
  double u = rng.UniformDouble() * total;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    u -= std::exp(logits[i] - top);
    if (u < 0.0) return i;
  }
  return logits.size() - 1;
}

}  // namespace

SyntheticOptions BiomedicalLikeOptions(std::uint64_t seed) {
  SyntheticOptions o;
  o.range_size = 20;
  o.temperature = 0.5;
  o.seed = seed;
  return o;
}

SyntheticOptions EncyclopedicLikeOptions(std::uint64_t seed) {
  SyntheticOptions o;
  o.num_entities = 1500;
  o.num_relations = 60;
  o.num_triples = 24000;
  o.range_size = 60;
  o.relation_skew = 0.5;
  o.temperature = 1.0;
  o.seed = seed;
  return o;
}

KnowledgeGraph GenerateSyntheticKg(const SyntheticOptions& o) {
  if (o.num_entities < 2 || o.num_relations < 1 || o.latent_dim < 1 ||
      o.num_types < 2 || o.num_types > o.num_entities / 2 || o.range_size < 1 ||
      o.range_size > o.num_entities / o.num_types || !(o.temperature > 0.0)) {
    throw ConfigError("synthetic graph options out of range");
  }
  const double capacity = static_cast<double>(o.num_entities / o.num_types) *
                          static_cast<double>(o.num_relations) *
                          static_cast<double>(o.range_size);
  if (static_cast<double>(o.num_triples) > 0.25 * capacity) {
    throw ConfigError("too many triples requested for the graph size");
  }

  Rng latent_rng(DeriveSeed(o.seed, "synthetic-latent"));
  Matrix z(o.num_entities, o.latent_dim);
  for (double& x : z.values()) x = Gaussian(latent_rng);
  Matrix v(o.num_relations, o.latent_dim);
  for (double& x : v.values()) x = o.offset_scale * Gaussian(latent_rng);

  // Popularity ranks are a random permutation of the entities.
  std::vector<EntityId> by_rank(o.num_entities);
  for (std::size_t e = 0; e < o.num_entities; ++e) {
    by_rank[e] = static_cast<EntityId>(e);
  }
  latent_rng.Shuffle(std::span<EntityId>(by_rank));
  std::vector<double> log_popularity(o.num_entities);
  for (std::size_t k = 0; k < o.num_entities; ++k) {
    log_popularity[by_rank[k]] =
        -o.popularity_skew * std::log(static_cast<double>(k + 1));
  }

  // Types are dealt round-robin over a shuffled order, so sizes differ by
  // at most one.
  std::vector<std::vector<EntityId>> members(o.num_types);
  {
    std::vector<EntityId> order = by_rank;
    latent_rng.Shuffle(std::span<EntityId>(order));
    for (std::size_t i = 0; i < order.size(); ++i) {
      members[i % o.num_types].push_back(order[i]);
    }
    for (auto& m : members) std::ranges::sort(m);
  }

  // Ranges: distinct tail-type entities per relation, sorted.
  std::vector<std::size_t> head_type(o.num_relations);
  std::vector<std::vector<EntityId>> ranges(o.num_relations);
  for (std::size_t r = 0; r < o.num_relations; ++r) {
    head_type[r] = latent_rng.UniformInt(o.num_types);
    std::size_t tail_type = latent_rng.UniformInt(o.num_types - 1);
    if (tail_type >= head_type[r]) ++tail_type;
    std::vector<EntityId> pool = members[tail_type];
    for (std::size_t i = 0; i < o.range_size; ++i) {
      const std::size_t j = i + latent_rng.UniformInt(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    ranges[r].assign(pool.begin(), pool.begin() + o.range_size);
    std::ranges::sort(ranges[r]);
  }

  std::vector<double> cumulative(o.num_relations);
  double total = 0.0;
  for (std::size_t r = 0; r < o.num_relations; ++r) {
    total += std::pow(static_cast<double>(r + 1), -o.relation_skew);
    cumulative[r] = total;
  }

  KnowledgeGraph kg;
  for (std::size_t e = 0; e < o.num_entities; ++e) {
    kg.entities.Intern("e" + std::to_string(e));
  }
  for (std::size_t r = 0; r < o.num_relations; ++r) {
    kg.relations.Intern("r" + std::to_string(r));
  }

  Rng rng(DeriveSeed(o.seed, "synthetic-triples"));
  TripleSet seen;
  std::vector<double> logits(o.range_size);
  const std::size_t max_draws = 50 * o.num_triples + 1000;
  for (std::size_t draw = 0;
       kg.triples.size() < o.num_triples && draw < max_draws; ++draw) {
    const double u = rng.UniformDouble() * total;
    const auto rel = static_cast<RelationId>(std::min<std::size_t>(
        std::ranges::upper_bound(cumulative, u) - cumulative.begin(),
        o.num_relations - 1));
    const auto& heads = members[head_type[rel]];
    const EntityId h = heads[rng.UniformInt(heads.size())];
    const auto& range = ranges[rel];
    for (std::size_t i = 0; i < range.size(); ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < o.latent_dim; ++k) {
        const double diff = z(range[i], k) - z(h, k) - v(rel, k);
        d += diff * diff;
      }
      logits[i] = log_popularity[range[i]] - d / o.temperature;
    }
    const EntityId t = range[SampleLogits(logits, rng)];
    if (t == h) continue;
    const Triple triple{h, rel, t};
    if (seen.insert(triple).second) kg.triples.push_back(triple);
  }
  if (kg.triples.size() < o.num_triples) {
    throw ConfigError("could not draw enough distinct triples");
  }
  return kg;
}

}  // namespace fedkge
