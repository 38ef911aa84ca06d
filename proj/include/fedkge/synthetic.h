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

#ifndef FEDKGE_SYNTHETIC_H_
#define FEDKGE_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "fedkge/kg_data.h"

namespace fedkge {

// Seeded generator for typed graphs with hub entities and translation
// structure. Entities get one of `num_types` types, a latent point z_e and a
// Zipf popularity w_e. Relation r links head type A_r to tail type B_r, has a
// latent offset v_r and a range of `range_size` candidate tails of type B_r.
// A triple (h, r, t) draws h uniformly from type A_r and t from the range of
// r with probability proportional to w_t * exp(-|z_t - z_h - v_r|^2 / T),
// T = `temperature`. Relation frequencies follow a Zipf law with exponent
// `relation_skew`.
struct SyntheticOptions {
  std::size_t num_entities = 3000;
  std::size_t num_relations = 14;
  std::size_t num_triples = 10000;
  std::size_t num_types = 8;
  std::size_t latent_dim = 8;
  std::size_t range_size = 50;
  double popularity_skew = 1.0;
  double temperature = 4.0;
  double offset_scale = 1.0;
  double relation_skew = 1.0;
  std::uint64_t seed = 0;
};

// Sparse, few relations, skewed relation frequencies.
SyntheticOptions BiomedicalLikeOptions(std::uint64_t seed);
// Dense, many relations, high entity overlap between clients.
SyntheticOptions EncyclopedicLikeOptions(std::uint64_t seed);

// Entities are named e<i>, relations r<i>. Throws ConfigError when the
// requested number of distinct triples cannot be produced.
KnowledgeGraph GenerateSyntheticKg(const SyntheticOptions& options);

}  // namespace fedkge

#endif  // FEDKGE_SYNTHETIC_H_
