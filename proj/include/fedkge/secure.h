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

#ifndef FEDKGE_SECURE_H_
#define FEDKGE_SECURE_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "fedkge/kg_data.h"

namespace fedkge {

// Output of the private set union as seen by the server: the union itself
// and how many ids each client contributed. Membership stays hidden.
struct PsuResult {
  std::vector<RelationId> union_ids;  // sorted
  std::vector<std::size_t> contributed_counts;
};

// Simulated ideal PSU functionality. The seed only fixes the order in which
// the simulated parties are visited.
PsuResult PsuUnion(std::span<const std::vector<RelationId>> local_sets,
                   std::uint64_t seed);

// Fixed-point embedding of reals into Z_p with p = 2^61 - 1.
class FixedPointCodec {
 public:
  static constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

  // Throws ConfigError unless 2 * max_participants * 2^scale_bits * max_abs
  // fits below the modulus.
  explicit FixedPointCodec(int scale_bits = 24, double max_abs = 64.0,
                           int max_participants = 64);

  int scale_bits() const { return scale_bits_; }
  std::uint64_t modulus() const { return kMersenne61; }
  double max_abs() const { return max_abs_; }
  int max_participants() const { return max_participants_; }

  // Throws EncodingError when |value| > max_abs or value is not finite.
  std::uint64_t Encode(double value) const;
  // Maps the upper half of the field to negatives.
  double Decode(std::uint64_t element) const;

  std::vector<std::uint64_t> EncodeVector(std::span<const double> v) const;
  std::vector<double> DecodeVector(std::span<const std::uint64_t> v) const;

  static std::uint64_t Add(std::uint64_t a, std::uint64_t b);
  static std::uint64_t Sub(std::uint64_t a, std::uint64_t b);

 private:
  int scale_bits_;
  double max_abs_;
  int max_participants_;
  double scale_;
};

using PairSeed = std::array<unsigned char, 32>;
// Keyed by (min(u, v), max(u, v)), so seed(u, v) == seed(v, u).
using PairwiseSeeds = std::map<std::pair<int, int>, PairSeed>;

// Simulated Diffie-Hellman agreement: every pair of participants obtains a
// shared 256-bit seed derived from the session seed.
PairwiseSeeds AgreePairwiseSeeds(std::span<const int> participants,
                                 std::uint64_t session_seed);

// Deterministic pseudorandom field elements keyed by `seed` (ChaCha20
// stream via libsodium, rejection-sampled into [0, p)).
std::vector<std::uint64_t> ExpandMask(const PairSeed& seed, std::size_t length);

struct MaskedShare {
  int client_id = 0;
  std::vector<int> participants;  // sorted, includes client_id
  std::vector<std::uint64_t> values;
};

// t_u = s_u + sum_{v > u} m(u, v) - sum_{v < u} m(v, u)  (mod p).
MaskedShare SecAggShare(std::span<const double> secret, int client_id,
                        const PairwiseSeeds& seeds,
                        const FixedPointCodec& codec);

// Sum of the masks a client adds; exposed for the cancellation property.
std::vector<std::uint64_t> PairwiseMaskSum(int client_id,
                                           const PairwiseSeeds& seeds,
                                           std::size_t length);

// Field sum of all shares, decoded. Throws UnresolvedMaskError unless the
// shares come from exactly the agreed participant set.
std::vector<double> SecAggSum(std::span<const MaskedShare> shares,
                              const FixedPointCodec& codec);

}  // namespace fedkge

#endif  // FEDKGE_SECURE_H_
