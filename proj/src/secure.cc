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

#include "fedkge/secure.h"

#include <sodium.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <string>

#include "fedkge/errors.h"
#include "fedkge/rng.h"

namespace fedkge {

PsuResult PsuUnion(std::span<const std::vector<RelationId>> local_sets,
                   std::uint64_t seed) {
  if (local_sets.empty()) throw ContractViolation("PSU needs a client");
  std::vector<std::size_t> order(local_sets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(DeriveSeed(seed, "psu"));
  rng.Shuffle(std::span<std::size_t>(order));

  std::set<RelationId> all;
  PsuResult result;
  result.contributed_counts.resize(local_sets.size());
  for (std::size_t idx : order) {
    const std::set<RelationId> mine(local_sets[idx].begin(),
                                    local_sets[idx].end());
    result.contributed_counts[idx] = mine.size();
    all.insert(mine.begin(), mine.end());
  }
  result.union_ids.assign(all.begin(), all.end());
  return result;
}

FixedPointCodec::FixedPointCodec(int scale_bits, double max_abs,
                                 int max_participants)
    : scale_bits_(scale_bits),
      max_abs_(max_abs),
      max_participants_(max_participants),
      scale_(std::ldexp(1.0, scale_bits)) {
  if (scale_bits < 0 || scale_bits > 52) {
    throw ConfigError("scale_bits must be in [0, 52]");
  }
  if (!(max_abs > 0) || max_participants < 1) {
    throw ConfigError("max_abs and max_participants must be positive");
  }
  const long double headroom = 2.0L * max_participants * scale_ * max_abs;
  if (headroom >= static_cast<long double>(kMersenne61)) {
    throw ConfigError("fixed-point range does not fit the field modulus");
  }
}

std::uint64_t FixedPointCodec::Encode(double value) const {
  if (!std::isfinite(value) || std::abs(value) > max_abs_) {
    throw EncodingError("value " + std::to_string(value) +
                        " outside the codec range");
  }
  const auto fixed = static_cast<std::int64_t>(std::llround(value * scale_));
  if (fixed >= 0) return static_cast<std::uint64_t>(fixed);
  return kMersenne61 - static_cast<std::uint64_t>(-fixed);
}

double FixedPointCodec::Decode(std::uint64_t element) const {
  element %= kMersenne61;
  if (element > kMersenne61 / 2) {
    return -static_cast<double>(kMersenne61 - element) / scale_;
  }
  return static_cast<double>(element) / scale_;
}

std::vector<std::uint64_t> FixedPointCodec::EncodeVector(
    std::span<const double> v) const {
  std::vector<std::uint64_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Encode(v[i]);
  return out;
}

std::vector<double> FixedPointCodec::DecodeVector(
    std::span<const std::uint64_t> v) const {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = Decode(v[i]);
  return out;
}

std::uint64_t FixedPointCodec::Add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t s = a + b;  // < 2^62, no overflow
  return s >= kMersenne61 ? s - kMersenne61 : s;
}

std::uint64_t FixedPointCodec::Sub(std::uint64_t a, std::uint64_t b) {
  return a >= b ? a - b : a + kMersenne61 - b;
}

PairwiseSeeds AgreePairwiseSeeds(std::span<const int> participants,
                                 std::uint64_t session_seed) {
  PairwiseSeeds seeds;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    for (std::size_t j = i + 1; j < participants.size(); ++j) {
      const int u = std::min(participants[i], participants[j]);
      const int v = std::max(participants[i], participants[j]);
      if (u == v) throw ContractViolation("duplicate participant id");
      PairSeed seed{};
      for (int word = 0; word < 4; ++word) {
        const std::uint64_t x = DeriveSeed(
            session_seed, "secagg-pair",
            {static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v),
             static_cast<std::uint64_t>(word)});
        std::memcpy(seed.data() + 8 * word, &x, 8);
      }
      seeds.emplace(std::make_pair(u, v), seed);
    }
  }
  return seeds;
}

std::vector<std::uint64_t> ExpandMask(const PairSeed& seed,
                                      std::size_t length) {
  static_assert(randombytes_SEEDBYTES == 32);
  if (sodium_init() < 0) throw Error("libsodium initialization failed");
  std::vector<std::uint64_t> out;
  out.reserve(length);
  // A 61-bit draw equals p with probability 2^-61; oversample a little and
  // regenerate a longer stream in the (practically unreachable) shortfall.
  std::size_t words = length + length / 64 + 4;
  while (true) {
    std::vector<std::uint64_t> raw(words);
    randombytes_buf_deterministic(
        raw.data(), raw.size() * sizeof(std::uint64_t), seed.data());
    out.clear();
    for (std::uint64_t x : raw) {
      x &= FixedPointCodec::kMersenne61;
      if (x == FixedPointCodec::kMersenne61) continue;
      out.push_back(x);
      if (out.size() == length) return out;
    }
    words *= 2;
  }
}

std::vector<std::uint64_t> PairwiseMaskSum(int client_id,
                                           const PairwiseSeeds& seeds,
                                           std::size_t length) {
  std::vector<std::uint64_t> total(length, 0);
  for (const auto& [pair, seed] : seeds) {
    if (pair.first != client_id && pair.second != client_id) continue;
    const auto mask = ExpandMask(seed, length);
    const bool add = pair.first == client_id;  // peer id is larger
    for (std::size_t i = 0; i < length; ++i) {
      total[i] = add ? FixedPointCodec::Add(total[i], mask[i])
                     : FixedPointCodec::Sub(total[i], mask[i]);
    }
  }
  return total;
}

MaskedShare SecAggShare(std::span<const double> secret, int client_id,
                        const PairwiseSeeds& seeds,
                        const FixedPointCodec& codec) {
  MaskedShare share;
  share.client_id = client_id;
  std::set<int> peers{client_id};
  for (const auto& [pair, seed] : seeds) {
    if (pair.first == client_id) peers.insert(pair.second);
    if (pair.second == client_id) peers.insert(pair.first);
  }
  share.participants.assign(peers.begin(), peers.end());
  share.values = codec.EncodeVector(secret);
  const auto masks = PairwiseMaskSum(client_id, seeds, secret.size());
  for (std::size_t i = 0; i < share.values.size(); ++i) {
    share.values[i] = FixedPointCodec::Add(share.values[i], masks[i]);
  }
  return share;
}

std::vector<double> SecAggSum(std::span<const MaskedShare> shares,
                              const FixedPointCodec& codec) {
  if (shares.empty()) throw UnresolvedMaskError("no shares to aggregate");
  const auto& expected = shares.front().participants;
  std::set<int> present;
  for (const auto& s : shares) {
    if (s.participants != expected) {
      throw UnresolvedMaskError("shares disagree on the participant set");
    }
    if (!present.insert(s.client_id).second) {
      throw UnresolvedMaskError("duplicate share from client " +
                                std::to_string(s.client_id));
    }
    if (s.values.size() != shares.front().values.size()) {
      throw ContractViolation("share lengths differ");
    }
  }
  if (!std::ranges::equal(present, expected)) {
    throw UnresolvedMaskError(
        "missing shares: " + std::to_string(expected.size() - present.size()) +
        " participant(s) absent, masks do not cancel");
  }
  if (static_cast<int>(shares.size()) > codec.max_participants()) {
    throw ConfigError("more participants than the codec was sized for");
  }
  std::vector<std::uint64_t> total(shares.front().values.size(), 0);
  for (const auto& s : shares) {
    for (std::size_t i = 0; i < total.size(); ++i) {
      total[i] = FixedPointCodec::Add(total[i], s.values[i]);
    }
  }
  return codec.DecodeVector(total);
}

}  // namespace fedkge
