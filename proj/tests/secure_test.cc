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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fedkge/errors.h"
#include "fedkge/rng.h"

namespace fedkge {
namespace {

constexpr std::uint64_t kP = FixedPointCodec::kMersenne61;

std::vector<int> Ids(int n) {
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

std::vector<double> RandomVector(Rng& rng, std::size_t n, double bound) {
  std::vector<double> v(n);
  for (double& x : v) x = (2.0 * rng.UniformDouble() - 1.0) * bound;
  return v;
}

TEST(Psu, SmallExamples) {
  std::vector<std::vector<RelationId>> sets{{1, 2}, {2, 3}};
  const auto r = PsuUnion(sets, 1);
  EXPECT_EQ(r.union_ids, (std::vector<RelationId>{1, 2, 3}));
  EXPECT_EQ(r.contributed_counts, (std::vector<std::size_t>{2, 2}));

  std::vector<std::vector<RelationId>> single{{5}};
  EXPECT_EQ(PsuUnion(single, 1).union_ids, (std::vector<RelationId>{5}));
}

TEST(Psu, MatchesFoldOfSetUnion) {
  Rng rng(11);
  std::vector<std::vector<RelationId>> sets(20);
  std::set<RelationId> fold;
  for (auto& s : sets) {
    const int n = static_cast<int>(rng.UniformInt(8));
    for (int i = 0; i < n; ++i) {
      s.push_back(static_cast<RelationId>(rng.UniformInt(40)));
    }
    fold.insert(s.begin(), s.end());
  }
  const auto r = PsuUnion(sets, 3);
  EXPECT_EQ(r.union_ids, std::vector<RelationId>(fold.begin(), fold.end()));
}

TEST(PsuInvariant, IndependentOfClientOrder) {
  Rng rng(12);
  std::vector<std::vector<RelationId>> sets(6);
  for (auto& s : sets) {
    for (int i = 0; i < 5; ++i) {
      s.push_back(static_cast<RelationId>(rng.UniformInt(30)));
    }
  }
  const auto base = PsuUnion(sets, 4).union_ids;
  for (int trial = 0; trial < 10; ++trial) {
    rng.Shuffle(std::span<std::vector<RelationId>>(sets));
    EXPECT_EQ(PsuUnion(sets, 4 + trial).union_ids, base);
  }
}

TEST(FixedPointCodec, RoundTrips) {
  const FixedPointCodec codec;
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const double v = (2.0 * rng.UniformDouble() - 1.0) * 64.0;
    EXPECT_LE(std::abs(codec.Decode(codec.Encode(v)) - v),
              std::ldexp(1.0, -24));
    // Field elements inside the codec range: +-64 * 2^24 around zero.
    const std::uint64_t span = std::uint64_t{64} << 25;
    const std::uint64_t offset = rng.NextU64() % (span + 1);
    const std::uint64_t e = (offset + kP - span / 2) % kP;
    EXPECT_EQ(codec.Encode(codec.Decode(e)), e) << e;
  }
}

TEST(FixedPointCodec, RejectsOutOfRange) {
  const FixedPointCodec codec;
  EXPECT_THROW(codec.Encode(64.5), EncodingError);
  EXPECT_THROW(codec.Encode(-100.0), EncodingError);
  EXPECT_THROW(codec.Encode(std::nan("")), EncodingError);
  EXPECT_THROW(FixedPointCodec(40, 1e6, 64), ConfigError);
}

TEST(SecAgg, TwoClientsCancel) {
  const auto ids = Ids(2);
  const auto seeds = AgreePairwiseSeeds(ids, 99);
  const FixedPointCodec codec;
  const std::vector<double> a{1.0}, b{2.0};
  std::vector<MaskedShare> shares{SecAggShare(a, 0, seeds, codec),
                                  SecAggShare(b, 1, seeds, codec)};
  EXPECT_NE(shares[0].values[0], codec.Encode(1.0));
  EXPECT_NE(shares[1].values[0], codec.Encode(2.0));
  EXPECT_NEAR(SecAggSum(shares, codec)[0], 3.0, std::ldexp(1.0, -24));
}

TEST(SecAgg, SingleClientSendsPlainEncoding) {
  const auto ids = Ids(1);
  const auto seeds = AgreePairwiseSeeds(ids, 1);
  const FixedPointCodec codec;
  const std::vector<double> s{0.5, -3.25, 7.0};
  const auto share = SecAggShare(s, 0, seeds, codec);
  EXPECT_EQ(share.values, codec.EncodeVector(s));
}

TEST(SecAgg, ThreeClientsSumExactlyInTheField) {
  const auto ids = Ids(3);
  const FixedPointCodec codec;
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const auto seeds = AgreePairwiseSeeds(ids, 1000 + trial);
    std::vector<std::uint64_t> plain(16, 0);
    std::vector<std::uint64_t> masked(16, 0);
    for (int u = 0; u < 3; ++u) {
      const auto s = RandomVector(rng, 16, 10.0);
      const auto enc = codec.EncodeVector(s);
      const auto share = SecAggShare(s, u, seeds, codec);
      for (int i = 0; i < 16; ++i) {
        plain[i] = FixedPointCodec::Add(plain[i], enc[i]);
        masked[i] = FixedPointCodec::Add(masked[i], share.values[i]);
      }
    }
    ASSERT_EQ(masked, plain);
  }
}

TEST(SecAgg, ZeroAndOpposingSecrets) {
  const auto ids = Ids(2);
  const auto seeds = AgreePairwiseSeeds(ids, 5);
  const FixedPointCodec codec;
  const std::vector<double> zero(8, 0.0);
  std::vector<MaskedShare> shares{SecAggShare(zero, 0, seeds, codec),
                                  SecAggShare(zero, 1, seeds, codec)};
  for (double v : SecAggSum(shares, codec)) EXPECT_EQ(v, 0.0);

  const std::vector<double> x{1.3, -2.7, 0.123456789};
  std::vector<double> neg(x.size());
  std::ranges::transform(x, neg.begin(), [](double v) { return -v; });
  shares = {SecAggShare(x, 0, seeds, codec), SecAggShare(neg, 1, seeds, codec)};
  for (double v : SecAggSum(shares, codec)) {
    EXPECT_LE(std::abs(v), std::ldexp(1.0, -23));
  }
}

TEST(SecAgg, FiveClientsMatchPlainSum) {
  const auto ids = Ids(5);
  const auto seeds = AgreePairwiseSeeds(ids, 6);
  const FixedPointCodec codec;
  Rng rng(15);
  std::vector<MaskedShare> shares;
  std::vector<double> plain(128, 0.0);
  for (int u = 0; u < 5; ++u) {
    const auto s = RandomVector(rng, 128, 10.0);
    for (int i = 0; i < 128; ++i) plain[i] += s[i];
    shares.push_back(SecAggShare(s, u, seeds, codec));
  }
  const auto sum = SecAggSum(shares, codec);
  for (int i = 0; i < 128; ++i) {
    EXPECT_LT(std::abs(sum[i] - plain[i]), 5 * std::ldexp(1.0, -24));
  }
}

TEST(SecAgg, MissingParticipantIsUnresolved) {
  const auto ids = Ids(3);
  const auto seeds = AgreePairwiseSeeds(ids, 7);
  const FixedPointCodec codec;
  const std::vector<double> s{1.0};
  std::vector<MaskedShare> shares{SecAggShare(s, 0, seeds, codec),
                                  SecAggShare(s, 1, seeds, codec)};
  EXPECT_THROW(SecAggSum(shares, codec), UnresolvedMaskError);
}

TEST(SecAgg, OutOfRangeSecretIsAnEncodingError) {
  const auto ids = Ids(2);
  const auto seeds = AgreePairwiseSeeds(ids, 8);
  const FixedPointCodec codec;
  const std::vector<double> s{1e9};
  EXPECT_THROW(SecAggShare(s, 0, seeds, codec), EncodingError);
}

TEST(SecAggInvariant, PairwiseMasksCancel) {
  Rng rng(16);
  for (int n : {2, 3, 4, 7, 10}) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> ids;
      for (int i = 0; i < n; ++i) {
        ids.push_back(static_cast<int>(rng.UniformInt(1000)) * 16 + i);
      }
      const auto seeds = AgreePairwiseSeeds(ids, rng.NextU64());
      std::vector<std::uint64_t> total(32, 0);
      for (int u : ids) {
        const auto m = PairwiseMaskSum(u, seeds, 32);
        for (int i = 0; i < 32; ++i) {
          ASSERT_LT(m[i], kP);
          total[i] = FixedPointCodec::Add(total[i], m[i]);
        }
      }
      EXPECT_EQ(total, std::vector<std::uint64_t>(32, 0)) << n;
    }
  }
}

TEST(SecAggInvariant, PairSeedsAreSymmetricAndDeterministic) {
  const std::vector<int> a{3, 1, 2}, b{1, 2, 3};
  EXPECT_EQ(AgreePairwiseSeeds(a, 4), AgreePairwiseSeeds(b, 4));
  EXPECT_NE(AgreePairwiseSeeds(a, 4), AgreePairwiseSeeds(a, 5));
  EXPECT_EQ(ExpandMask(AgreePairwiseSeeds(a, 4).begin()->second, 10),
            ExpandMask(AgreePairwiseSeeds(b, 4).begin()->second, 10));
}

TEST(SecAggInvariant, SingleShareLooksUniform) {
  // Chi-square over 16 equal-width bins of the field, 10^4 session seeds.
  constexpr int kBins = 16;
  constexpr int kTrials = 10000;
  const auto ids = Ids(3);
  const FixedPointCodec codec;
  const std::vector<double> secret{1.0, 0.0, -1.0};
  std::vector<std::vector<int>> counts(secret.size(),
                                       std::vector<int>(kBins, 0));
  for (int t = 0; t < kTrials; ++t) {
    const auto seeds = AgreePairwiseSeeds(ids, 50000 + t);
    const auto share = SecAggShare(secret, 0, seeds, codec);
    for (std::size_t i = 0; i < secret.size(); ++i) {
      const auto bin = static_cast<int>(
          static_cast<unsigned __int128>(share.values[i]) * kBins / kP);
      ++counts[i][bin];
    }
  }
  const double expected = static_cast<double>(kTrials) / kBins;
  for (const auto& c : counts) {
    double chi2 = 0.0;
    for (int n : c) chi2 += (n - expected) * (n - expected) / expected;
    // 99.9th percentile of chi-square with 15 degrees of freedom.
    EXPECT_LT(chi2, 37.70);
  }
}

}  // namespace
}  // namespace fedkge
