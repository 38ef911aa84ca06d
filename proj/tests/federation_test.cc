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

#include "fedkge/federation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fedkge/errors.h"
#include "fedkge/rng.h"
#include "test_util.h"

namespace fedkge {
namespace {

ElementUpdate MakeUpdate(int client, const Matrix& values,
                         std::vector<std::uint8_t> bits) {
  ElementUpdate u;
  u.client_id = client;
  u.values = values;
  u.mask.bits = std::move(bits);
  for (std::size_t i = 0; i < u.mask.bits.size(); ++i) {
    if (u.mask.bits[i]) continue;
    for (double& x : u.values.row(i)) x = 0.0;
  }
  return u;
}

Matrix Rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::ranges::copy(rows[i], m.row(i).begin());
  }
  return m;
}

// Element-wise loop written directly from the averaging rule.
Matrix LoopAggregate(const std::vector<ElementUpdate>& updates,
                     const Matrix& previous) {
  Matrix out = previous;
  for (std::size_t i = 0; i < previous.rows(); ++i) {
    int count = 0;
    for (const auto& u : updates) count += u.mask.bits[i];
    if (count == 0) continue;
    for (std::size_t k = 0; k < previous.cols(); ++k) {
      double s = 0.0;
      for (const auto& u : updates) s += u.values(i, k);
      out(i, k) = s / count;
    }
  }
  return out;
}

std::vector<ElementUpdate> RandomUpdates(Rng& rng, int clients, int rows,
                                         int cols) {
  std::vector<ElementUpdate> updates;
  for (int c = 0; c < clients; ++c) {
    Matrix v(rows, cols);
    for (double& x : v.values()) x = 4.0 * rng.UniformDouble() - 2.0;
    std::vector<std::uint8_t> bits(rows);
    for (auto& b : bits) b = rng.UniformInt(2) ? 1 : 0;
    updates.push_back(MakeUpdate(c, v, bits));
  }
  return updates;
}

ClientDataset Client(int id, std::vector<Triple> train,
                     std::vector<Triple> valid = {},
                     std::vector<Triple> test = {}) {
  ClientDataset c;
  c.client_id = id;
  c.train = std::move(train);
  c.valid = std::move(valid);
  c.test = std::move(test);
  c.RefreshLocalSets();
  return c;
}

std::vector<ClientDataset> SmallSplit(int num_clients, std::uint64_t seed) {
  const auto kg = testing::RandomGraph(240, 30, 4, seed);
  return FederatedSplit(kg, num_clients, {}, seed);
}

TrainConfig SmallConfig() {
  TrainConfig cfg;
  cfg.dim = 8;
  cfg.num_negatives = 4;
  cfg.batch_size = 16;
  cfg.local_epochs = 1;
  cfg.margin = 2.0;
  cfg.seed = 3;
  return cfg;
}

TEST(Aggregate, HandExamples) {
  const Matrix prev(1, 2, 9.0);
  std::vector<ElementUpdate> ups{MakeUpdate(0, Rows({{1, 1}}), {1}),
                                 MakeUpdate(1, Rows({{3, 3}}), {1})};
  const Matrix out = Aggregate(ups, prev);
  EXPECT_EQ(out(0, 0), 2.0);
  EXPECT_EQ(out(0, 1), 2.0);

  ups = {MakeUpdate(0, Rows({{1, 2}}), {0}),
         MakeUpdate(1, Rows({{5, 6}}), {1})};
  const Matrix one = Aggregate(ups, prev);
  EXPECT_EQ(one(0, 0), 5.0);
  EXPECT_EQ(one(0, 1), 6.0);
}

TEST(Aggregate, ThreeClientsAgainstLoop) {
  const Matrix a = Rows({{1.5, -2.0}}), b = Rows({{0.25, 4.0}}),
               c = Rows({{100.0, 100.0}});
  std::vector<ElementUpdate> ups{MakeUpdate(0, a, {1}), MakeUpdate(1, b, {1}),
                                 MakeUpdate(2, c, {0})};
  const Matrix prev(1, 2, 0.0);
  const Matrix out = Aggregate(ups, prev);
  EXPECT_EQ(out(0, 0), (1.5 + 0.25) / 2);
  EXPECT_EQ(out(0, 1), (-2.0 + 4.0) / 2);
  EXPECT_EQ(out, LoopAggregate(ups, prev));
}

TEST(Aggregate, UnownedRowKeepsPreviousValue) {
  const Matrix prev = Rows({{7, 8}, {1, 1}});
  std::vector<ElementUpdate> ups{MakeUpdate(0, Rows({{1, 1}, {2, 2}}), {0, 1})};
  const Matrix out = Aggregate(ups, prev);
  EXPECT_EQ(out(0, 0), 7.0);
  EXPECT_EQ(out(0, 1), 8.0);
  EXPECT_EQ(out(1, 0), 2.0);
}

TEST(Aggregate, ShapeMismatchIsAContractViolation) {
  const Matrix prev(2, 2);
  std::vector<ElementUpdate> ups{MakeUpdate(0, Matrix(3, 2), {1, 1, 1})};
  EXPECT_THROW(Aggregate(ups, prev), ContractViolation);
  ups = {MakeUpdate(0, Matrix(2, 2), {1, 1})};
  ups[0].mask.bits.push_back(1);
  EXPECT_THROW(Aggregate(ups, prev), ContractViolation);
}

TEST(AggregateEntities, IdentityUnionAndOverlap) {
  const Matrix prev(3, 2, -1.0);
  const Matrix a = Rows({{1, 2}, {3, 4}, {5, 6}});
  std::vector<ElementUpdate> ups{MakeUpdate(0, a, {1, 1, 1})};
  EXPECT_EQ(AggregateEntities(ups, prev), a);

  const Matrix b = Rows({{9, 9}, {8, 8}, {7, 7}});
  ups = {MakeUpdate(0, a, {1, 0, 0}), MakeUpdate(1, b, {0, 1, 1})};
  EXPECT_EQ(AggregateEntities(ups, prev), Rows({{1, 2}, {8, 8}, {7, 7}}));

  const Matrix c = Rows({{0, 0}, {0, 0}, {1, 1}});
  ups = {MakeUpdate(0, a, {0, 0, 1}), MakeUpdate(1, b, {0, 0, 1}),
         MakeUpdate(2, c, {1, 0, 0})};
  const Matrix out = AggregateEntities(ups, prev);
  EXPECT_EQ(out, LoopAggregate(ups, prev));
  EXPECT_EQ(out(2, 0), 6.0);
  EXPECT_EQ(out(1, 0), -1.0);
}

TEST(AggregateInvariant, PermutationInvariant) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    auto ups = RandomUpdates(rng, 5, 6, 3);
    const Matrix prev(6, 3, 0.5);
    const Matrix base = Aggregate(ups, prev);
    rng.Shuffle(std::span<ElementUpdate>(ups));
    EXPECT_EQ(Aggregate(ups, prev), base);
  }
}

TEST(AggregateInvariant, FullOwnershipIsThePlainMean) {
  Rng rng(22);
  std::vector<ElementUpdate> ups;
  for (int c = 0; c < 4; ++c) {
    Matrix v(5, 4);
    for (double& x : v.values()) x = rng.UniformDouble();
    ups.push_back(MakeUpdate(c, v, std::vector<std::uint8_t>(5, 1)));
  }
  const Matrix out = Aggregate(ups, Matrix(5, 4));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      double mean = 0.0;
      for (const auto& u : ups) mean += u.values(i, k);
      mean /= 4.0;
      EXPECT_NEAR(out(i, k), mean, 1e-12);
    }
  }
}

TEST(AggregateInvariant, MaskedSentinelsNeverLeak) {
  Rng rng(23);
  auto ups = RandomUpdates(rng, 4, 8, 2);
  const Matrix prev(8, 2, 0.0);
  const Matrix clean = Aggregate(ups, prev);
  // Sentinels written into masked rows before masking are zeroed by it.
  std::vector<ElementUpdate> poisoned;
  for (const auto& u : ups) {
    Matrix v = u.values;
    for (std::size_t i = 0; i < v.rows(); ++i) {
      if (!u.mask.bits[i]) std::ranges::fill(v.row(i), 1e300);
    }
    poisoned.push_back(MakeUpdate(u.client_id, v, u.mask.bits));
  }
  EXPECT_EQ(Aggregate(poisoned, prev), clean);
}

TEST(AggregateInvariant, SecureMatchesPlaintext) {
  Rng rng(24);
  const FixedPointCodec codec;
  for (int trial = 0; trial < 5; ++trial) {
    const auto ups = RandomUpdates(rng, 2 + trial, 10, 4);
    const Matrix prev(10, 4, 0.125);
    const Matrix plain = Aggregate(ups, prev);
    const Matrix secure = AggregateSecure(ups, prev, codec, 77 + trial);
    for (std::size_t i = 0; i < plain.size(); ++i) {
      EXPECT_NEAR(secure.values()[i], plain.values()[i], 1e-4);
    }
    // Rows nobody owns survive bit for bit, so the counts decoded exactly.
    for (std::size_t i = 0; i < 10; ++i) {
      bool owned = false;
      for (const auto& u : ups) owned = owned || u.mask.bits[i];
      if (!owned) {
        EXPECT_EQ(secure(i, 0), 0.125);
      }
    }
  }
}

TEST(ClientUpdate, NonLocalRowsAreZero) {
  const auto c = Client(0, {{0, 2, 1}, {1, 2, 2}});
  auto cfg = SmallConfig();
  ClientState state(c, InitEmbeddings(ModelKind::kTransE, 3, 4, cfg.dim, 1));
  ElementTable global{{0, 1, 2, 3}, Matrix(4, 8, 0.3)};
  Rng rng(1);
  const auto r =
      ClientUpdate(state, global, SharedElement::kRelations, cfg, rng);
  EXPECT_EQ(r.update.mask.bits, (std::vector<std::uint8_t>{0, 0, 1, 0}));
  for (std::size_t i : {0u, 1u, 3u}) {
    for (double x : r.update.values.row(i)) EXPECT_EQ(x, 0.0);
  }
}

TEST(ClientUpdate, ZeroEpochsReturnsMaskedBroadcast) {
  const auto c = Client(0, {{0, 2, 1}, {1, 2, 2}});
  auto cfg = SmallConfig();
  cfg.local_epochs = 0;
  ClientState state(c, InitEmbeddings(ModelKind::kTransE, 3, 4, cfg.dim, 1));
  Matrix g(4, 8);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = 0.01 * i;
  ElementTable global{{0, 1, 2, 3}, g};
  Rng rng(1);
  const auto r =
      ClientUpdate(state, global, SharedElement::kRelations, cfg, rng);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(r.update.values(2, k), g(2, k));
  EXPECT_EQ(r.update.values(0, 0), 0.0);
}

TEST(ClientUpdate, OneEpochMovesTheOwnedRow) {
  const auto c = Client(0, {{0, 2, 1}, {1, 2, 2}, {2, 2, 0}});
  auto cfg = SmallConfig();
  ClientState state(c, InitEmbeddings(ModelKind::kTransE, 3, 4, cfg.dim, 1));
  ElementTable global{{0, 1, 2, 3}, Matrix(4, 8, 0.3)};
  Rng rng(1);
  const auto r =
      ClientUpdate(state, global, SharedElement::kRelations, cfg, rng);
  // One Adam step from zero moments moves every coordinate by about eta.
  for (std::size_t k = 0; k < 8; ++k) {
    const double delta = std::abs(r.update.values(2, k) - 0.3);
    EXPECT_GT(delta, 0.0);
    EXPECT_NEAR(delta, cfg.learning_rate, 1e-6);
  }
}

TEST(RunTraining, SingleClientFedRMatchesLocal) {
  const auto clients = SmallSplit(1, 5);
  const auto cfg = SmallConfig();
  FederationConfig fed;
  fed.rounds = 3;
  fed.seed = 9;
  fed.restore_best = false;
  fed.mode = Mode::kLocal;
  const auto local = RunTraining(clients, ModelKind::kTransE, 30, 4, cfg, fed);
  fed.mode = Mode::kFedR;
  const auto fedr = RunTraining(clients, ModelKind::kTransE, 30, 4, cfg, fed);
  EXPECT_EQ(local.tables[0], fedr.tables[0]);
  ASSERT_EQ(local.logs.size(), fedr.logs.size());
  for (std::size_t i = 0; i < local.logs.size(); ++i) {
    EXPECT_EQ(local.logs[i].train_loss, fedr.logs[i].train_loss);
  }
}

TEST(Aggregate, TwoIdenticalClientsGiveTheirUpload) {
  const auto kg = testing::RandomGraph(40, 10, 3, 6);
  const auto a = Client(0, kg.triples);
  auto b = Client(1, kg.triples);
  const auto cfg = SmallConfig();
  const auto init = InitEmbeddings(ModelKind::kTransE, 10, 3, cfg.dim, 2);
  ClientState sa(a, init), sb(b, init);
  ElementTable global{{0, 1, 2}, init.relations};
  Rng ra(5), rb(5);
  auto ua = ClientUpdate(sa, global, SharedElement::kRelations, cfg, ra);
  auto ub = ClientUpdate(sb, global, SharedElement::kRelations, cfg, rb);
  ASSERT_EQ(ua.update.values, ub.update.values);
  const Matrix upload = ua.update.values;
  std::vector<ElementUpdate> ups{std::move(ua.update), std::move(ub.update)};
  EXPECT_EQ(Aggregate(ups, global.embeddings), upload);
}

TEST(RunTraining, LocalModeUploadsNothing) {
  const auto clients = SmallSplit(3, 7);
  FederationConfig fed;
  fed.rounds = 2;
  fed.mode = Mode::kLocal;
  const auto r =
      RunTraining(clients, ModelKind::kDistMult, 30, 4, SmallConfig(), fed);
  for (const auto& log : r.logs) {
    EXPECT_TRUE(log.uploads.empty());
    EXPECT_EQ(log.upload_bytes(), 0u);
  }
}

TEST(RunTraining, SecAggTracksPlaintextRun) {
  const auto clients = SmallSplit(3, 8);
  FederationConfig fed;
  fed.rounds = 2;
  fed.mode = Mode::kFedR;
  fed.restore_best = false;
  const auto plain =
      RunTraining(clients, ModelKind::kTransE, 30, 4, SmallConfig(), fed);
  fed.secagg = true;
  const auto secure =
      RunTraining(clients, ModelKind::kTransE, 30, 4, SmallConfig(), fed);
  for (std::size_t c = 0; c < clients.size(); ++c) {
    const auto& a = plain.tables[c].relations.values();
    const auto& b = secure.tables[c].relations.values();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-4);
  }
}

TEST(RunTraining, FedESharesEntityRowsAfterBroadcast) {
  const auto clients = SmallSplit(3, 9);
  FederationConfig fed;
  fed.rounds = 1;
  fed.mode = Mode::kFedE;
  fed.restore_best = false;
  const auto r =
      RunTraining(clients, ModelKind::kTransE, 30, 4, SmallConfig(), fed);
  const std::set<EntityId> a(clients[0].local_entities.begin(),
                             clients[0].local_entities.end());
  for (EntityId e : clients[1].local_entities) {
    if (!a.contains(e)) continue;
    for (std::size_t k = 0; k < r.tables[0].entities.cols(); ++k) {
      EXPECT_EQ(r.tables[0].entities(e, k), r.tables[1].entities(e, k));
    }
  }
}

TEST(RunTraining, RejectsSecAggWithLocal) {
  FederationConfig fed;
  fed.mode = Mode::kLocal;
  fed.secagg = true;
  EXPECT_THROW(fed.Validate(), ConfigError);
}

TEST(SampleClients, DrawsCeilFractionWithoutReplacement) {
  for (int round = 1; round < 20; ++round) {
    const auto ids = SampleClients(10, 0.35, 4, round);
    EXPECT_EQ(ids.size(), 4u);
    EXPECT_EQ(std::set<int>(ids.begin(), ids.end()).size(), 4u);
    EXPECT_EQ(ids, SampleClients(10, 0.35, 4, round));
  }
  EXPECT_EQ(SampleClients(3, 1.0, 4, 1), (std::vector<int>{0, 1, 2}));
}

TEST(FederationInvariant, ZeroRoundsReturnsInitialization) {
  const auto clients = SmallSplit(3, 10);
  const auto cfg = SmallConfig();
  for (Mode mode : {Mode::kLocal, Mode::kFedE, Mode::kFedR}) {
    FederationConfig fed;
    fed.rounds = 0;
    fed.mode = mode;
    fed.seed = 12;
    const auto r = RunTraining(clients, ModelKind::kRotatE, 30, 4, cfg, fed);
    const auto init =
        InitialClientTables(clients, ModelKind::kRotatE, 30, 4, cfg, 12);
    EXPECT_EQ(r.tables, init);
    EXPECT_TRUE(r.logs.empty());
  }
}

TEST(FederationInvariant, UploadRatioFollowsLocalCounts) {
  const auto kg = testing::RandomGraph(3000, 400, 6, 11);
  const auto clients = FederatedSplit(kg, 5, {}, 11);
  auto cfg = SmallConfig();
  cfg.num_negatives = 1;
  cfg.batch_size = 1024;
  FederationConfig fed;
  fed.rounds = 1;
  fed.mode = Mode::kFedE;
  const auto e = RunTraining(clients, ModelKind::kTransE, 400, 6, cfg, fed);
  fed.mode = Mode::kFedR;
  const auto r = RunTraining(clients, ModelKind::kTransE, 400, 6, cfg, fed);
  double rel = 0.0, ent = 0.0;
  for (const auto& c : clients) {
    rel += static_cast<double>(c.local_relations.size());
    ent += static_cast<double>(c.local_entities.size());
  }
  const double expected = rel / ent;
  const double observed = static_cast<double>(r.logs[0].upload_bytes()) /
                          static_cast<double>(e.logs[0].upload_bytes());
  EXPECT_NEAR(observed / expected, 1.0, 0.01);
}

TEST(FederationInvariant, AggregationMatchesLoopOnRandomConfigurations) {
  Rng rng(26);
  for (int trial = 0; trial < 200; ++trial) {
    const int clients = 1 + static_cast<int>(rng.UniformInt(6));
    const int rows = 1 + static_cast<int>(rng.UniformInt(8));
    const auto ups = RandomUpdates(rng, clients, rows, 3);
    const Matrix prev(rows, 3, 0.75);
    const Matrix got = Aggregate(ups, prev);
    const Matrix want = LoopAggregate(ups, prev);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_NEAR(got.values()[i], want.values()[i], 1e-12);
    }
  }
}

}  // namespace
}  // namespace fedkge
