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

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "fedkge/errors.h"

namespace fedkge {
namespace {

Matrix& SharedRows(EmbeddingTable& table, SharedElement element) {
  return element == SharedElement::kRelations ? table.relations
                                              : table.entities;
}

const std::vector<std::int32_t>& LocalIds(const ClientDataset& data,
                                          SharedElement element) {
  return element == SharedElement::kRelations ? data.local_relations
                                              : data.local_entities;
}

void CheckUpdates(std::span<const ElementUpdate> updates,
                  const Matrix& previous) {
  std::set<int> ids;
  for (const auto& u : updates) {
    if (!u.values.SameShape(previous) ||
        u.mask.bits.size() != previous.rows()) {
      throw ContractViolation("update shape does not match the global table");
    }
    if (!ids.insert(u.client_id).second) {
      throw ContractViolation("duplicate client id in updates");
    }
  }
}

std::vector<const ElementUpdate*> ByClientId(
    std::span<const ElementUpdate> updates) {
  std::vector<const ElementUpdate*> order;
  for (const auto& u : updates) order.push_back(&u);
  std::ranges::sort(order, {}, &ElementUpdate::client_id);
  return order;
}

}  // namespace

std::string_view ModeName(Mode mode) {
  switch (mode) {
    case Mode::kLocal:
      return "Local";
    case Mode::kFedE:
      return "FedE";
    case Mode::kFedR:
      return "FedR";
  }
  return "unknown";
}

Mode ParseMode(std::string_view name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(c));
  if (lower == "local") return Mode::kLocal;
  if (lower == "fede") return Mode::kFedE;
  if (lower == "fedr") return Mode::kFedR;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::size_t MaskVector::count() const {
  return static_cast<std::size_t>(std::ranges::count(bits, 1));
}

MaskVector BuildMask(std::span<const std::int32_t> global_ids,
                     std::span<const std::int32_t> local_ids) {
  const std::set<std::int32_t> local(local_ids.begin(), local_ids.end());
  MaskVector mask;
  mask.bits.reserve(global_ids.size());
  for (std::int32_t id : global_ids) mask.bits.push_back(local.contains(id));
  return mask;
}

Matrix Aggregate(std::span<const ElementUpdate> updates,
                 const Matrix& previous) {
  CheckUpdates(updates, previous);
  const auto order = ByClientId(updates);
  Matrix result = previous;
  std::vector<double> sum(previous.cols());
  for (std::size_t i = 0; i < previous.rows(); ++i) {
    std::ranges::fill(sum, 0.0);
    std::size_t count = 0;
    for (const ElementUpdate* u : order) {
      count += u->mask.bits[i];
      const auto row = u->values.row(i);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += row[k];
    }
    if (count == 0) continue;
    auto out = result.row(i);
    for (std::size_t k = 0; k < sum.size(); ++k) {
      out[k] = sum[k] / static_cast<double>(count);
    }
  }
  return result;
}

Matrix AggregateEntities(std::span<const ElementUpdate> updates,
                         const Matrix& previous) {
  return Aggregate(updates, previous);
}

Matrix AggregateSecure(std::span<const ElementUpdate> updates,
                       const Matrix& previous, const FixedPointCodec& codec,
                       std::uint64_t session_seed) {
  CheckUpdates(updates, previous);
  const auto order = ByClientId(updates);
  std::vector<int> participants;
  for (const ElementUpdate* u : order) participants.push_back(u->client_id);
  const PairwiseSeeds seeds = AgreePairwiseSeeds(participants, session_seed);

  const std::size_t n_values = previous.size();
  std::vector<MaskedShare> shares;
  std::vector<double> secret(n_values + previous.rows());
  for (const ElementUpdate* u : order) {
    std::ranges::copy(u->values.values(), secret.begin());
    for (std::size_t i = 0; i < previous.rows(); ++i) {
      secret[n_values + i] = u->mask.bits[i];
    }
    shares.push_back(SecAggShare(secret, u->client_id, seeds, codec));
  }
  const std::vector<double> total = SecAggSum(shares, codec);

  Matrix result = previous;
  for (std::size_t i = 0; i < previous.rows(); ++i) {
    // Integer counts survive the fixed-point encoding exactly.
    const double count = total[n_values + i];
    if (count < 0.5) continue;
    auto out = result.row(i);
    for (std::size_t k = 0; k < previous.cols(); ++k) {
      out[k] = total[i * previous.cols() + k] / count;
    }
  }
  return result;
}

std::uint64_t RoundLog::upload_bytes() const {
  std::uint64_t total = 0;
  for (const auto& u : uploads) total += u.bytes;
  return total;
}

std::uint64_t RoundLog::upload_elements() const {
  std::uint64_t total = 0;
  for (const auto& u : uploads) total += u.elements;
  return total;
}

ClientState::ClientState(const ClientDataset& data, EmbeddingTable table)
    : data_(&data),
      table_(std::move(table)),
      adam_(AdamState::For(table_)),
      train_set_(data.train.begin(), data.train.end()),
      grad_(table_) {}

double ClientState::Train(const TrainConfig& cfg, Rng& rng) {
  const auto& train = data_->train;
  if (train.empty() || cfg.local_epochs == 0) return 0.0;
  std::vector<std::size_t> order(train.size());
  std::vector<TrainingExample> batch;
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        TrainingExample& ex = batch[i - start];
        ex.positive = train[order[i]];
        ex.negatives = NegativeSample(ex.positive, cfg.num_negatives,
                                      data_->local_entities, &train_set_,
                                      cfg.corruption, rng);
      }
      const double loss = AccumulateGradient(table_, batch, cfg, grad_);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(start / cfg.batch_size));
      }
      AdamStep(adam_, table_, grad_, cfg.learning_rate);
      loss_sum += loss;
      ++batches;
    }
  }
  return loss_sum / static_cast<double>(batches);
}

void ReceiveBroadcast(ClientState& client, const ElementTable& global,
                      SharedElement element) {
  Matrix& rows = SharedRows(client.mutable_table(), element);
  if (global.embeddings.cols() != rows.cols()) {
    throw ContractViolation("broadcast width does not match the client table");
  }
  const std::set<std::int32_t> owned(LocalIds(client.data(), element).begin(),
                                     LocalIds(client.data(), element).end());
  for (std::size_t i = 0; i < global.ids.size(); ++i) {
    if (!owned.contains(global.ids[i])) continue;
    std::ranges::copy(global.embeddings.row(i),
                      rows.row(global.ids[i]).begin());
  }
}

ClientUpdateResult ClientUpdate(ClientState& client, const ElementTable& global,
                                SharedElement element, const TrainConfig& cfg,
                                Rng& rng) {
  ReceiveBroadcast(client, global, element);
  ClientUpdateResult result;
  result.loss = client.Train(cfg, rng);
  const Matrix& rows = SharedRows(client.mutable_table(), element);
  result.update.client_id = client.data().client_id;
  result.update.mask = BuildMask(global.ids, LocalIds(client.data(), element));
  result.update.values = Matrix(global.ids.size(), rows.cols());
  for (std::size_t i = 0; i < global.ids.size(); ++i) {
    if (!result.update.mask.bits[i]) continue;
    std::ranges::copy(rows.row(global.ids[i]),
                      result.update.values.row(i).begin());
  }
  return result;
}

void FederationConfig::Validate() const {
  if (rounds < 0) throw ConfigError("rounds must be >= 0");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw ConfigError("sample_fraction must be in (0, 1]");
  }
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (mode == Mode::kLocal && secagg) {
    throw ConfigError("secagg requires mode FedR or FedE");
  }
}

std::vector<EmbeddingTable> InitialClientTables(
    std::span<const ClientDataset> clients, ModelKind kind,
    std::size_t num_entities, std::size_t num_relations, const TrainConfig& cfg,
    std::uint64_t seed) {
  Matrix relations(num_relations, RelationWidth(kind, cfg.dim));
  InitRelationRows(kind, cfg.dim, relations,
                   DeriveSeed(seed, "init-relations"));
  std::vector<EmbeddingTable> tables;
  for (const auto& c : clients) {
    EmbeddingTable t;
    t.kind = kind;
    t.norm = cfg.norm;
    t.entities = Matrix(num_entities, EntityWidth(kind, cfg.dim));
    InitEntityRows(kind, cfg.dim, t.entities,
                   DeriveSeed(seed, "init-entities",
                              {static_cast<std::uint64_t>(c.client_id)}));
    t.relations = relations;
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<int> SampleClients(int num_clients, double fraction,
                               std::uint64_t seed, int round) {
  const int k =
      std::clamp(static_cast<int>(std::ceil(fraction * num_clients - 1e-12)), 1,
                 num_clients);
  std::vector<int> ids(num_clients);
  std::iota(ids.begin(), ids.end(), 0);
  if (k < num_clients) {
    Rng rng(DeriveSeed(seed, "sample", {static_cast<std::uint64_t>(round)}));
    rng.Shuffle(std::span<int>(ids));
    ids.resize(k);
    std::ranges::sort(ids);
  }
  return ids;
}

TrainingResult RunTraining(std::span<const ClientDataset> clients,
                           ModelKind kind, std::size_t num_entities,
                           std::size_t num_relations, const TrainConfig& cfg,
                           const FederationConfig& fed) {
  if (clients.empty()) throw ContractViolation("no clients");
  cfg.Validate(kind);
  fed.Validate();
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].client_id != static_cast<int>(i)) {
      throw ContractViolation("client ids must be 0..C-1 in order");
    }
  }
  const int num_clients = static_cast<int>(clients.size());
  TrainingResult result;

  std::vector<ClientState> states;
  {
    auto tables = InitialClientTables(clients, kind, num_entities,
                                      num_relations, cfg, fed.seed);
    states.reserve(clients.size());
    for (int c = 0; c < num_clients; ++c) {
      states.emplace_back(clients[c], std::move(tables[c]));
    }
  }

  // Server-side alignment and table initialization.
  const bool federated = fed.mode != Mode::kLocal;
  const SharedElement element = fed.mode == Mode::kFedE
                                    ? SharedElement::kEntities
                                    : SharedElement::kRelations;
  ElementTable global;
  if (fed.mode == Mode::kFedR) {
    std::vector<std::vector<RelationId>> sets;
    for (const auto& c : clients) sets.push_back(c.local_relations);
    PsuResult psu = PsuUnion(sets, DeriveSeed(fed.seed, "psu"));
    global.ids = psu.union_ids;
    if (fed.psu) result.psu = std::move(psu);
    // Row i takes the global initialization of relation ids[i], which is
    // what every client already holds.
    global.embeddings = Matrix(global.ids.size(), RelationWidth(kind, cfg.dim));
    for (std::size_t i = 0; i < global.ids.size(); ++i) {
      std::ranges::copy(states[0].table().relations.row(global.ids[i]),
                        global.embeddings.row(i).begin());
    }
  } else if (fed.mode == Mode::kFedE) {
    // FedE's server keeps the plaintext entity-id table.
    std::set<EntityId> all;
    for (const auto& c : clients) {
      all.insert(c.local_entities.begin(), c.local_entities.end());
    }
    global.ids.assign(all.begin(), all.end());
    global.embeddings = Matrix(global.ids.size(), EntityWidth(kind, cfg.dim));
    InitEntityRows(kind, cfg.dim, global.embeddings,
                   DeriveSeed(fed.seed, "init-server-entities"));
  }

  std::vector<EmbeddingTable> best_tables;
  double best = -1.0;
  int evals_without_gain = 0;

  for (int round = 1; round <= fed.rounds; ++round) {
    const auto started = std::chrono::steady_clock::now();
    RoundLog log;
    log.round = round;
    log.participants =
        federated
            ? SampleClients(num_clients, fed.sample_fraction, fed.seed, round)
            : SampleClients(num_clients, 1.0, fed.seed, round);
    if (federated) {
      for (auto& s : states) ReceiveBroadcast(s, global, element);
    }

    std::vector<ElementUpdate> updates;
    double loss_sum = 0.0;
    for (int c : log.participants) {
      Rng rng(DeriveSeed(
          fed.seed, "client",
          {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(round)}));
      try {
        if (!federated) {
          loss_sum += states[c].Train(cfg, rng);
          continue;
        }
        ClientUpdateResult r =
            ClientUpdate(states[c], global, element, cfg, rng);
        loss_sum += r.loss;
        const std::uint64_t elements =
            r.update.mask.count() * global.embeddings.cols();
        log.uploads.push_back({c, elements, elements * kBytesPerScalar});
        updates.push_back(std::move(r.update));
      } catch (const NumericError& e) {
        throw NumericError("round " + std::to_string(round) + ", client " +
                           std::to_string(c) + ": " + e.what());
      }
    }
    log.train_loss = loss_sum / static_cast<double>(log.participants.size());

    if (federated) {
      global.embeddings =
          fed.secagg
              ? AggregateSecure(updates, global.embeddings, fed.codec,
                                DeriveSeed(fed.seed, "secagg",
                                           {static_cast<std::uint64_t>(round)}))
              : Aggregate(updates, global.embeddings);
      for (int c : log.participants)
        ReceiveBroadcast(states[c], global, element);
    }

    bool stop = false;
    if (round % fed.eval_every == 0) {
      double mrr = 0.0;
      for (const auto& s : states) {
        mrr += EvaluateClient(s.data(), s.table(), EvalSplit::kValid, fed.eval)
                   .mrr;
      }
      mrr /= static_cast<double>(states.size());
      log.valid_mrr = mrr;
      if (mrr > best) {
        best = mrr;
        result.best_round = round;
        result.best_valid_mrr = mrr;
        evals_without_gain = 0;
        if (fed.restore_best) {
          best_tables.clear();
          for (const auto& s : states) best_tables.push_back(s.table());
        }
      } else if (++evals_without_gain >= fed.patience) {
        stop = true;
      }
    }
    log.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    result.logs.push_back(log);
    if (fed.on_round) fed.on_round(result.logs.back());
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }

  if (fed.restore_best && !best_tables.empty()) {
    result.tables = std::move(best_tables);
  } else {
    for (const auto& s : states) result.tables.push_back(s.table());
  }
  return result;
}

}  // namespace fedkge
