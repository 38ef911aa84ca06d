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

#ifndef FEDKGE_FEDERATION_H_
#define FEDKGE_FEDERATION_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedkge/evaluation.h"
#include "fedkge/kg_data.h"
#include "fedkge/matrix.h"
#include "fedkge/model.h"
#include "fedkge/secure.h"

namespace fedkge {

// Payload accounting unit: one single-precision scalar per element.
inline constexpr std::uint64_t kBytesPerScalar = 4;

enum class Mode {
  kLocal,  // no communication
  kFedE,   // entity embeddings aggregated, plaintext entity table at server
  kFedR,   // relation embeddings aggregated
};

std::string_view ModeName(Mode mode);
Mode ParseMode(std::string_view name);

// bits[i] == 1 iff global element i exists at the client.
struct MaskVector {
  std::vector<std::uint8_t> bits;

  std::size_t count() const;
  friend bool operator==(const MaskVector&, const MaskVector&) = default;
};

// Server-side table of shared embeddings. Row i belongs to ids[i]. FedR
// keeps relations here; the FedE baseline reuses it for entities.
struct ElementTable {
  std::vector<std::int32_t> ids;
  Matrix embeddings;
};
using RelationTable = ElementTable;

MaskVector BuildMask(std::span<const std::int32_t> global_ids,
                     std::span<const std::int32_t> local_ids);

struct ElementUpdate {
  int client_id = 0;
  Matrix values;  // global width, rows with mask 0 are zero
  MaskVector mask;
};

// Row i = (sum_c values_c[i]) / (sum_c mask_c[i]); rows nobody holds keep
// `previous`. Updates are summed in client-id order, so the result does not
// depend on the order of `updates`.
Matrix Aggregate(std::span<const ElementUpdate> updates,
                 const Matrix& previous);

// FedE entity aggregation; same averaging rule as Aggregate.
Matrix AggregateEntities(std::span<const ElementUpdate> updates,
                         const Matrix& previous);

// Aggregate computed through pairwise-masked secure aggregation: each client
// shares its flattened matrix concatenated with its mask, the server only
// decodes the two sums.
Matrix AggregateSecure(std::span<const ElementUpdate> updates,
                       const Matrix& previous, const FixedPointCodec& codec,
                       std::uint64_t session_seed);

struct ClientUpload {
  int client_id = 0;
  std::uint64_t elements = 0;  // local element count x embedding width
  std::uint64_t bytes = 0;
};

struct RoundLog {
  int round = 0;
  std::vector<int> participants;
  std::vector<ClientUpload> uploads;  // empty in Local mode
  double train_loss = 0.0;            // mean over participants
  std::optional<double> valid_mrr;
  double wall_seconds = 0.0;

  std::uint64_t upload_bytes() const;
  std::uint64_t upload_elements() const;
};

// Client-side training state: a full-width local table (indexed by global
// ids), its optimizer state and scratch buffers.
class ClientState {
 public:
  ClientState(const ClientDataset& data, EmbeddingTable table);

  const ClientDataset& data() const { return *data_; }
  const EmbeddingTable& table() const { return table_; }
  EmbeddingTable& mutable_table() { return table_; }

  // Runs cfg.local_epochs epochs over the train split; returns the mean
  // batch loss (0 when no batch ran). Throws NumericError on a non-finite
  // loss, naming the epoch and batch.
  double Train(const TrainConfig& cfg, Rng& rng);

 private:
  const ClientDataset* data_;
  EmbeddingTable table_;
  AdamState adam_;
  TripleSet train_set_;
  SparseGradient grad_;
};

enum class SharedElement { kRelations, kEntities };

struct ClientUpdateResult {
  ElementUpdate update;
  double loss = 0.0;
};

// Receives `global` (overwriting only rows the client owns), trains locally
// and returns the masked global-width matrix with its mask.
ClientUpdateResult ClientUpdate(ClientState& client, const ElementTable& global,
                                SharedElement element, const TrainConfig& cfg,
                                Rng& rng);

// Overwrites the client's owned rows of `element` from `global`.
void ReceiveBroadcast(ClientState& client, const ElementTable& global,
                      SharedElement element);

struct FederationConfig {
  Mode mode = Mode::kFedR;
  int rounds = 300;
  double sample_fraction = 1.0;
  int eval_every = 1;
  int patience = 5;
  std::uint64_t seed = 0;
  bool psu = true;
  bool secagg = false;
  FixedPointCodec codec;
  EvalOptions eval;
  // Return the tables from the best validation round instead of the last.
  bool restore_best = true;
  // Invoked after every round, e.g. for progress output.
  std::function<void(const RoundLog&)> on_round;

  void Validate() const;
};

struct TrainingResult {
  std::vector<EmbeddingTable> tables;
  std::vector<RoundLog> logs;
  int best_round = 0;  // 0 means no evaluation improved on initialization
  double best_valid_mrr = 0.0;
  bool early_stopped = false;
  // What the server learned about relation membership during alignment.
  std::optional<PsuResult> psu;
};

// Initial tables for every client: entity rows from a per-client stream,
// relation rows from one global stream (so Local and FedR start alike).
std::vector<EmbeddingTable> InitialClientTables(
    std::span<const ClientDataset> clients, ModelKind kind,
    std::size_t num_entities, std::size_t num_relations, const TrainConfig& cfg,
    std::uint64_t seed);

// Sorted ids of ceil(fraction * num_clients) clients for `round`.
std::vector<int> SampleClients(int num_clients, double fraction,
                               std::uint64_t seed, int round);

TrainingResult RunTraining(std::span<const ClientDataset> clients,
                           ModelKind kind, std::size_t num_entities,
                           std::size_t num_relations, const TrainConfig& cfg,
                           const FederationConfig& fed);

}  // namespace fedkge

#endif  // FEDKGE_FEDERATION_H_
