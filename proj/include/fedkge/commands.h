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

#ifndef FEDKGE_COMMANDS_H_
#define FEDKGE_COMMANDS_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fedkge/attack.h"
#include "fedkge/evaluation.h"
#include "fedkge/federation.h"
#include "fedkge/manifest.h"

namespace fedkge {

// Each command validates the manifest for itself first (ConfigError on
// failure) and writes its artifacts under manifest.output_dir.

// Writes the split directory; returns the clients.
std::vector<ClientDataset> CmdSplit(const RunManifest& manifest);

struct TrainOutcome {
  TrainingResult result;
  MetricsReport valid;
  MetricsReport test;
  std::uint64_t fingerprint = 0;
};

// Writes run.json, rounds.csv, convergence.csv, metrics.json, one
// client_<i>.ckpt per client and a timing.log sidecar (the only file that
// varies between identical reruns). `progress` receives one line per round.
TrainOutcome CmdTrain(const RunManifest& manifest,
                      std::ostream* progress = nullptr);

// Loads the clients and per-client tables of a finished training run.
RunArtifacts LoadRunArtifacts(const std::filesystem::path& run_dir);

// Writes leakage.json with one entry per leakage ratio.
std::vector<LeakageResult> CmdAttack(const RunManifest& manifest);

struct ReportRow {
  std::string run;
  Mode mode = Mode::kFedR;
  ModelKind model = ModelKind::kTransE;
  MetricsReport test;
  std::uint64_t payload_elements = 0;  // per round, first uploading round
  std::vector<std::optional<int>> rounds_to_target;
  std::vector<std::optional<std::uint64_t>> cost_elements;
  // 1 - cost / cost of the FedE run with the same model (FedR rows only).
  std::vector<std::optional<double>> cost_reduction;
};

struct ReportOutcome {
  std::vector<double> targets;
  std::vector<ReportRow> rows;
};

// Writes comm_report.json and summary.csv. Refuses (ConfigError) runs
// trained on different splits.
ReportOutcome CmdReport(const RunManifest& manifest);

std::string FingerprintHex(std::uint64_t fingerprint);

}  // namespace fedkge

#endif  // FEDKGE_COMMANDS_H_
