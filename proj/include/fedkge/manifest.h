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

#ifndef FEDKGE_MANIFEST_H_
#define FEDKGE_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedkge/evaluation.h"
#include "fedkge/federation.h"
#include "fedkge/kg_data.h"
#include "fedkge/model.h"
#include "fedkge/synthetic.h"

namespace fedkge {

namespace fs = std::filesystem;

struct DatasetSection {
  std::optional<fs::path> triples;
  std::optional<fs::path> entity_dict;
  std::optional<fs::path> relation_dict;
  // Generated graph instead of a triple file.
  std::optional<SyntheticOptions> synthetic;
  // Graph seed; the manifest seed when unset.
  std::optional<std::uint64_t> synthetic_seed;
  std::optional<fs::path> split_dir;
  int num_clients = 5;
  SplitRatios ratios;
};

struct SecureSection {
  bool psu = true;
  bool secagg = false;
  int scale_bits = 24;
  double max_abs = 64.0;
};

struct AttackSection {
  std::optional<fs::path> run_dir;
  std::vector<double> leakage_ratios = {1.0};
  int traitor = 0;
};

struct ReportSection {
  std::vector<fs::path> runs;
  std::vector<double> target_mrrs = {0.2, 0.4};
};

struct RunManifest {
  std::string name = "run";
  Mode mode = Mode::kFedR;
  ModelKind model = ModelKind::kTransE;
  std::uint64_t seed = 0;
  std::optional<fs::path> output_dir;
  DatasetSection dataset;
  TrainConfig train;
  int rounds = 300;
  double sample_fraction = 1.0;
  int eval_every = 1;
  int patience = 5;
  bool restore_best = true;
  EvalOptions eval;
  SecureSection secure;
  AttackSection attack;
  ReportSection report;
};

enum class Command { kSplit, kTrain, kAttack, kReport };

std::string_view CommandName(Command command);

// Parses manifest JSON text. Relative paths are resolved against
// `base_dir`. Unknown keys and ill-typed values raise ConfigError naming
// the offending key.
RunManifest ParseManifest(std::string_view text, const fs::path& base_dir);
RunManifest LoadManifest(const fs::path& path);

// Checks value ranges, flag combinations and that every path `command`
// reads exists. Throws ConfigError naming the offending key.
void ValidateManifest(const RunManifest& manifest, Command command);

// Federation settings described by the manifest.
FederationConfig MakeFederationConfig(const RunManifest& manifest);

// Manifest echo written next to run artifacts (paths as resolved).
std::string ManifestJson(const RunManifest& manifest);

}  // namespace fedkge

#endif  // FEDKGE_MANIFEST_H_
