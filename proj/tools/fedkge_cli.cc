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

// fedkge: split / train / attack / report driven by one JSON manifest.
//
// Exit codes: 0 success, 2 validation error, 3 runtime failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedkge/commands.h"
#include "fedkge/errors.h"
#include "fedkge/manifest.h"

namespace {

struct Options {
  std::string manifest;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int Run(fedkge::Command command, const Options& opt) {
  fedkge::RunManifest m = fedkge::LoadManifest(opt.manifest);
  if (opt.output) m.output_dir = std::filesystem::absolute(*opt.output);
  if (opt.seed) m.seed = *opt.seed;
  switch (command) {
    case fedkge::Command::kSplit: {
      const auto clients = fedkge::CmdSplit(m);
      std::cout << "wrote " << clients.size() << " client splits to "
                << m.output_dir->string() << "\n";
      break;
    }
    case fedkge::Command::kTrain: {
      const auto out = fedkge::CmdTrain(m, opt.quiet ? nullptr : &std::cerr);
      std::cout << "best round " << out.result.best_round << ", test MRR "
                << out.test.mrr << ", hits@10 " << out.test.hits10 << "\n";
      break;
    }
    case fedkge::Command::kAttack: {
      for (const auto& r : fedkge::CmdAttack(m)) {
        double err = 0.0, trr = 0.0;
        for (const auto& t : r.targets) {
          err += t.report.err;
          trr += t.report.trr;
        }
        const double n = r.targets.empty() ? 1.0 : r.targets.size();
        std::cout << "LR " << r.leakage_ratio << ": mean ERR " << err / n
                  << ", mean TRR " << trr / n;
        if (!r.note.empty()) std::cout << " (" << r.note << ")";
        std::cout << "\n";
      }
      break;
    }
    case fedkge::Command::kReport: {
      const auto out = fedkge::CmdReport(m);
      std::cout << "reported " << out.rows.size() << " runs to "
                << m.output_dir->string() << "\n";
      break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated knowledge graph embedding simulator"};
  app.require_subcommand(1);
  Options opt;
  fedkge::Command command = fedkge::Command::kSplit;

  auto add = [&](fedkge::Command c, const std::string& help) {
    CLI::App* sub =
        app.add_subcommand(std::string(fedkge::CommandName(c)), help);
    sub->add_option("--manifest", opt.manifest, "Run manifest (JSON)")
        ->required();
    sub->add_option("--output", opt.output, "Override output_dir");
    sub->add_option("--seed", opt.seed, "Override the root seed");
    sub->add_flag("--quiet", opt.quiet, "No per-round progress");
    sub->callback([&command, c] { command = c; });
  };
  add(fedkge::Command::kSplit, "Split a triple file into client datasets");
  add(fedkge::Command::kTrain, "Run federated training");
  add(fedkge::Command::kAttack, "Run the reconstruction attack on a run");
  add(fedkge::Command::kReport, "Compare runs: metrics and communication");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return Run(command, opt);
  } catch (const fedkge::ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
