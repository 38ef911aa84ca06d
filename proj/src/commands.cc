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

#include "fedkge/commands.h"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fedkge/checkpoint.h"
#include "fedkge/errors.h"
#include "fedkge/kg_data.h"
#include "fedkge/synthetic.h"
#include "json.hpp"

namespace fedkge {
namespace {

using ojson = nlohmann::ordered_json;

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string FormatTarget(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ojson ReadJson(const fs::path& path) {
  try {
    return ojson::parse(ReadText(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

ojson MetricsJson(const MetricsReport& m) {
  ojson j;
  j["mrr"] = m.mrr;
  j["hits1"] = m.hits1;
  j["hits3"] = m.hits3;
  j["hits10"] = m.hits10;
  ojson per = ojson::array();
  for (const auto& c : m.per_client) {
    per.push_back({{"client", c.client_id},
                   {"queries", c.num_queries},
                   {"mrr", c.mrr},
                   {"hits1", c.hits1},
                   {"hits3", c.hits3},
                   {"hits10", c.hits10}});
  }
  j["per_client"] = std::move(per);
  return j;
}

MetricsReport MetricsFromJson(const ojson& j) {
  MetricsReport m;
  m.mrr = j.at("mrr").get<double>();
  m.hits1 = j.at("hits1").get<double>();
  m.hits3 = j.at("hits3").get<double>();
  m.hits10 = j.at("hits10").get<double>();
  return m;
}

fs::path CheckpointPath(const fs::path& dir, int client) {
  return dir / ("client_" + std::to_string(client) + ".ckpt");
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Round logs as recorded in rounds.csv (per-round totals only).
std::vector<RoundLog> ReadRoundsCsv(const fs::path& path) {
  std::istringstream in(ReadText(path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<RoundLog> logs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    if (f.size() != 6) {
      throw ParseError(path.string() + ": expected 6 columns", line_no);
    }
    try {
      RoundLog log;
      log.round = std::stoi(f[0]);
      const std::uint64_t elements = std::stoull(f[2]);
      if (elements > 0) {
        log.uploads.push_back({-1, elements, std::stoull(f[3])});
      }
      log.train_loss = std::stod(f[4]);
      if (!f[5].empty()) log.valid_mrr = std::stod(f[5]);
      logs.push_back(std::move(log));
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": bad number", line_no);
    }
  }
  return logs;
}

}  // namespace

std::string FingerprintHex(std::uint64_t fingerprint) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fingerprint);
  return buf;
}

std::vector<ClientDataset> CmdSplit(const RunManifest& m) {
  ValidateManifest(m, Command::kSplit);
  KnowledgeGraph kg;
  if (m.dataset.synthetic) {
    SyntheticOptions o = *m.dataset.synthetic;
    o.seed = m.dataset.synthetic_seed.value_or(m.seed);
    kg = GenerateSyntheticKg(o);
  } else {
    kg = LoadTriples(*m.dataset.triples, m.dataset.entity_dict,
                     m.dataset.relation_dict);
  }
  auto clients =
      FederatedSplit(kg, m.dataset.num_clients, m.dataset.ratios, m.seed);
  WriteSplit(*m.output_dir, kg, clients);
  return clients;
}

TrainOutcome CmdTrain(const RunManifest& m, std::ostream* progress) {
  ValidateManifest(m, Command::kTrain);
  const LoadedSplit split = ReadSplit(*m.dataset.split_dir);
  if (static_cast<int>(split.clients.size()) != m.dataset.num_clients) {
    throw ConfigError("dataset.num_clients: split has " +
                      std::to_string(split.clients.size()) + " clients");
  }
  const fs::path out = *m.output_dir;
  fs::create_directories(out);

  TrainConfig cfg = m.train;
  cfg.seed = m.seed;
  FederationConfig fed = MakeFederationConfig(m);
  std::ostringstream timing;
  fed.on_round = [&](const RoundLog& log) {
    timing << "round " << log.round << " wall_seconds "
           << FormatDouble(log.wall_seconds) << "\n";
    if (progress) {
      *progress << "round " << log.round << " loss "
                << FormatDouble(log.train_loss);
      if (log.valid_mrr) *progress << " valid_mrr " << *log.valid_mrr;
      *progress << "\n" << std::flush;
    }
  };
  const auto start = std::chrono::steady_clock::now();

  TrainOutcome outcome;
  outcome.fingerprint = DatasetFingerprint(split.clients);
  outcome.result = RunTraining(split.clients, m.model, split.entities.size(),
                               split.relations.size(), cfg, fed);
  const auto& result = outcome.result;
  outcome.valid =
      Evaluate(split.clients, result.tables, EvalSplit::kValid, m.eval);
  outcome.test =
      Evaluate(split.clients, result.tables, EvalSplit::kTest, m.eval);

  for (std::size_t c = 0; c < result.tables.size(); ++c) {
    WriteCheckpoint(CheckpointPath(out, static_cast<int>(c)), result.tables[c],
                    {static_cast<int>(c), cfg.dim, m.seed});
  }

  std::string rounds =
      "round,participants,upload_elements,upload_bytes,"
      "train_loss,valid_mrr\n";
  std::string convergence = "round,mode,model,train_loss,valid_mrr\n";
  for (const RoundLog& log : result.logs) {
    std::string participants;
    for (int p : log.participants) {
      if (!participants.empty()) participants += ' ';
      participants += std::to_string(p);
    }
    const std::string mrr = log.valid_mrr ? FormatDouble(*log.valid_mrr) : "";
    rounds += std::to_string(log.round) + "," + participants + "," +
              std::to_string(log.upload_elements()) + "," +
              std::to_string(log.upload_bytes()) + "," +
              FormatDouble(log.train_loss) + "," + mrr + "\n";
    convergence += std::to_string(log.round) + "," +
                   std::string(ModeName(m.mode)) + "," +
                   std::string(ModelKindName(m.model)) + "," +
                   FormatDouble(log.train_loss) + "," + mrr + "\n";
  }
  WriteText(out / "rounds.csv", rounds);
  WriteText(out / "convergence.csv", convergence);

  ojson metrics;
  metrics["mode"] = ModeName(m.mode);
  metrics["model"] = ModelKindName(m.model);
  metrics["best_round"] = result.best_round;
  metrics["best_valid_mrr"] = result.best_valid_mrr;
  metrics["rounds_run"] = result.logs.size();
  metrics["early_stopped"] = result.early_stopped;
  metrics["valid"] = MetricsJson(outcome.valid);
  metrics["test"] = MetricsJson(outcome.test);
  WriteText(out / "metrics.json", metrics.dump(2) + "\n");

  ojson run;
  run["format"] = "fedkge-run-v1";
  run["manifest"] = ojson::parse(ManifestJson(m));
  run["dataset_fingerprint"] = FingerprintHex(outcome.fingerprint);
  run["num_clients"] = split.clients.size();
  run["num_entities"] = split.entities.size();
  run["num_relations"] = split.relations.size();
  if (result.psu) {
    run["psu"] = {{"union_size", result.psu->union_ids.size()},
                  {"contributed_counts", result.psu->contributed_counts}};
  } else {
    run["psu"] = nullptr;
  }
  WriteText(out / "run.json", run.dump(2) + "\n");

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  timing << "total wall_seconds " << FormatDouble(total) << "\n";
  WriteText(out / "timing.log", timing.str());
  return outcome;
}

RunArtifacts LoadRunArtifacts(const fs::path& run_dir) {
  const ojson run = ReadJson(run_dir / "run.json");
  RunArtifacts a;
  try {
    const auto& man = run.at("manifest");
    a.mode = ParseMode(man.at("mode").get<std::string>());
    a.kind = ParseModelKind(man.at("model").get<std::string>());
    a.secagg = man.at("secure").at("secagg").get<bool>();
    const fs::path split_dir =
        man.at("dataset").at("split_dir").get<std::string>();
    LoadedSplit split = ReadSplit(split_dir);
    if (FingerprintHex(DatasetFingerprint(split.clients)) !=
        run.at("dataset_fingerprint").get<std::string>()) {
      throw IoError("split at " + split_dir.string() +
                    " no longer matches the run's fingerprint");
    }
    a.clients = std::move(split.clients);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((run_dir / "run.json").string() + ": " + e.what(), 0);
  }
  for (std::size_t c = 0; c < a.clients.size(); ++c) {
    const fs::path p = CheckpointPath(run_dir, static_cast<int>(c));
    if (!fs::exists(p)) throw IoError("missing checkpoint " + p.string());
    a.tables.push_back(ReadCheckpoint(p).table);
  }
  return a;
}

std::vector<LeakageResult> CmdAttack(const RunManifest& m) {
  ValidateManifest(m, Command::kAttack);
  const fs::path run_dir = m.attack.run_dir ? *m.attack.run_dir : *m.output_dir;
  const RunArtifacts run = LoadRunArtifacts(run_dir);
  if (m.attack.traitor >= static_cast<int>(run.clients.size())) {
    throw ConfigError("attack.traitor: run has only " +
                      std::to_string(run.clients.size()) + " clients");
  }
  std::vector<LeakageResult> results;
  ojson j;
  j["mode"] = ModeName(run.mode);
  j["model"] = ModelKindName(run.kind);
  j["secagg"] = run.secagg;
  j["traitor"] = m.attack.traitor;
  ojson entries = ojson::array();
  for (double lr : m.attack.leakage_ratios) {
    LeakageOptions opt;
    opt.leakage_ratio = lr;
    opt.traitor = m.attack.traitor;
    opt.seed = m.seed;
    LeakageResult r = LeakageExperiment(run, opt);
    ojson e;
    e["leakage_ratio"] = lr;
    double err = 0.0, trr = 0.0;
    ojson targets = ojson::array();
    for (const auto& t : r.targets) {
      targets.push_back({{"client", t.client_id},
                         {"err", t.report.err},
                         {"trr", t.report.trr}});
      err += t.report.err;
      trr += t.report.trr;
    }
    const double n = r.targets.empty() ? 1.0 : r.targets.size();
    e["mean_err"] = err / n;
    e["mean_trr"] = trr / n;
    e["targets"] = std::move(targets);
    if (!r.note.empty()) e["note"] = r.note;
    entries.push_back(std::move(e));
    results.push_back(std::move(r));
  }
  j["results"] = std::move(entries);
  fs::create_directories(*m.output_dir);
  WriteText(*m.output_dir / "leakage.json", j.dump(2) + "\n");
  return results;
}

ReportOutcome CmdReport(const RunManifest& m) {
  ValidateManifest(m, Command::kReport);
  ReportOutcome outcome;
  outcome.targets = m.report.target_mrrs;
  const std::size_t nt = outcome.targets.size();

  std::vector<std::vector<RoundLog>> all_logs;
  std::vector<std::string> fingerprints;
  for (const fs::path& dir : m.report.runs) {
    const ojson run = ReadJson(dir / "run.json");
    const ojson metrics = ReadJson(dir / "metrics.json");
    ReportRow row;
    try {
      const auto& man = run.at("manifest");
      row.run = man.at("name").get<std::string>();
      row.mode = ParseMode(man.at("mode").get<std::string>());
      row.model = ParseModelKind(man.at("model").get<std::string>());
      row.test = MetricsFromJson(metrics.at("test"));
      fingerprints.push_back(run.at("dataset_fingerprint").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(dir.string() + ": " + e.what(), 0);
    }
    auto logs = ReadRoundsCsv(dir / "rounds.csv");
    for (const RoundLog& log : logs) {
      if (log.upload_elements() > 0) {
        row.payload_elements = log.upload_elements();
        break;
      }
    }
    std::vector<std::pair<int, double>> series;
    for (const RoundLog& log : logs) {
      if (log.valid_mrr) series.emplace_back(log.round, *log.valid_mrr);
    }
    for (double target : outcome.targets) {
      const auto rounds = RoundsToTarget(series, target);
      row.rounds_to_target.push_back(rounds);
      if (rounds) {
        row.cost_elements.push_back(
            CommunicationCost(logs, *rounds).cost_elements);
      } else {
        row.cost_elements.push_back(std::nullopt);
      }
    }
    row.cost_reduction.assign(nt, std::nullopt);
    outcome.rows.push_back(std::move(row));
    all_logs.push_back(std::move(logs));
  }

  for (std::size_t i = 1; i < fingerprints.size(); ++i) {
    if (fingerprints[i] != fingerprints[0]) {
      throw ConfigError("report.runs: dataset fingerprints differ: " +
                        m.report.runs[0].string() + " has " + fingerprints[0] +
                        ", " + m.report.runs[i].string() + " has " +
                        fingerprints[i]);
    }
  }

  ojson comparisons = ojson::array();
  for (auto& row : outcome.rows) {
    if (row.mode != Mode::kFedR) continue;
    for (const auto& base : outcome.rows) {
      if (base.mode != Mode::kFedE || base.model != row.model) continue;
      ojson c;
      c["model"] = ModelKindName(row.model);
      c["fedr_run"] = row.run;
      c["fede_run"] = base.run;
      c["payload_ratio"] =
          base.payload_elements == 0
              ? ojson()
              : ojson(static_cast<double>(row.payload_elements) /
                      static_cast<double>(base.payload_elements));
      ojson red = ojson::object();
      for (std::size_t k = 0; k < nt; ++k) {
        const auto& a = row.cost_elements[k];
        const auto& b = base.cost_elements[k];
        if (a && b && *b > 0) {
          row.cost_reduction[k] =
              1.0 - static_cast<double>(*a) / static_cast<double>(*b);
          red[FormatTarget(outcome.targets[k])] = *row.cost_reduction[k];
        } else {
          red[FormatTarget(outcome.targets[k])] = nullptr;
        }
      }
      c["cost_reduction"] = std::move(red);
      comparisons.push_back(std::move(c));
      break;
    }
  }

  ojson j;
  j["dataset_fingerprint"] = fingerprints.empty() ? "" : fingerprints[0];
  j["target_mrrs"] = outcome.targets;
  ojson runs = ojson::array();
  for (const auto& row : outcome.rows) {
    ojson r;
    r["run"] = row.run;
    r["mode"] = ModeName(row.mode);
    r["model"] = ModelKindName(row.model);
    r["payload_elements_per_round"] = row.payload_elements;
    r["payload_bytes_per_round"] = row.payload_elements * kBytesPerScalar;
    ojson rt = ojson::object(), cost = ojson::object();
    for (std::size_t k = 0; k < nt; ++k) {
      const std::string key = FormatTarget(outcome.targets[k]);
      rt[key] =
          row.rounds_to_target[k] ? ojson(*row.rounds_to_target[k]) : ojson();
      cost[key] = row.cost_elements[k] ? ojson(*row.cost_elements[k]) : ojson();
    }
    r["rounds_to_target"] = std::move(rt);
    r["cost_elements"] = std::move(cost);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  j["comparisons"] = std::move(comparisons);

  std::string csv = "run,mode,model,mrr,hits1,hits3,hits10,payload_elements";
  for (double t : outcome.targets) {
    csv += ",rounds_to_" + FormatTarget(t) + ",cost_" + FormatTarget(t) +
           ",reduction_" + FormatTarget(t);
  }
  csv += "\n";
  for (const auto& row : outcome.rows) {
    csv += row.run + "," + std::string(ModeName(row.mode)) + "," +
           std::string(ModelKindName(row.model)) + "," +
           FormatDouble(row.test.mrr) + "," + FormatDouble(row.test.hits1) +
           "," + FormatDouble(row.test.hits3) + "," +
           FormatDouble(row.test.hits10) + "," +
           std::to_string(row.payload_elements);
    for (std::size_t k = 0; k < nt; ++k) {
      csv += ",";
      if (row.rounds_to_target[k]) {
        csv += std::to_string(*row.rounds_to_target[k]);
      }
      csv += ",";
      if (row.cost_elements[k]) csv += std::to_string(*row.cost_elements[k]);
      csv += ",";
      if (row.cost_reduction[k]) csv += FormatDouble(*row.cost_reduction[k]);
    }
    csv += "\n";
  }
  fs::create_directories(*m.output_dir);
  WriteText(*m.output_dir / "comm_report.json", j.dump(2) + "\n");
  WriteText(*m.output_dir / "summary.csv", csv);
  return outcome;
}

}  // namespace fedkge
