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

#include "fedkge/manifest.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fedkge/errors.h"
#include "json.hpp"

namespace fedkge {
namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that
// leftovers (typos) can be reported.
class Section {
 public:
  Section(const json& value, std::string prefix) : prefix_(std::move(prefix)) {
    if (!value.is_object()) {
      throw ConfigError(Label("") + ": expected an object");
    }
    value_ = &value;
  }

  std::string Label(std::string_view key) const {
    if (prefix_.empty()) return std::string(key);
    if (key.empty()) return prefix_;
    return prefix_ + "." + std::string(key);
  }

  bool Has(std::string_view key) const {
    return value_->contains(std::string(key));
  }

  const json& Raw(std::string_view key) {
    seen_.insert(std::string(key));
    return value_->at(std::string(key));
  }

  template <typename T>
  void Read(std::string_view key, T& out) {
    if (!Has(key)) return;
    const json& v = Raw(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigError("");
          }
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const ConfigError&) {
      throw ConfigError(Label(key) + ": wrong value type");
    } catch (const json::exception&) {
      throw ConfigError(Label(key) + ": wrong value type");
    }
  }

  std::optional<std::string> String(std::string_view key) {
    if (!Has(key)) return std::nullopt;
    std::string s;
    Read(key, s);
    return s;
  }

  void Finish() const {
    for (const auto& [key, _] : value_->items()) {
      if (!seen_.contains(key)) throw ConfigError(Label(key) + ": unknown key");
    }
  }

 private:
  const json* value_ = nullptr;
  std::string prefix_;
  std::set<std::string> seen_;
};

fs::path Resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

std::optional<fs::path> ReadPath(Section& s, std::string_view key,
                                 const fs::path& base) {
  auto v = s.String(key);
  if (!v) return std::nullopt;
  if (v->empty()) throw ConfigError(s.Label(key) + ": empty path");
  return Resolve(base, *v);
}

template <typename F>
auto Named(const Section& s, std::string_view key, F&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(s.Label(key) + ": " + e.what());
  }
}

void ParseDataset(const json& v, const fs::path& base, DatasetSection& d) {
  Section s(v, "dataset");
  d.triples = ReadPath(s, "triples", base);
  d.entity_dict = ReadPath(s, "entity_dict", base);
  d.relation_dict = ReadPath(s, "relation_dict", base);
  d.split_dir = ReadPath(s, "split_dir", base);
  s.Read("num_clients", d.num_clients);
  if (s.Has("ratios")) {
    const json& r = s.Raw("ratios");
    if (!r.is_array() || r.size() != 3 ||
        !std::ranges::all_of(r, [](const json& x) { return x.is_number(); })) {
      throw ConfigError("dataset.ratios: expected [train, valid, test]");
    }
    d.ratios = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
  }
  if (s.Has("synthetic")) {
    Section g(s.Raw("synthetic"), "dataset.synthetic");
    std::string preset = "biomedical";
    g.Read("preset", preset);
    SyntheticOptions o;
    if (preset == "biomedical") {
      o = BiomedicalLikeOptions(0);
    } else if (preset == "encyclopedic") {
      o = EncyclopedicLikeOptions(0);
    } else {
      throw ConfigError("dataset.synthetic.preset: unknown preset '" + preset +
                        "'");
    }
    g.Read("num_entities", o.num_entities);
    g.Read("num_relations", o.num_relations);
    g.Read("num_triples", o.num_triples);
    g.Read("num_types", o.num_types);
    g.Read("latent_dim", o.latent_dim);
    g.Read("range_size", o.range_size);
    g.Read("popularity_skew", o.popularity_skew);
    g.Read("temperature", o.temperature);
    g.Read("offset_scale", o.offset_scale);
    g.Read("relation_skew", o.relation_skew);
    if (g.Has("seed")) {
      std::uint64_t seed = 0;
      g.Read("seed", seed);
      d.synthetic_seed = seed;
    }
    g.Finish();
    d.synthetic = o;
  }
  s.Finish();
}

void ParseTrain(const json& v, TrainConfig& t) {
  Section s(v, "train");
  s.Read("margin", t.margin);
  s.Read("temperature", t.temperature);
  s.Read("num_negatives", t.num_negatives);
  s.Read("learning_rate", t.learning_rate);
  s.Read("local_epochs", t.local_epochs);
  s.Read("batch_size", t.batch_size);
  s.Read("dim", t.dim);
  if (auto n = s.String("norm")) {
    if (*n == "L2" || *n == "l2") {
      t.norm = Norm::kL2;
    } else if (*n == "L1" || *n == "l1") {
      t.norm = Norm::kL1;
    } else {
      throw ConfigError("train.norm: expected L1 or L2");
    }
  }
  if (auto c = s.String("corruption")) {
    if (*c == "both") {
      t.corruption = Corruption::kBoth;
    } else if (*c == "tail") {
      t.corruption = Corruption::kTailOnly;
    } else {
      throw ConfigError("train.corruption: expected both or tail");
    }
  }
  s.Finish();
}

std::string NormName(Norm n) { return n == Norm::kL2 ? "L2" : "L1"; }

}  // namespace

std::string_view CommandName(Command command) {
  switch (command) {
    case Command::kSplit:
      return "split";
    case Command::kTrain:
      return "train";
    case Command::kAttack:
      return "attack";
    case Command::kReport:
      return "report";
  }
  return "?";
}

RunManifest ParseManifest(std::string_view text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  RunManifest m;
  Section s(root, "");
  s.Read("name", m.name);
  if (auto mode = s.String("mode")) {
    m.mode = Named(s, "mode", [&] { return ParseMode(*mode); });
  }
  if (auto model = s.String("model")) {
    m.model = Named(s, "model", [&] { return ParseModelKind(*model); });
  }
  s.Read("seed", m.seed);
  m.output_dir = ReadPath(s, "output_dir", base_dir);
  if (s.Has("dataset")) ParseDataset(s.Raw("dataset"), base_dir, m.dataset);
  if (s.Has("train")) ParseTrain(s.Raw("train"), m.train);
  if (s.Has("federation")) {
    Section f(s.Raw("federation"), "federation");
    f.Read("rounds", m.rounds);
    f.Read("sample_fraction", m.sample_fraction);
    f.Read("eval_every", m.eval_every);
    f.Read("patience", m.patience);
    f.Read("restore_best", m.restore_best);
    f.Finish();
  }
  if (s.Has("eval")) {
    Section e(s.Raw("eval"), "eval");
    e.Read("filtered", m.eval.filtered);
    if (auto c = e.String("candidates")) {
      if (*c == "local") {
        m.eval.scope = CandidateScope::kLocal;
      } else if (*c == "global") {
        m.eval.scope = CandidateScope::kGlobal;
      } else {
        throw ConfigError("eval.candidates: expected local or global");
      }
    }
    e.Finish();
  }
  if (s.Has("secure")) {
    Section c(s.Raw("secure"), "secure");
    c.Read("psu", m.secure.psu);
    c.Read("secagg", m.secure.secagg);
    c.Read("scale_bits", m.secure.scale_bits);
    c.Read("max_abs", m.secure.max_abs);
    c.Finish();
  }
  if (s.Has("attack")) {
    Section a(s.Raw("attack"), "attack");
    m.attack.run_dir = ReadPath(a, "run_dir", base_dir);
    a.Read("leakage_ratios", m.attack.leakage_ratios);
    a.Read("traitor", m.attack.traitor);
    a.Finish();
  }
  if (s.Has("report")) {
    Section r(s.Raw("report"), "report");
    if (r.Has("runs")) {
      const json& runs = r.Raw("runs");
      if (!runs.is_array()) throw ConfigError("report.runs: expected a list");
      for (const json& p : runs) {
        if (!p.is_string()) throw ConfigError("report.runs: expected paths");
        m.report.runs.push_back(Resolve(base_dir, p.get<std::string>()));
      }
    }
    r.Read("target_mrrs", m.report.target_mrrs);
    r.Finish();
  }
  s.Finish();
  return m;
}

RunManifest LoadManifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("manifest: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseManifest(text.str(), fs::absolute(path).parent_path());
}

void ValidateManifest(const RunManifest& m, Command command) {
  auto require_dir = [](const std::optional<fs::path>& p,
                        const std::string& key) {
    if (!p) throw ConfigError(key + ": required");
    if (!fs::is_directory(*p)) {
      throw ConfigError(key + ": directory does not exist: " + p->string());
    }
  };
  auto require_file = [](const std::optional<fs::path>& p,
                         const std::string& key) {
    if (p && !fs::is_regular_file(*p)) {
      throw ConfigError(key + ": file does not exist: " + p->string());
    }
  };
  if (m.secure.secagg && m.mode == Mode::kLocal) {
    throw ConfigError("secure.secagg: requires mode FedR or FedE");
  }
  if (!(m.secure.max_abs > 0.0)) {
    throw ConfigError("secure.max_abs: must be > 0");
  }
  try {
    FixedPointCodec(m.secure.scale_bits, m.secure.max_abs,
                    std::max(2, m.dataset.num_clients));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("secure.scale_bits: ") + e.what());
  }
  if (m.dataset.num_clients < 1) {
    throw ConfigError("dataset.num_clients: must be >= 1");
  }
  const auto& r = m.dataset.ratios;
  if (r.train < 0 || r.valid < 0 || r.test < 0 ||
      std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    throw ConfigError("dataset.ratios: must be non-negative and sum to 1");
  }
  try {
    m.train.Validate(m.model);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  try {
    MakeFederationConfig(m).Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("federation: ") + e.what());
  }
  for (double lr : m.attack.leakage_ratios) {
    if (!(lr > 0.0 && lr <= 1.0)) {
      throw ConfigError("attack.leakage_ratios: values must be in (0, 1]");
    }
  }
  if (m.attack.traitor < 0) throw ConfigError("attack.traitor: must be >= 0");
  for (double t : m.report.target_mrrs) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ConfigError("report.target_mrrs: values must be in (0, 1]");
    }
  }
  if (!m.output_dir) throw ConfigError("output_dir: required");

  switch (command) {
    case Command::kSplit:
      if (m.dataset.triples.has_value() == m.dataset.synthetic.has_value()) {
        throw ConfigError(
            "dataset: exactly one of triples or synthetic is required");
      }
      require_file(m.dataset.triples, "dataset.triples");
      require_file(m.dataset.entity_dict, "dataset.entity_dict");
      require_file(m.dataset.relation_dict, "dataset.relation_dict");
      break;
    case Command::kTrain:
      require_dir(m.dataset.split_dir, "dataset.split_dir");
      break;
    case Command::kAttack:
      require_dir(m.attack.run_dir ? m.attack.run_dir : m.output_dir,
                  "attack.run_dir");
      if (m.attack.leakage_ratios.empty()) {
        throw ConfigError("attack.leakage_ratios: empty");
      }
      break;
    case Command::kReport:
      if (m.report.runs.empty()) throw ConfigError("report.runs: empty");
      for (const auto& run : m.report.runs) {
        require_dir(run, "report.runs");
      }
      if (m.report.target_mrrs.empty()) {
        throw ConfigError("report.target_mrrs: empty");
      }
      break;
  }
}

FederationConfig MakeFederationConfig(const RunManifest& m) {
  FederationConfig f;
  f.mode = m.mode;
  f.rounds = m.rounds;
  f.sample_fraction = m.sample_fraction;
  f.eval_every = m.eval_every;
  f.patience = m.patience;
  f.seed = m.seed;
  f.psu = m.secure.psu;
  f.secagg = m.secure.secagg;
  f.codec = FixedPointCodec(m.secure.scale_bits, m.secure.max_abs,
                            std::max(2, m.dataset.num_clients));
  f.eval = m.eval;
  f.restore_best = m.restore_best;
  return f;
}

std::string ManifestJson(const RunManifest& m) {
  nlohmann::ordered_json j;
  auto path_or_null = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json();
  };
  j["name"] = m.name;
  j["mode"] = ModeName(m.mode);
  j["model"] = ModelKindName(m.model);
  j["seed"] = m.seed;
  j["output_dir"] = path_or_null(m.output_dir);
  auto& d = j["dataset"];
  d["triples"] = path_or_null(m.dataset.triples);
  d["split_dir"] = path_or_null(m.dataset.split_dir);
  d["num_clients"] = m.dataset.num_clients;
  d["ratios"] = {m.dataset.ratios.train, m.dataset.ratios.valid,
                 m.dataset.ratios.test};
  if (m.dataset.synthetic) {
    const auto& o = *m.dataset.synthetic;
    d["synthetic"] = {{"num_entities", o.num_entities},
                      {"num_relations", o.num_relations},
                      {"num_triples", o.num_triples},
                      {"num_types", o.num_types},
                      {"latent_dim", o.latent_dim},
                      {"range_size", o.range_size},
                      {"popularity_skew", o.popularity_skew},
                      {"temperature", o.temperature},
                      {"offset_scale", o.offset_scale},
                      {"relation_skew", o.relation_skew},
                      {"seed", m.dataset.synthetic_seed.value_or(m.seed)}};
  }
  const auto& t = m.train;
  j["train"] = {
      {"margin", t.margin},
      {"temperature", t.temperature},
      {"num_negatives", t.num_negatives},
      {"learning_rate", t.learning_rate},
      {"local_epochs", t.local_epochs},
      {"batch_size", t.batch_size},
      {"dim", t.dim},
      {"norm", NormName(t.norm)},
      {"corruption", t.corruption == Corruption::kBoth ? "both" : "tail"}};
  j["federation"] = {{"rounds", m.rounds},
                     {"sample_fraction", m.sample_fraction},
                     {"eval_every", m.eval_every},
                     {"patience", m.patience},
                     {"restore_best", m.restore_best}};
  j["eval"] = {{"filtered", m.eval.filtered},
               {"candidates",
                m.eval.scope == CandidateScope::kLocal ? "local" : "global"}};
  j["secure"] = {{"psu", m.secure.psu},
                 {"secagg", m.secure.secagg},
                 {"scale_bits", m.secure.scale_bits},
                 {"max_abs", m.secure.max_abs},
                 {"modulus", FixedPointCodec::kMersenne61}};
  return j.dump(2);
}

}  // namespace fedkge
