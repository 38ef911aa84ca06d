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

#include "fedkge/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "fedkge/errors.h"
#include "json.hpp"

namespace fedkge {
namespace {

constexpr const char* kFormat = "fedkge-checkpoint-v1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void WriteMatrix(std::ofstream& out, const Matrix& m) {
  const auto values = m.values();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void ReadMatrix(std::ifstream& in, Matrix& m, const std::string& path) {
  auto values = m.values();
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw IoError(path + ": truncated checkpoint payload");
}

}  // namespace

void WriteCheckpoint(const std::filesystem::path& path,
                     const EmbeddingTable& table, const CheckpointMeta& meta) {
  nlohmann::ordered_json header;
  header["format"] = kFormat;
  header["model_kind"] = std::string(ModelKindName(table.kind));
  header["norm"] = table.norm == Norm::kL2 ? "L2" : "L1";
  header["num_entities"] = table.entities.rows();
  header["num_relations"] = table.relations.rows();
  header["d_e"] = table.entities.cols();
  header["d_r"] = table.relations.cols();
  header["dim"] = meta.dim;
  header["client_id"] = meta.client_id;
  header["seed"] = meta.seed;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << header.dump() << '\n';
  WriteMatrix(out, table.entities);
  WriteMatrix(out, table.relations);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad checkpoint header: " + e.what(), 1);
  }
  if (header.value("format", "") != kFormat) {
    throw ParseError(path.string() + ": unknown checkpoint format", 1);
  }
  Checkpoint ckpt;
  ckpt.table.kind = ParseModelKind(header.at("model_kind").get<std::string>());
  ckpt.table.norm =
      header.at("norm").get<std::string>() == "L1" ? Norm::kL1 : Norm::kL2;
  ckpt.table.entities = Matrix(header.at("num_entities").get<std::size_t>(),
                               header.at("d_e").get<std::size_t>());
  ckpt.table.relations = Matrix(header.at("num_relations").get<std::size_t>(),
                                header.at("d_r").get<std::size_t>());
  ckpt.meta.dim = header.at("dim").get<int>();
  ckpt.meta.client_id = header.at("client_id").get<int>();
  ckpt.meta.seed = header.at("seed").get<std::uint64_t>();
  ReadMatrix(in, ckpt.table.entities, path.string());
  ReadMatrix(in, ckpt.table.relations, path.string());
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(path.string() + ": trailing bytes after payload");
  }
  return ckpt;
}

}  // namespace fedkge
