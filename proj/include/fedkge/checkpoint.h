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

#ifndef FEDKGE_CHECKPOINT_H_
#define FEDKGE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>

#include "fedkge/model.h"

namespace fedkge {

struct CheckpointMeta {
  int client_id = -1;
  int dim = 0;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  EmbeddingTable table;
  CheckpointMeta meta;
};

// One JSON header line followed by the entity matrix and then the relation
// matrix as raw little-endian IEEE-754 doubles, row-major.
void WriteCheckpoint(const std::filesystem::path& path,
                     const EmbeddingTable& table, const CheckpointMeta& meta);
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

}  // namespace fedkge

#endif  // FEDKGE_CHECKPOINT_H_
