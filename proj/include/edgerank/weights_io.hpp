// Copyright 2026 The EdgeRank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgerank/json_io.hpp"
#include "edgerank/model.hpp"

// Portable weights file:
//
//   magic "ERNKWTS\0" | u32 format version | schema string | metadata json |
//   tensor directory (name, dtype, shape, offset, nbytes) | raw little-endian
//   tensor data | SHA-256 of every preceding byte.
//
// Strings are u32-length-prefixed. The metadata carries the ModelConfig so the
// parameter layout can be rebuilt and checked against the directory.
namespace edgerank::features {

void to_json(Json& j, const FeatureConfig& c);
void from_json(const Json& j, FeatureConfig& c);

}  // namespace edgerank::features

namespace edgerank::model {

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

class ModelFormatError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// The file does not match its digest: corrupt or partially downloaded.
class DigestMismatch : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

void to_json(Json& j, const ModelConfig& c);
void from_json(const Json& j, ModelConfig& c);

// Extra float tensors stored next to the parameters (optimizer state).
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> values;
};

struct WeightsFile {
  std::string schema_version;
  Json metadata;
  ModelParams<float> params;
  std::vector<NamedTensor> extra;
  std::string digest_hex;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_weights(const ModelParams<float>& params, const Json& metadata = {},
                                         std::span<const NamedTensor> extra = {});
WeightsFile decode_weights(std::span<const std::uint8_t> bytes);

// Returns the digest (hex) of the written file.
std::string save(const ModelParams<float>& params, const std::string& path,
                 const Json& metadata = {}, std::span<const NamedTensor> extra = {});
WeightsFile load_file(const std::string& path);
ModelParams<float> load(const std::string& path);

// Digest of a file on disk as recorded in its trailer (no verification).
std::string file_digest(const std::string& path);

// Server-side view of the current model: the client reports the digest of its
// local file and is told whether to download a new one.
struct UpdateDecision {
  bool update_required = false;
  std::string current_digest;
};

class ModelRegistry {
 public:
  explicit ModelRegistry(std::string current_model_path);

  UpdateDecision check(const std::string& client_digest) const;
  const std::string& digest() const { return digest_; }
  const std::string& path() const { return path_; }

  // Loads the client's local copy, replacing it from the registry when it is
  // missing, corrupt or outdated. Returns the verified parameters.
  ModelParams<float> ensure_current(const std::string& local_path) const;

 private:
  std::string path_;
  std::string digest_;
};

}  // namespace edgerank::model
