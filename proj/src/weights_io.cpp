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

#include "edgerank/weights_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace edgerank::features {

void to_json(Json& j, const FeatureConfig& c) {
  j = Json{{"history_max_len", c.history_max_len},
           {"ordered_max_len", c.ordered_max_len},
           {"category_vocab", c.category_vocab},
           {"duration_buckets", c.duration_buckets},
           {"autodis_buckets", c.autodis_buckets},
           {"autodis_temperature", c.autodis_temperature},
           {"autodis_skip_alpha", c.autodis_skip_alpha},
           {"autodis_leaky_slope", c.autodis_leaky_slope},
           {"scalar_embed_dim", c.scalar_embed_dim},
           {"category_embed_dim", c.category_embed_dim},
           {"feedback_embed_dim", c.feedback_embed_dim}};
}

void from_json(const Json& j, FeatureConfig& c) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("history_max_len", c.history_max_len);
  get("ordered_max_len", c.ordered_max_len);
  get("category_vocab", c.category_vocab);
  get("duration_buckets", c.duration_buckets);
  get("autodis_buckets", c.autodis_buckets);
  get("autodis_temperature", c.autodis_temperature);
  get("autodis_skip_alpha", c.autodis_skip_alpha);
  get("autodis_leaky_slope", c.autodis_leaky_slope);
  get("scalar_embed_dim", c.scalar_embed_dim);
  get("category_embed_dim", c.category_embed_dim);
  get("feedback_embed_dim", c.feedback_embed_dim);
}

}  // namespace edgerank::features

namespace edgerank::model {

static_assert(std::endian::native == std::endian::little,
              "weights format is little-endian; add byte swapping for this target");

namespace {

constexpr char kMagic[8] = {'E', 'R', 'N', 'K', 'W', 'T', 'S', '\0'};
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::size_t kDigestBytes = 32;

class Writer {
 public:
  template <class V>
  void put(V v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes.insert(bytes.end(), p, p + sizeof(V));
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <class V>
  V get() {
    V v;
    std::memcpy(&v, take(sizeof(V)), sizeof(V));
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw ModelFormatError("weights file truncated");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct DirEntry {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t nbytes = 0;
};

std::vector<std::uint8_t> sha256(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> out(kDigestBytes);
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != kDigestBytes) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 15]);
  }
  return s;
}

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"features", c.features},       {"heads", c.heads},
           {"head_dim", c.head_dim},       {"experts", c.experts},
           {"expert_hidden", c.expert_hidden}, {"tower_dims", c.tower_dims},
           {"loss_weights", c.loss_weights},   {"use_history", c.use_history}};
}

void from_json(const Json& j, ModelConfig& c) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("features", c.features);
  get("heads", c.heads);
  get("head_dim", c.head_dim);
  get("experts", c.experts);
  get("expert_hidden", c.expert_hidden);
  get("tower_dims", c.tower_dims);
  get("loss_weights", c.loss_weights);
  get("use_history", c.use_history);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) { return to_hex(sha256(bytes)); }

std::vector<std::uint8_t> encode_weights(const ModelParams<float>& params, const Json& metadata,
                                         std::span<const NamedTensor> extra) {
  Json meta = metadata.is_null() ? Json::object() : metadata;
  meta["model_config"] = params.config;

  std::vector<DirEntry> dir;
  std::uint64_t offset = 0;
  for (const TensorInfo& t : params.layout.tensors) {
    dir.push_back({t.name,
                   {static_cast<std::uint32_t>(t.rows), static_cast<std::uint32_t>(t.cols)},
                   offset,
                   t.size() * sizeof(float)});
    offset += t.size() * sizeof(float);
  }
  for (const NamedTensor& t : extra) {
    dir.push_back({t.name, t.shape, offset, t.values.size() * sizeof(float)});
    offset += t.values.size() * sizeof(float);
  }

  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put(kWeightsFormatVersion);
  w.put_string(features::kSchemaVersion);
  w.put_string(meta.dump());
  w.put(static_cast<std::uint32_t>(dir.size()));
  for (const DirEntry& e : dir) {
    w.put_string(e.name);
    w.put(kDtypeF32);
    w.put(static_cast<std::uint8_t>(e.shape.size()));
    for (auto d : e.shape) w.put(d);
    w.put(e.offset);
    w.put(e.nbytes);
  }
  w.put(offset);
  w.put_raw(params.data.data(), params.data.size() * sizeof(float));
  for (const NamedTensor& t : extra) w.put_raw(t.values.data(), t.values.size() * sizeof(float));
  const auto digest = sha256(w.bytes);
  w.put_raw(digest.data(), digest.size());
  return std::move(w.bytes);
}

WeightsFile decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + kDigestBytes ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    // A corrupted magic is still a digest failure when the trailer disagrees.
    if (bytes.size() >= kDigestBytes) {
      const auto body = bytes.first(bytes.size() - kDigestBytes);
      if (sha256(body) != std::vector<std::uint8_t>(bytes.end() - kDigestBytes, bytes.end())) {
        throw DigestMismatch("model corrupt/outdated: digest mismatch");
      }
    }
    throw ModelFormatError("not an edgerank weights file");
  }
  const auto body = bytes.first(bytes.size() - kDigestBytes);
  const auto trailer = bytes.last(kDigestBytes);
  const auto digest = sha256(body);
  if (!std::equal(digest.begin(), digest.end(), trailer.begin())) {
    throw DigestMismatch("model corrupt/outdated: digest mismatch");
  }

  Reader r(body);
  r.take(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightsFormatVersion) {
    throw ModelFormatError("unsupported weights format version " + std::to_string(version));
  }
  WeightsFile out;
  out.digest_hex = to_hex(digest);
  out.schema_version = r.get_string();
  if (out.schema_version != features::kSchemaVersion) {
    throw ModelFormatError("model corrupt/outdated: schema '" + out.schema_version +
                           "', expected '" + features::kSchemaVersion + "'");
  }
  out.metadata = Json::parse(r.get_string());
  const auto count = r.get<std::uint32_t>();
  std::vector<DirEntry> dir(count);
  for (auto& e : dir) {
    e.name = r.get_string();
    if (r.get<std::uint8_t>() != kDtypeF32) throw ModelFormatError("unsupported dtype");
    const auto ndim = r.get<std::uint8_t>();
    for (int d = 0; d < ndim; ++d) e.shape.push_back(r.get<std::uint32_t>());
    e.offset = r.get<std::uint64_t>();
    e.nbytes = r.get<std::uint64_t>();
  }
  const auto data_len = r.get<std::uint64_t>();
  const std::uint8_t* data = r.take(data_len);

  const auto config = out.metadata.at("model_config").get<ModelConfig>();
  config.validate();
  out.params.config = config;
  out.params.layout = ParamLayout::build(config);
  out.params.data.assign(out.params.layout.total, 0.0f);
  const auto& tensors = out.params.layout.tensors;
  if (dir.size() < tensors.size()) throw ModelFormatError("tensor directory too short");
  for (std::size_t i = 0; i < dir.size(); ++i) {
    const DirEntry& e = dir[i];
    if (e.offset + e.nbytes > data_len) throw ModelFormatError("tensor data out of range");
    if (i < tensors.size()) {
      const TensorInfo& t = tensors[i];
      if (e.name != t.name || e.shape.size() != 2 || e.shape[0] != static_cast<std::uint32_t>(t.rows) ||
          e.shape[1] != static_cast<std::uint32_t>(t.cols) || e.nbytes != t.size() * sizeof(float)) {
        throw ModelFormatError("tensor '" + e.name + "' does not match the model layout");
      }
      std::memcpy(out.params.data.data() + t.offset, data + e.offset, e.nbytes);
    } else {
      NamedTensor extra{e.name, e.shape, std::vector<float>(e.nbytes / sizeof(float))};
      std::memcpy(extra.values.data(), data + e.offset, e.nbytes);
      out.extra.push_back(std::move(extra));
    }
  }
  return out;
}

std::string save(const ModelParams<float>& params, const std::string& path, const Json& metadata,
                 std::span<const NamedTensor> extra) {
  const auto bytes = encode_weights(params, metadata, extra);
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return to_hex(std::span(bytes).last(kDigestBytes));
}

WeightsFile load_file(const std::string& path) {
  const auto bytes = read_all(path);
  return decode_weights(bytes);
}

ModelParams<float> load(const std::string& path) { return load_file(path).params; }

std::string file_digest(const std::string& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < kDigestBytes) return {};
  return to_hex(std::span(bytes).last(kDigestBytes));
}

ModelRegistry::ModelRegistry(std::string current_model_path) : path_(std::move(current_model_path)) {
  digest_ = load_file(path_).digest_hex;
}

UpdateDecision ModelRegistry::check(const std::string& client_digest) const {
  return {client_digest != digest_, digest_};
}

ModelParams<float> ModelRegistry::ensure_current(const std::string& local_path) const {
  std::string local_digest;
  if (std::filesystem::exists(local_path)) local_digest = file_digest(local_path);
  if (!check(local_digest).update_required) {
    try {
      return load(local_path);
    } catch (const ModelFormatError&) {
      // Trailer matched but the body did not: fall through to re-download.
    }
  }
  std::filesystem::copy_file(path_, local_path, std::filesystem::copy_options::overwrite_existing);
  return load(local_path);
}

}  // namespace edgerank::model
