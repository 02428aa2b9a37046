/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "bandflow/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "bandflow/common.hpp"

namespace bandflow {
namespace {

constexpr char kMagic[8] = {'B', 'F', 'C', 'K', 'P', 'T', '0', '1'};
constexpr uint32_t kVersion = 1;

void put(std::ofstream& f, const void* p, size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put_pod(std::ofstream& f, T v) {
  put(f, &v, sizeof(v));
}

void take(std::ifstream& f, void* p, size_t n, const char* what) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(f.gcount()) != n) {
    throw DataError(std::string("truncated checkpoint while reading ") + what);
  }
}

template <typename T>
T take_pod(std::ifstream& f, const char* what) {
  T v;
  take(f, &v, sizeof(v), what);
  return v;
}

void write_tensor_data(std::ofstream& f, const Tensor& t) {
  put(f, t.data(), sizeof(double) * static_cast<size_t>(t.numel()));
}

Tensor read_tensor_data(std::ifstream& f, const std::vector<int>& shape) {
  Tensor t(shape);
  take(f, t.data(), sizeof(double) * static_cast<size_t>(t.numel()),
       "tensor data");
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, long step,
                     const AdamState* opt) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open checkpoint for write: " + tmp);
    put(f, kMagic, sizeof(kMagic));
    put_pod(f, kVersion);
    put_pod(f, static_cast<uint64_t>(step));
    const std::string cfg = config_to_json(model.config());
    put_pod(f, static_cast<uint64_t>(cfg.size()));
    put(f, cfg.data(), cfg.size());
    put_pod(f, static_cast<uint32_t>(opt != nullptr ? 1 : 0));
    const auto& items = model.store().items();
    put_pod(f, static_cast<uint64_t>(items.size()));
    for (const auto& [name, var] : items) {
      put_pod(f, static_cast<uint32_t>(name.size()));
      put(f, name.data(), name.size());
      put_pod(f, static_cast<uint32_t>(var->value.rank()));
      for (int d : var->value.shape()) put_pod(f, static_cast<int32_t>(d));
      write_tensor_data(f, var->value);
    }
    if (opt != nullptr) {
      if (opt->m.size() != items.size() || opt->v.size() != items.size()) {
        throw std::invalid_argument(
            "save_checkpoint: optimizer state size mismatch");
      }
      put_pod(f, static_cast<uint64_t>(opt->t));
      for (size_t i = 0; i < items.size(); ++i) {
        write_tensor_data(f, opt->m[i]);
        write_tensor_data(f, opt->v[i]);
      }
    }
    if (!f) throw DataError("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move checkpoint into place: " + path);
  }
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  take(f, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  const auto version = take_pod<uint32_t>(f, "version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  }
  CheckpointData data;
  data.step = static_cast<long>(take_pod<uint64_t>(f, "step"));
  const auto cfg_len = take_pod<uint64_t>(f, "config length");
  std::string cfg(cfg_len, '\0');
  take(f, cfg.data(), cfg_len, "config");
  data.config = config_from_json(cfg);
  data.has_opt = take_pod<uint32_t>(f, "optimizer flag") != 0;
  const auto n = take_pod<uint64_t>(f, "parameter count");
  data.params.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    const auto name_len = take_pod<uint32_t>(f, "name length");
    std::string name(name_len, '\0');
    take(f, name.data(), name_len, "name");
    const auto rank = take_pod<uint32_t>(f, "rank");
    if (rank == 0 || rank > 4) {
      throw DataError("checkpoint tensor has invalid rank " +
                      std::to_string(rank));
    }
    std::vector<int> shape(rank);
    for (auto& d : shape) {
      d = take_pod<int32_t>(f, "dim");
      if (d <= 0) throw DataError("checkpoint tensor has invalid dim");
    }
    data.params.emplace_back(std::move(name), read_tensor_data(f, shape));
  }
  if (data.has_opt) {
    data.opt.t = static_cast<long>(take_pod<uint64_t>(f, "adam t"));
    data.opt.m.reserve(n);
    data.opt.v.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
      const auto& shape = data.params[i].second.shape();
      data.opt.m.push_back(read_tensor_data(f, shape));
      data.opt.v.push_back(read_tensor_data(f, shape));
    }
  }
  return data;
}

std::unique_ptr<Model> model_from_checkpoint(const CheckpointData& data) {
  auto model = std::make_unique<Model>(data.config, /*seed=*/0);
  const auto& items = model->store().items();
  if (items.size() != data.params.size()) {
    throw DataError("checkpoint has " + std::to_string(data.params.size()) +
                    " parameters, model expects " +
                    std::to_string(items.size()));
  }
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& [name, var] = items[i];
    const auto& [ck_name, ck_value] = data.params[i];
    if (name != ck_name) {
      throw DataError("checkpoint parameter order mismatch: expected " + name +
                      ", found " + ck_name);
    }
    if (!var->value.same_shape(ck_value)) {
      throw DataError("checkpoint shape mismatch for " + name + ": " +
                      ck_value.shape_str() + " vs " + var->value.shape_str());
    }
    var->value = ck_value;
  }
  return model;
}

}  // namespace bandflow
