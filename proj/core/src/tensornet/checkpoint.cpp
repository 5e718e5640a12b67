// Copyright 2026 The disco Authors
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

#include "disco/tensornet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <type_traits>

namespace disco::tensornet {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'W'};
constexpr std::uint32_t kVersion = 1;

// The project targets little-endian hosts only; numeric fields are written
// in host order.
template <typename V>
void put(std::ofstream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V get(std::ifstream& in) {
  V value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(V));
  if (!in) raise(Errc::FormatError, "truncated checkpoint");
  return value;
}

template <typename T>
constexpr std::uint8_t dtype_tag() {
  return std::is_same_v<T, float> ? 0 : 1;
}

}  // namespace

template <typename T>
void save_tensors(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoError, "cannot open " + path + " for writing");
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, dtype_tag<T>());
    put(out, static_cast<std::uint32_t>(tensor->shape.size()));
    for (std::int64_t d : tensor->shape) put(out, d);
    out.write(reinterpret_cast<const char*>(tensor->values.data()),
              static_cast<std::streamsize>(tensor->values.size() * sizeof(T)));
  }
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

template <typename T>
std::map<std::string, Tensor<T>> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoError, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    raise(Errc::FormatError, "bad checkpoint magic");
  if (get<std::uint32_t>(in) != kVersion)
    raise(Errc::FormatError, "unsupported checkpoint version");
  const std::uint32_t count = get<std::uint32_t>(in);

  std::map<std::string, Tensor<T>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get<std::uint32_t>(in);
    if (name_len > 4096) raise(Errc::FormatError, "implausible tensor name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) raise(Errc::FormatError, "truncated checkpoint");
    if (get<std::uint8_t>(in) != dtype_tag<T>())
      raise(Errc::FormatError, "checkpoint dtype mismatch");
    const std::uint32_t rank = get<std::uint32_t>(in);
    if (rank > 8) raise(Errc::FormatError, "implausible tensor rank");
    std::vector<std::int64_t> shape(rank);
    for (auto& d : shape) {
      d = get<std::int64_t>(in);
      if (d <= 0) raise(Errc::FormatError, "non-positive extent in checkpoint");
    }
    Tensor<T> t(shape);
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(T)));
    if (!in) raise(Errc::FormatError, "truncated checkpoint");
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

template void save_tensors<float>(
    const std::string&,
    const std::vector<std::pair<std::string, const Tensor<float>*>>&);
template void save_tensors<double>(
    const std::string&,
    const std::vector<std::pair<std::string, const Tensor<double>*>>&);
template std::map<std::string, Tensor<float>> load_tensors<float>(
    const std::string&);
template std::map<std::string, Tensor<double>> load_tensors<double>(
    const std::string&);

}  // namespace disco::tensornet
