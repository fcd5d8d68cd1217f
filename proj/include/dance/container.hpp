/*
 * Copyright 2026 The dance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Binary tensor container. Layout, all integers little-endian:
//
//   "DNCE"            4 bytes magic
//   version           u16 (currently 1)
//   tensor count      u32
//   per tensor:
//     name length     u32, followed by that many bytes of UTF-8 name
//     rank            u8
//     dims            u64 x rank
//     payload         f32 x product(dims)

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dance/tensor.hpp"

namespace dance {

inline constexpr std::array<char, 4> kContainerMagic{'D', 'N', 'C', 'E'};
inline constexpr std::uint16_t kContainerVersion = 1;

class ContainerError : public FormatError {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, malformed };

  ContainerError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

namespace detail {

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

  template <class U>
  U get_le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ContainerError(ContainerError::Kind::truncated, "truncated payload");
  }

  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_container(const std::vector<NamedTensor>& tensors) {
  std::string out(kContainerMagic.begin(), kContainerMagic.end());
  detail::put_le<std::uint16_t>(out, kContainerVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (t.rank() > 255) throw ConfigError("tensor '" + name + "' has rank > 255");
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put_le<std::uint64_t>(out, d);
    for (float v : t.values()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline std::vector<NamedTensor> decode_container(std::string bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic.data(), 4) != 0)
    throw ContainerError(ContainerError::Kind::bad_magic, "not a DNCE container");
  detail::Reader r(std::move(bytes));
  r.get_bytes(4);
  const auto version = r.get_le<std::uint16_t>();
  if (version != kContainerVersion)
    throw ContainerError(ContainerError::Kind::bad_version, "unsupported DNCE version " + std::to_string(version));
  const auto count = r.get_le<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get_le<std::uint32_t>();
    std::string name = r.get_bytes(name_len);
    const auto rank = r.get_le<std::uint8_t>();
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      const auto v = r.get_le<std::uint64_t>();
      if (v == 0) throw ContainerError(ContainerError::Kind::malformed, "tensor '" + name + "' has a zero dimension");
      d = static_cast<std::size_t>(v);
      total *= v;
    }
    if (total > r.remaining() / 4) throw ContainerError(ContainerError::Kind::truncated, "truncated payload");
    std::vector<float> data(static_cast<std::size_t>(total));
    for (auto& v : data) v = std::bit_cast<float>(r.get_le<std::uint32_t>());
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return out;
}

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ContainerError(ContainerError::Kind::io, "cannot write '" + path + "'");
  const std::string bytes = encode_container(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ContainerError(ContainerError::Kind::io, "write failed for '" + path + "'");
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContainerError(ContainerError::Kind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_container(ss.str());
}

/// Lookup by name; throws if absent.
inline const Tensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return t.tensor;
  throw ContainerError(ContainerError::Kind::malformed, "container has no tensor named '" + name + "'");
}

/// Text stored losslessly as one float per byte.
inline Tensor text_to_tensor(const std::string& s) {
  std::vector<float> v(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i) v[i] = static_cast<float>(static_cast<unsigned char>(s[i]));
  if (v.empty()) v.push_back(0.0f);
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

inline std::string tensor_to_text(const Tensor& t) {
  std::string s;
  for (float v : t.values())
    if (v != 0.0f) s.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  return s;
}

}  // namespace dance
