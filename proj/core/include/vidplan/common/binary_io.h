// Copyright 2026 The vidplan Authors
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

#ifndef VIDPLAN_COMMON_BINARY_IO_H_
#define VIDPLAN_COMMON_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vidplan/common/error.h"

namespace vidplan {

static_assert(std::endian::native == std::endian::little,
              "binary containers are written in host order; little-endian "
              "hosts only");

// Append-only little-endian byte buffer.
class BinaryWriter {
 public:
  template <typename T>
  void Put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&value);
    buffer_.append(p, sizeof(T));
  }

  void PutString(std::string_view s) {
    Put<uint32_t>(static_cast<uint32_t>(s.size()));
    buffer_.append(s.data(), s.size());
  }

  void PutBytes(std::string_view s) { buffer_.append(s.data(), s.size()); }

  void PutDoubles(std::span<const double> values) {
    Put<uint64_t>(values.size());
    buffer_.append(reinterpret_cast<const char*>(values.data()),
                   values.size() * sizeof(double));
  }

  const std::string& bytes() const { return buffer_; }
  std::string&& Release() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Bounds-checked reader; every overrun is a FormatError.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    static_assert(std::is_trivially_copyable_v<T>);
    Require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string GetString() {
    const auto n = Get<uint32_t>();
    Require(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view GetBytes(size_t n) {
    Require(n);
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::vector<double> GetDoubles() {
    const auto n = Get<uint64_t>();
    if (n > (bytes_.size() - pos_) / sizeof(double)) {
      throw FormatError("truncated double block");
    }
    std::vector<double> values(n);
    std::memcpy(values.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return values;
  }

  size_t position() const { return pos_; }
  size_t remaining() const { return bytes_.size() - pos_; }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Require(size_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError("unexpected end of data");
  }

  std::string_view bytes_;
  size_t pos_ = 0;
};

uint32_t Crc32(std::string_view bytes);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits by HexDigest.
uint64_t Fnv1a64(std::string_view bytes);
std::string HexDigest(uint64_t value);

std::string ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path, std::string_view bytes);

}  // namespace vidplan

#endif  // VIDPLAN_COMMON_BINARY_IO_H_
