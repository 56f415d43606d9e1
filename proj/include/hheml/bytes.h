/*
 * Copyright 2026 The hheml Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Little-endian byte buffers for the wire formats.

#ifndef HHEML_BYTES_H_
#define HHEML_BYTES_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hheml/errors.h"

namespace hheml {

using Bytes = std::vector<uint8_t>;

class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(size_t reserve) { out_.reserve(reserve); }

  void u8(uint8_t v) { out_.push_back(v); }
  void le(uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(uint8_t(v >> (8 * i)));
  }
  void u16(uint16_t v) { le(v, 2); }
  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void raw(std::span<const uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  // u32 length prefix followed by the bytes.
  void blob(std::span<const uint8_t> b) {
    u32(uint32_t(b.size()));
    raw(b);
  }
  void words(std::span<const uint64_t> w) {
    const size_t at = out_.size();
    out_.resize(at + 8 * w.size());
    uint8_t* p = out_.data() + at;
    for (uint64_t v : w) {
      for (int i = 0; i < 8; ++i) *p++ = uint8_t(v >> (8 * i));
    }
  }

  size_t size() const { return out_.size(); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Reads fail with kParseError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}

  uint8_t u8() { return uint8_t(le(1)); }
  uint16_t u16() { return uint16_t(le(2)); }
  uint32_t u32() { return uint32_t(le(4)); }
  uint64_t u64() { return le(8); }
  uint64_t le(int width) {
    need(size_t(width));
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= uint64_t(in_[pos_ + i]) << (8 * i);
    pos_ += size_t(width);
    return v;
  }
  std::span<const uint8_t> raw(size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::span<const uint8_t> blob() { return raw(u32()); }
  void words(std::span<uint64_t> out) {
    auto s = raw(8 * out.size());
    const uint8_t* p = s.data();
    for (auto& v : out) {
      v = 0;
      for (int i = 0; i < 8; ++i) v |= uint64_t(*p++) << (8 * i);
    }
  }

  size_t remaining() const { return in_.size() - pos_; }
  size_t position() const { return pos_; }
  void expect_end() const {
    if (pos_ != in_.size()) fail(ErrorCode::kParseError, "trailing bytes");
  }

 private:
  void need(size_t n) const {
    if (in_.size() - pos_ < n) fail(ErrorCode::kParseError, "truncated input");
  }

  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

}  // namespace hheml

#endif  // HHEML_BYTES_H_
