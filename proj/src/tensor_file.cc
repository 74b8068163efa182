// src/tensor_file.cc

// Copyright 2026  The imly Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "imly/tensor_file.h"

#include <cstring>
#include <limits>

#include "imly/error.h"

namespace imly {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError("truncated IMLY container");
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

const Tensor* TensorSet::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Tensor& TensorSet::get(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw DataError("IMLY container has no tensor '" + name + "'");
  return *t;
}

std::vector<std::uint8_t> encode_tensors(const TensorSet& set) {
  std::vector<std::uint8_t> out{'I', 'M', 'L', 'Y'};
  put_le32(out, kTensorFileVersion);
  put_le32(out, static_cast<std::uint32_t>(set.tensors.size()));
  for (const auto& t : set.tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ConfigError("tensor name too long");
    }
    if (t.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
      throw ConfigError("tensor rank too large");
    }
    if (t.element_count() != t.data.size()) {
      throw ConfigError("tensor '" + t.name + "' dims do not match its data");
    }
    put_le16(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put_le32(out, d);
    for (float v : t.data) {
      std::uint32_t raw;
      std::memcpy(&raw, &v, sizeof(raw));
      put_le32(out, raw);
    }
  }
  return out;
}

DecodedTensors decode_tensors(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != "IMLY") throw DataError("not an IMLY container (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kTensorFileVersion) {
    throw DataError("unsupported IMLY version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  DecodedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    t.name = r.str(r.u16());
    const std::uint8_t rank = r.u8();
    for (std::uint8_t d = 0; d < rank; ++d) t.dims.push_back(r.u32());
    const std::size_t n = t.element_count();
    r.need(n * 4);
    t.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t raw = r.u32();
      std::memcpy(&t.data[k], &raw, sizeof(raw));
    }
    out.set.tensors.push_back(std::move(t));
  }
  out.bytes_used = r.pos();
  return out;
}

Tensor matrix_tensor(const std::string& name, const Matrix<double>& m) {
  Tensor t{name,
           {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
           {}};
  t.data.assign(m.data().begin(), m.data().end());
  return t;
}

Tensor vector_tensor(const std::string& name, const std::vector<double>& v) {
  Tensor t{name, {static_cast<std::uint32_t>(v.size())}, {}};
  t.data.assign(v.begin(), v.end());
  return t;
}

Matrix<double> tensor_matrix(const Tensor& t) {
  if (t.dims.size() != 2) throw DataError("tensor '" + t.name + "' is not a matrix");
  Matrix<double> m(t.dims[0], t.dims[1]);
  for (std::size_t i = 0; i < t.data.size(); ++i) m.data()[i] = t.data[i];
  return m;
}

std::vector<double> tensor_vector(const Tensor& t) {
  if (t.dims.size() != 1) throw DataError("tensor '" + t.name + "' is not a vector");
  return std::vector<double>(t.data.begin(), t.data.end());
}

}  // namespace imly
