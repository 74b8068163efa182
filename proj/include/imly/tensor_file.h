// include/imly/tensor_file.h

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

#ifndef IMLY_TENSOR_FILE_H_
#define IMLY_TENSOR_FILE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imly/matrix.h"

namespace imly {

// IMLY container layout (all integers little-endian):
//   "IMLY" | u32 version | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 rank | u32 dims[rank]
//               | float32 data, row-major
// Readers report how many bytes the container used so callers can append
// their own blocks after it.

inline constexpr std::uint32_t kTensorFileVersion = 1;

struct Tensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
};

struct TensorSet {
  std::vector<Tensor> tensors;

  const Tensor* find(const std::string& name) const;
  /// Throws DataError if missing.
  const Tensor& get(const std::string& name) const;
};

std::vector<std::uint8_t> encode_tensors(const TensorSet& set);

struct DecodedTensors {
  TensorSet set;
  std::size_t bytes_used = 0;
};

/// Throws DataError on bad magic, unknown version, or truncation.
DecodedTensors decode_tensors(std::span<const std::uint8_t> bytes);

Tensor matrix_tensor(const std::string& name, const Matrix<double>& m);
Tensor vector_tensor(const std::string& name, const std::vector<double>& v);
Matrix<double> tensor_matrix(const Tensor& t);
std::vector<double> tensor_vector(const Tensor& t);

void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v);

}  // namespace imly

#endif  // IMLY_TENSOR_FILE_H_
