// Copyright 2026 The uRoCE Authors
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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace uroce::kernels {

// Fixed-width recommender-model records: `dense_count` little-endian f32
// features followed by `sparse_count` little-endian u32 features. Dense
// features map through ln(1 + max(x, 0)); sparse features map through
// v mod N per column.
struct DlrmParams {
  uint32_t dense_count = 13;
  uint32_t sparse_count = 26;
  std::vector<uint32_t> moduli;  // one per sparse column; empty = all default_modulus
  uint32_t default_modulus = 1u << 20;

  size_t record_bytes() const { return 4ull * (dense_count + sparse_count); }
  uint32_t modulus_for(uint32_t sparse_col) const {
    return sparse_col < moduli.size() ? moduli[sparse_col] : default_modulus;
  }
  bool moduli_all_pow2() const;
  bool valid() const;  // counts >= 1 and no zero modulus
};

// Transforms `len` bytes in place. `stream_offset` is the byte position of
// data[0] within the record stream, so a chunk may start or end mid-record;
// both values must be 4-byte aligned. Chunking never changes the result.
void dlrm_transform_scalar(uint8_t* data, size_t len, uint64_t stream_offset,
                           const DlrmParams& params);

#if defined(__x86_64__) || defined(__i386__)
void dlrm_transform_avx2(uint8_t* data, size_t len, uint64_t stream_offset,
                         const DlrmParams& params);
#endif

void dlrm_transform(uint8_t* data, size_t len, uint64_t stream_offset, const DlrmParams& params);

const char* dlrm_backend();

}  // namespace uroce::kernels
