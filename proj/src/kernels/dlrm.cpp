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

#include "uroce/kernels/dlrm.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "uroce/kernels/cpu.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace uroce::kernels {

bool DlrmParams::moduli_all_pow2() const {
  if (!std::has_single_bit(default_modulus) && moduli.size() < sparse_count) return false;
  for (uint32_t m : moduli) {
    if (!std::has_single_bit(m)) return false;
  }
  return true;
}

bool DlrmParams::valid() const {
  if (dense_count == 0 && sparse_count == 0) return false;
  if (default_modulus == 0 && moduli.size() < sparse_count) return false;
  for (uint32_t m : moduli) {
    if (m == 0) return false;
  }
  return true;
}

namespace {

// Clip matching the vector max-with-zero exactly: NaN and -0.0 both map to +0.0.
inline float clip_zero(float x) { return x > 0.0f ? x : 0.0f; }

inline void transform_word(uint8_t* p, uint32_t word_idx, const DlrmParams& params) {
  if (word_idx < params.dense_count) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    float x = std::log1p(clip_zero(std::bit_cast<float>(bits)));
    bits = std::bit_cast<uint32_t>(x);
    p[0] = static_cast<uint8_t>(bits);
    p[1] = static_cast<uint8_t>(bits >> 8);
    p[2] = static_cast<uint8_t>(bits >> 16);
    p[3] = static_cast<uint8_t>(bits >> 24);
  } else {
    uint32_t v = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                 (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    v %= params.modulus_for(word_idx - params.dense_count);
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
    p[2] = static_cast<uint8_t>(v >> 16);
    p[3] = static_cast<uint8_t>(v >> 24);
  }
}

}  // namespace

void dlrm_transform_scalar(uint8_t* data, size_t len, uint64_t stream_offset,
                           const DlrmParams& params) {
  const size_t rec = params.record_bytes();
  uint32_t word_idx = static_cast<uint32_t>((stream_offset % rec) / 4);
  const uint32_t words_per_rec = params.dense_count + params.sparse_count;
  for (size_t i = 0; i + 4 <= len; i += 4) {
    transform_word(data + i, word_idx, params);
    if (++word_idx == words_per_rec) word_idx = 0;
  }
}

#if defined(__x86_64__) || defined(__i386__)

__attribute__((target("avx2"))) static void transform_record_avx2(uint8_t* rec,
                                                                  const DlrmParams& params,
                                                                  const uint32_t* masks) {
  const __m256 zero = _mm256_setzero_ps();
  uint32_t d = 0;
  for (; d + 8 <= params.dense_count; d += 8) {
    float* p = reinterpret_cast<float*>(rec + 4ull * d);
    _mm256_storeu_ps(p, _mm256_max_ps(_mm256_loadu_ps(p), zero));
  }
  for (; d < params.dense_count; ++d) {
    float* p = reinterpret_cast<float*>(rec + 4ull * d);
    float x;
    std::memcpy(&x, p, 4);
    x = clip_zero(x);
    std::memcpy(p, &x, 4);
  }
  // The logarithm is deliberately the libm scalar call so that every path
  // (vector or not) yields the identical bit pattern.
  for (uint32_t i = 0; i < params.dense_count; ++i) {
    float x;
    std::memcpy(&x, rec + 4ull * i, 4);
    x = std::log1p(x);
    std::memcpy(rec + 4ull * i, &x, 4);
  }
  uint8_t* sp = rec + 4ull * params.dense_count;
  uint32_t s = 0;
  for (; s + 8 <= params.sparse_count; s += 8) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(sp + 4ull * s));
    __m256i m = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(masks + s));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(sp + 4ull * s), _mm256_and_si256(v, m));
  }
  for (; s < params.sparse_count; ++s) {
    uint32_t v;
    std::memcpy(&v, sp + 4ull * s, 4);
    v &= masks[s];
    std::memcpy(sp + 4ull * s, &v, 4);
  }
}

void dlrm_transform_avx2(uint8_t* data, size_t len, uint64_t stream_offset,
                         const DlrmParams& params) {
  const size_t rec = params.record_bytes();
  constexpr uint32_t kMaxSparse = 256;
  if (!params.moduli_all_pow2() || params.sparse_count > kMaxSparse || len < rec) {
    dlrm_transform_scalar(data, len, stream_offset, params);
    return;
  }
  uint32_t masks[kMaxSparse];
  for (uint32_t i = 0; i < params.sparse_count; ++i) masks[i] = params.modulus_for(i) - 1;

  size_t i = 0;
  uint64_t phase = stream_offset % rec;
  if (phase != 0) {
    size_t head = rec - phase;
    if (head > len) head = len;
    dlrm_transform_scalar(data, head, stream_offset, params);
    i = head;
  }
  size_t full = (len - i) / rec;
  for (size_t r = 0; r < full; ++r) transform_record_avx2(data + i + r * rec, params, masks);
  i += full * rec;
  if (i < len) dlrm_transform_scalar(data + i, len - i, stream_offset + i, params);
}

#endif  // x86

void dlrm_transform(uint8_t* data, size_t len, uint64_t stream_offset, const DlrmParams& params) {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.avx2 && !f.force_scalar) {
    dlrm_transform_avx2(data, len, stream_offset, params);
    return;
  }
#endif
  dlrm_transform_scalar(data, len, stream_offset, params);
}

const char* dlrm_backend() {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.avx2 && !f.force_scalar) return "avx2";
#endif
  return "scalar";
}

}  // namespace uroce::kernels
