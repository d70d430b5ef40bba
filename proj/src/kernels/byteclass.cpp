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

#include "uroce/kernels/byteclass.hpp"

#include "uroce/kernels/cpu.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace uroce::kernels {

static inline bool is_text_byte(uint8_t b) {
  return (b >= 0x20 && b <= 0x7e) || b == '\t' || b == '\n' || b == '\r';
}

ByteClassCounts byteclass_count_scalar(const uint8_t* data, size_t len) {
  ByteClassCounts c;
  c.total = len;
  for (size_t i = 0; i < len; ++i) c.text += is_text_byte(data[i]) ? 1 : 0;
  return c;
}

#if defined(__x86_64__) || defined(__i386__)

__attribute__((target("avx2"))) ByteClassCounts byteclass_count_avx2(const uint8_t* data,
                                                                     size_t len) {
  ByteClassCounts c;
  c.total = len;
  // Signed-compare trick: x - 0x20 in [0, 0x5e] <=> printable ASCII.
  const __m256i bias = _mm256_set1_epi8(static_cast<char>(0x80));
  const __m256i lo = _mm256_set1_epi8(static_cast<char>(0x20 - 0x80 - 1));
  const __m256i hi = _mm256_set1_epi8(static_cast<char>(0x7e - 0x80 + 1));
  const __m256i tab = _mm256_set1_epi8('\t');
  const __m256i nl = _mm256_set1_epi8('\n');
  const __m256i cr = _mm256_set1_epi8('\r');
  size_t i = 0;
  uint64_t text = 0;
  for (; i + 32 <= len; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
    __m256i vb = _mm256_xor_si256(v, bias);
    __m256i printable =
        _mm256_and_si256(_mm256_cmpgt_epi8(vb, lo), _mm256_cmpgt_epi8(hi, vb));
    __m256i ws = _mm256_or_si256(_mm256_or_si256(_mm256_cmpeq_epi8(v, tab), _mm256_cmpeq_epi8(v, nl)),
                                 _mm256_cmpeq_epi8(v, cr));
    uint32_t mask = static_cast<uint32_t>(_mm256_movemask_epi8(_mm256_or_si256(printable, ws)));
    text += __builtin_popcount(mask);
  }
  for (; i < len; ++i) text += is_text_byte(data[i]) ? 1 : 0;
  c.text = text;
  return c;
}

#endif  // x86

ByteClassCounts byteclass_count(const uint8_t* data, size_t len) {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.avx2 && !f.force_scalar) return byteclass_count_avx2(data, len);
#endif
  return byteclass_count_scalar(data, len);
}

}  // namespace uroce::kernels
