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

#include "uroce/kernels/aes128.hpp"

#include <cstring>

#include "uroce/kernels/cpu.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace uroce::kernels {

namespace {

constexpr uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16};

// Inverse S-box is derived from kSbox at startup; one table to proofread.
struct InvSbox {
  uint8_t t[256];
  InvSbox() {
    for (int i = 0; i < 256; ++i) t[kSbox[i]] = static_cast<uint8_t>(i);
  }
};
const InvSbox kInvSbox;

inline uint8_t xtime(uint8_t x) {
  return static_cast<uint8_t>((x << 1) ^ ((x & 0x80) ? 0x1b : 0x00));
}

inline uint8_t gmul(uint8_t a, uint8_t b) {
  uint8_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    a = xtime(a);
    b >>= 1;
  }
  return r;
}

void mix_columns(uint8_t s[16]) {
  for (int c = 0; c < 4; ++c) {
    uint8_t* col = s + 4 * c;
    uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = static_cast<uint8_t>(xtime(a0) ^ (xtime(a1) ^ a1) ^ a2 ^ a3);
    col[1] = static_cast<uint8_t>(a0 ^ xtime(a1) ^ (xtime(a2) ^ a2) ^ a3);
    col[2] = static_cast<uint8_t>(a0 ^ a1 ^ xtime(a2) ^ (xtime(a3) ^ a3));
    col[3] = static_cast<uint8_t>((xtime(a0) ^ a0) ^ a1 ^ a2 ^ xtime(a3));
  }
}

void inv_mix_columns(uint8_t s[16]) {
  for (int c = 0; c < 4; ++c) {
    uint8_t* col = s + 4 * c;
    uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
    col[0] = gmul(a0, 0x0e) ^ gmul(a1, 0x0b) ^ gmul(a2, 0x0d) ^ gmul(a3, 0x09);
    col[1] = gmul(a0, 0x09) ^ gmul(a1, 0x0e) ^ gmul(a2, 0x0b) ^ gmul(a3, 0x0d);
    col[2] = gmul(a0, 0x0d) ^ gmul(a1, 0x09) ^ gmul(a2, 0x0e) ^ gmul(a3, 0x0b);
    col[3] = gmul(a0, 0x0b) ^ gmul(a1, 0x0d) ^ gmul(a2, 0x09) ^ gmul(a3, 0x0e);
  }
}

void shift_rows(uint8_t s[16]) {
  // State is column-major: s[4*c + r].
  uint8_t tmp;
  tmp = s[1];
  s[1] = s[5];
  s[5] = s[9];
  s[9] = s[13];
  s[13] = tmp;
  std::swap(s[2], s[10]);
  std::swap(s[6], s[14]);
  tmp = s[15];
  s[15] = s[11];
  s[11] = s[7];
  s[7] = s[3];
  s[3] = tmp;
}

void inv_shift_rows(uint8_t s[16]) {
  uint8_t tmp;
  tmp = s[13];
  s[13] = s[9];
  s[9] = s[5];
  s[5] = s[1];
  s[1] = tmp;
  std::swap(s[2], s[10]);
  std::swap(s[6], s[14]);
  tmp = s[3];
  s[3] = s[7];
  s[7] = s[11];
  s[11] = s[15];
  s[15] = tmp;
}

inline void add_round_key(uint8_t s[16], const uint8_t rk[16]) {
  for (int i = 0; i < 16; ++i) s[i] ^= rk[i];
}

void encrypt_block_scalar(const Aes128Schedule& ks, const uint8_t in[16], uint8_t out[16]) {
  uint8_t s[16];
  std::memcpy(s, in, 16);
  add_round_key(s, ks.enc[0].data());
  for (int round = 1; round <= 9; ++round) {
    for (int i = 0; i < 16; ++i) s[i] = kSbox[s[i]];
    shift_rows(s);
    mix_columns(s);
    add_round_key(s, ks.enc[round].data());
  }
  for (int i = 0; i < 16; ++i) s[i] = kSbox[s[i]];
  shift_rows(s);
  add_round_key(s, ks.enc[10].data());
  std::memcpy(out, s, 16);
}

void decrypt_block_scalar(const Aes128Schedule& ks, const uint8_t in[16], uint8_t out[16]) {
  uint8_t s[16];
  std::memcpy(s, in, 16);
  add_round_key(s, ks.enc[10].data());
  for (int round = 9; round >= 1; --round) {
    inv_shift_rows(s);
    for (int i = 0; i < 16; ++i) s[i] = kInvSbox.t[s[i]];
    add_round_key(s, ks.enc[round].data());
    inv_mix_columns(s);
  }
  inv_shift_rows(s);
  for (int i = 0; i < 16; ++i) s[i] = kInvSbox.t[s[i]];
  add_round_key(s, ks.enc[0].data());
  std::memcpy(out, s, 16);
}

}  // namespace

Aes128Schedule aes128_expand(const uint8_t key[16]) {
  Aes128Schedule ks;
  uint8_t w[176];
  std::memcpy(w, key, 16);
  uint8_t rcon = 0x01;
  for (int i = 16; i < 176; i += 4) {
    uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
    if (i % 16 == 0) {
      uint8_t first = t[0];
      t[0] = static_cast<uint8_t>(kSbox[t[1]] ^ rcon);
      t[1] = kSbox[t[2]];
      t[2] = kSbox[t[3]];
      t[3] = kSbox[first];
      rcon = xtime(rcon);
    }
    for (int k = 0; k < 4; ++k) w[i + k] = w[i - 16 + k] ^ t[k];
  }
  for (int r = 0; r < 11; ++r) std::memcpy(ks.enc[r].data(), w + 16 * r, 16);
  // InvMixColumns of the interior round keys, consumed by the AES-NI
  // equivalent inverse cipher.
  ks.dec[0] = ks.enc[0];
  ks.dec[10] = ks.enc[10];
  for (int r = 1; r <= 9; ++r) {
    ks.dec[r] = ks.enc[r];
    inv_mix_columns(ks.dec[r].data());
  }
  return ks;
}

void aes128_ecb_encrypt_scalar(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                               size_t blocks) {
  for (size_t b = 0; b < blocks; ++b) encrypt_block_scalar(ks, in + 16 * b, out + 16 * b);
}

void aes128_ecb_decrypt_scalar(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                               size_t blocks) {
  for (size_t b = 0; b < blocks; ++b) decrypt_block_scalar(ks, in + 16 * b, out + 16 * b);
}

#if defined(__x86_64__) || defined(__i386__)

__attribute__((target("aes,sse2"))) void aes128_ecb_encrypt_aesni(const Aes128Schedule& ks,
                                                                  const uint8_t* in, uint8_t* out,
                                                                  size_t blocks) {
  __m128i rk[11];
  for (int r = 0; r < 11; ++r)
    rk[r] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(ks.enc[r].data()));
  for (size_t b = 0; b < blocks; ++b) {
    __m128i s = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + 16 * b));
    s = _mm_xor_si128(s, rk[0]);
    for (int r = 1; r <= 9; ++r) s = _mm_aesenc_si128(s, rk[r]);
    s = _mm_aesenclast_si128(s, rk[10]);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 16 * b), s);
  }
}

__attribute__((target("aes,sse2"))) void aes128_ecb_decrypt_aesni(const Aes128Schedule& ks,
                                                                  const uint8_t* in, uint8_t* out,
                                                                  size_t blocks) {
  __m128i rk[11];
  for (int r = 0; r < 11; ++r)
    rk[r] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(ks.dec[r].data()));
  for (size_t b = 0; b < blocks; ++b) {
    __m128i s = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + 16 * b));
    s = _mm_xor_si128(s, rk[10]);
    for (int r = 9; r >= 1; --r) s = _mm_aesdec_si128(s, rk[r]);
    s = _mm_aesdeclast_si128(s, rk[0]);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 16 * b), s);
  }
}

#endif  // x86

void aes128_ecb_encrypt(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out, size_t blocks) {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.aesni && !f.force_scalar) {
    aes128_ecb_encrypt_aesni(ks, in, out, blocks);
    return;
  }
#endif
  aes128_ecb_encrypt_scalar(ks, in, out, blocks);
}

void aes128_ecb_decrypt(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out, size_t blocks) {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.aesni && !f.force_scalar) {
    aes128_ecb_decrypt_aesni(ks, in, out, blocks);
    return;
  }
#endif
  aes128_ecb_decrypt_scalar(ks, in, out, blocks);
}

const char* aes128_backend() {
#if defined(__x86_64__) || defined(__i386__)
  const auto& f = cpu_features();
  if (f.aesni && !f.force_scalar) return "aesni";
#endif
  return "scalar";
}

}  // namespace uroce::kernels
