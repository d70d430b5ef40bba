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

#include <doctest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "uroce/kernels/aes128.hpp"
#include "uroce/kernels/byteclass.hpp"
#include "uroce/kernels/cpu.hpp"
#include "uroce/kernels/crc32.hpp"
#include "uroce/kernels/dlrm.hpp"

using namespace uroce;
using namespace uroce::kernels;

namespace {

Bytes random_bytes(std::mt19937_64& rng, size_t n) {
  Bytes out(n);
  for (auto& b : out) b = static_cast<uint8_t>(rng());
  return out;
}

}  // namespace

TEST_CASE("crc32 sliceby8 matches the bit-serial reference") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    size_t n = static_cast<size_t>(rng() % 2048);
    Bytes data = random_bytes(rng, n);
    uint32_t a = crc32_update_sliceby8(0xffffffffu, data.data(), data.size());
    uint32_t b = testing::crc32_bitserial_update(0xffffffffu, data.data(), data.size());
    REQUIRE(a == b);
  }
}

TEST_CASE("crc32 seed state after the eight-0xFF prefix") {
  uint8_t prefix[8];
  std::memset(prefix, 0xff, sizeof(prefix));
  CHECK(crc32_update_sliceby8(0xffffffffu, prefix, 8) == 0xdebb20e3u);
}

#if defined(__x86_64__) || defined(__i386__)
TEST_CASE("crc32 pclmul variant matches sliceby8 across lengths and offsets") {
  if (!cpu_features().pclmulqdq) {
    MESSAGE("pclmulqdq unavailable, skipping");
    return;
  }
  std::mt19937_64 rng(13);
  Bytes blob = random_bytes(rng, 1 << 16);
  for (int i = 0; i < 2000; ++i) {
    size_t off = static_cast<size_t>(rng() % 64);
    size_t len = static_cast<size_t>(rng() % 8192);
    if (off + len > blob.size()) continue;
    uint32_t seed = static_cast<uint32_t>(rng());
    uint32_t a = crc32_update_pclmul(seed, blob.data() + off, len);
    uint32_t b = crc32_update_sliceby8(seed, blob.data() + off, len);
    REQUIRE(a == b);
  }
}
#endif

TEST_CASE("crc32 streaming is chunking-invariant") {
  std::mt19937_64 rng(21);
  Bytes data = random_bytes(rng, 4096 + 40 + 4);
  uint32_t whole = crc32_update(0xffffffffu, data.data(), data.size());
  // 64-byte full chunks, one 40-byte partial, one 4-byte tail.
  uint32_t st = 0xffffffffu;
  size_t pos = 0;
  while (pos + 64 <= 4096) {
    st = crc32_update(st, data.data() + pos, 64);
    pos += 64;
  }
  st = crc32_update(st, data.data() + pos, 40);
  pos += 40;
  st = crc32_update(st, data.data() + pos, data.size() - pos);
  CHECK(st == whole);
  // 4-byte chunks.
  uint32_t st4 = 0xffffffffu;
  for (size_t i = 0; i < data.size(); i += 4) st4 = crc32_update(st4, data.data() + i, 4);
  CHECK(st4 == whole);
}

TEST_CASE("aes128 FIPS-197 known-answer vector") {
  auto key = *from_hex("000102030405060708090a0b0c0d0e0f");
  auto pt = *from_hex("00112233445566778899aabbccddeeff");
  auto expect = *from_hex("69c4e0d86a7b0430d8cdb78070b4c55a");
  Aes128Schedule ks = aes128_expand(key.data());

  Bytes ct(16);
  aes128_ecb_encrypt_scalar(ks, pt.data(), ct.data(), 1);
  CHECK(ct == expect);
  Bytes back(16);
  aes128_ecb_decrypt_scalar(ks, ct.data(), back.data(), 1);
  CHECK(back == pt);

#if defined(__x86_64__) || defined(__i386__)
  if (cpu_features().aesni) {
    Bytes ct2(16), back2(16);
    aes128_ecb_encrypt_aesni(ks, pt.data(), ct2.data(), 1);
    CHECK(ct2 == expect);
    aes128_ecb_decrypt_aesni(ks, ct2.data(), back2.data(), 1);
    CHECK(back2 == pt);
  }
#endif
}

TEST_CASE("aes128 scalar and aesni agree on random streams") {
#if defined(__x86_64__) || defined(__i386__)
  if (!cpu_features().aesni) {
    MESSAGE("aesni unavailable, skipping");
    return;
  }
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 50; ++iter) {
    Bytes key = random_bytes(rng, 16);
    size_t blocks = 1 + rng() % 64;
    Bytes pt = random_bytes(rng, blocks * 16);
    Aes128Schedule ks = aes128_expand(key.data());
    Bytes a(pt.size()), b(pt.size());
    aes128_ecb_encrypt_scalar(ks, pt.data(), a.data(), blocks);
    aes128_ecb_encrypt_aesni(ks, pt.data(), b.data(), blocks);
    REQUIRE(a == b);
    Bytes da(pt.size()), db(pt.size());
    aes128_ecb_decrypt_scalar(ks, a.data(), da.data(), blocks);
    aes128_ecb_decrypt_aesni(ks, a.data(), db.data(), blocks);
    REQUIRE(da == db);
    REQUIRE(da == pt);
  }
#endif
}

TEST_CASE("aes128 ECB block independence") {
  std::mt19937_64 rng(3);
  Bytes key = random_bytes(rng, 16);
  Aes128Schedule ks = aes128_expand(key.data());
  Bytes pt(48);
  Bytes block = random_bytes(rng, 16);
  std::memcpy(pt.data(), block.data(), 16);
  std::memcpy(pt.data() + 16, random_bytes(rng, 16).data(), 16);
  std::memcpy(pt.data() + 32, block.data(), 16);
  Bytes ct(48);
  aes128_ecb_encrypt(ks, pt.data(), ct.data(), 3);
  CHECK(std::memcmp(ct.data(), ct.data() + 32, 16) == 0);
  CHECK(std::memcmp(ct.data(), ct.data() + 16, 16) != 0);
}

TEST_CASE("dlrm transform matches the offline oracle and is chunking-invariant") {
  std::mt19937_64 rng(1234);
  DlrmParams params;
  params.moduli.assign(26, 1u << 20);
  params.moduli[3] = 1u << 10;
  params.moduli[7] = 997;  // deliberately not a power of two

  const size_t n_records = 257;
  Bytes stream = random_bytes(rng, n_records * params.record_bytes());
  // Sprinkle adversarial float bit patterns into the dense region.
  for (size_t r = 0; r < n_records; r += 17) {
    uint8_t* rec = stream.data() + r * params.record_bytes();
    const uint32_t specials[] = {0x7fc00000u /*NaN*/, 0x80000000u /*-0*/, 0xff800000u /*-inf*/,
                                 0x7f800000u /*+inf*/, 0x80000001u /*-denorm*/};
    for (int i = 0; i < 5; ++i) std::memcpy(rec + 4 * i, &specials[i], 4);
  }

  Bytes expected =
      testing::dlrm_oracle(stream, params.dense_count, params.sparse_count, params.moduli,
                           params.default_modulus);

  Bytes whole = stream;
  dlrm_transform_scalar(whole.data(), whole.size(), 0, params);
  REQUIRE(whole == expected);

  // Chunked at a packet-ish boundary that splits records mid-field-run.
  Bytes chunked = stream;
  size_t split = 4096;
  dlrm_transform(chunked.data(), split, 0, params);
  dlrm_transform(chunked.data() + split, chunked.size() - split, split, params);
  REQUIRE(chunked == expected);

#if defined(__x86_64__) || defined(__i386__)
  if (cpu_features().avx2) {
    Bytes vec = stream;
    dlrm_transform_avx2(vec.data(), vec.size(), 0, params);
    REQUIRE(vec == expected);
    // Power-of-two-only moduli exercise the vectorized AND path.
    DlrmParams pow2 = params;
    pow2.moduli[7] = 1u << 14;
    Bytes base = stream, v2 = stream;
    dlrm_transform_scalar(base.data(), base.size(), 4, pow2);
    dlrm_transform_avx2(v2.data(), v2.size(), 4, pow2);
    REQUIRE(base == v2);
  }
#endif
}

TEST_CASE("byteclass scalar/vector equivalence and classification") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Bytes data = random_bytes(rng, rng() % 3000);
    auto s = byteclass_count_scalar(data.data(), data.size());
#if defined(__x86_64__) || defined(__i386__)
    if (cpu_features().avx2) {
      auto v = byteclass_count_avx2(data.data(), data.size());
      REQUIRE(s.text == v.text);
      REQUIRE(s.total == v.total);
    }
#endif
    auto d = byteclass_count(data.data(), data.size());
    REQUIRE(s.text == d.text);
  }
  std::string csv = "id,price,score\n1,9.99,0.5\n2,3.50,0.9\n";
  auto c = byteclass_count(reinterpret_cast<const uint8_t*>(csv.data()), csv.size());
  CHECK(c.text == csv.size());
  CHECK(c.binary() == 0);
}
