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

#include <array>
#include <cstddef>
#include <cstdint>

namespace uroce::kernels {

constexpr size_t kAesBlockBytes = 16;

/// Expanded AES-128 key material. `enc` holds the eleven round keys;
/// `dec` holds the InvMixColumns-transformed copies used by the AES-NI
/// decryption path (the scalar inverse cipher consumes `enc` directly).
struct Aes128Schedule {
  std::array<std::array<uint8_t, 16>, 11> enc;
  std::array<std::array<uint8_t, 16>, 11> dec;
};

Aes128Schedule aes128_expand(const uint8_t key[16]);

// ECB over whole blocks; in/out may alias. Scalar reference paths.
void aes128_ecb_encrypt_scalar(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                               size_t blocks);
void aes128_ecb_decrypt_scalar(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                               size_t blocks);

#if defined(__x86_64__) || defined(__i386__)
void aes128_ecb_encrypt_aesni(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                              size_t blocks);
void aes128_ecb_decrypt_aesni(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out,
                              size_t blocks);
#endif

// Dispatched entry points.
void aes128_ecb_encrypt(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out, size_t blocks);
void aes128_ecb_decrypt(const Aes128Schedule& ks, const uint8_t* in, uint8_t* out, size_t blocks);

const char* aes128_backend();

}  // namespace uroce::kernels
