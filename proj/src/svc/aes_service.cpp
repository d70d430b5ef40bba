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

#include "uroce/svc/aes_service.hpp"

namespace uroce::svc {

bool AesEcbService::transform(uint32_t qpn, ServiceDirection traffic, uint64_t stream_offset,
                              uint8_t* data, size_t len) {
  if (stream_offset % kernels::kAesBlockBytes != 0 || len % kernels::kAesBlockBytes != 0)
    return false;
  const kernels::Aes128Schedule* ks = keys_(qpn);
  if (ks == nullptr) return false;  // no key for an encrypted QP
  size_t blocks = len / kernels::kAesBlockBytes;
  if (traffic == ServiceDirection::kTx) {
    kernels::aes128_ecb_encrypt(*ks, data, data, blocks);
  } else {
    kernels::aes128_ecb_decrypt(*ks, data, data, blocks);
  }
  return true;
}

Bytes AesEcbService::encrypt(const kernels::Aes128Schedule& ks, BytesView plaintext) {
  Bytes out(plaintext.begin(), plaintext.end());
  kernels::aes128_ecb_encrypt(ks, out.data(), out.data(), out.size() / kernels::kAesBlockBytes);
  return out;
}

Bytes AesEcbService::decrypt(const kernels::Aes128Schedule& ks, BytesView ciphertext) {
  Bytes out(ciphertext.begin(), ciphertext.end());
  kernels::aes128_ecb_decrypt(ks, out.data(), out.data(), out.size() / kernels::kAesBlockBytes);
  return out;
}

}  // namespace uroce::svc
