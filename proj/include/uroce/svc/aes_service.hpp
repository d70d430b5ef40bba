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

#include "uroce/kernels/aes128.hpp"
#include "uroce/svc/service.hpp"

namespace uroce::svc {

// Payload encryption on the datapath: AES-128 in ECB mode, encrypting on TX
// and decrypting on RX with the per-QP key exchanged out of band. Blocks are
// independent, so any 16-aligned chunk of the stream transforms without
// neighbor state.
//
// ECB mirrors a block-pipelined hardware cipher and is what ships here; it
// leaks equal-block patterns and offers no integrity. Do not treat it as
// more than a datapath demonstration.
class AesEcbService : public OnPathService {
 public:
  /// Resolves the expanded key for a QP; nullptr means the QP has no key.
  using KeyProvider = std::function<const kernels::Aes128Schedule*(uint32_t qpn)>;

  explicit AesEcbService(KeyProvider keys) : keys_(std::move(keys)) {}

  const std::string& name() const override { return name_; }
  ServiceDirection direction() const override { return ServiceDirection::kBoth; }

  bool transform(uint32_t qpn, ServiceDirection traffic, uint64_t stream_offset, uint8_t* data,
                 size_t len) override;
  bool admits_length(uint64_t total_length) const override {
    return total_length % kernels::kAesBlockBytes == 0;
  }

  static Bytes encrypt(const kernels::Aes128Schedule& ks, BytesView plaintext);
  static Bytes decrypt(const kernels::Aes128Schedule& ks, BytesView ciphertext);

 private:
  std::string name_ = "aes-ecb";
  KeyProvider keys_;
};

}  // namespace uroce::svc
