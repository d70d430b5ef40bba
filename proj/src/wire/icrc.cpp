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

#include "uroce/wire/icrc.hpp"

#include "uroce/kernels/crc32.hpp"

namespace uroce::wire {

namespace {
// Offsets of the masked fields within the IP-first wire image.
constexpr size_t kOffDscp = 1;
constexpr size_t kOffTtl = 8;
constexpr size_t kOffIpCsum = 10;     // 2 bytes
constexpr size_t kOffUdpCsum = 26;    // 2 bytes
constexpr size_t kOffBthReserved = 32;
constexpr size_t kMaskedSpan = kIpv4HeaderBytes + kUdpHeaderBytes + kBthBytes;  // 40
}  // namespace

void IcrcAccumulator::update(BytesView chunk) {
  state_ = kernels::crc32_update(state_, chunk.data(), chunk.size());
  consumed_ += chunk.size();
}

void icrc_mask_fields(uint8_t* image, size_t len) {
  (void)len;
  image[kOffDscp] = 0xff;
  image[kOffTtl] = 0xff;
  image[kOffIpCsum] = 0xff;
  image[kOffIpCsum + 1] = 0xff;
  image[kOffUdpCsum] = 0xff;
  image[kOffUdpCsum + 1] = 0xff;
  image[kOffBthReserved] = 0xff;
}

std::optional<uint32_t> icrc_compute(BytesView image_without_icrc) {
  if (image_without_icrc.size() < kMaskedSpan) return std::nullopt;
  uint8_t masked[kMaskedSpan];
  std::memcpy(masked, image_without_icrc.data(), kMaskedSpan);
  icrc_mask_fields(masked, kMaskedSpan);
  IcrcAccumulator acc;
  acc.update({masked, kMaskedSpan});
  acc.update(image_without_icrc.subspan(kMaskedSpan));
  return acc.finalize();
}

bool icrc_verify_image(BytesView full_image) {
  if (full_image.size() < kMinPacketBytes) return false;
  auto computed = icrc_compute(full_image.first(full_image.size() - kIcrcBytes));
  if (!computed) return false;
  uint32_t stored = load_le32(full_image.data() + full_image.size() - kIcrcBytes);
  return stored == *computed;
}

bool icrc_verify(const RocePacket& p) {
  Bytes image = serialize_packet(p);
  return icrc_verify_image(image);
}

Bytes serialize_with_icrc(RocePacket p) {
  p.icrc = 0;
  Bytes image = serialize_packet(p);
  uint32_t crc = *icrc_compute({image.data(), image.size() - kIcrcBytes});
  store_le32(image.data() + image.size() - kIcrcBytes, crc);
  return image;
}

}  // namespace uroce::wire
