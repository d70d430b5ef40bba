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

namespace uroce::kernels {

// Reflected CRC-32, generator 0x04C11DB7 (0xEDB88320 in reflected form),
// the Ethernet-FCS flavor. These functions update a raw shift register:
// the caller owns the init (all-ones) and final-XOR conventions.

/// Scalar reference path: table-driven, eight bytes per step.
uint32_t crc32_update_sliceby8(uint32_t state, const uint8_t* data, size_t len);

#if defined(__x86_64__) || defined(__i386__)
/// Carry-less-multiply folding path, 64 bytes per step. Requires PCLMULQDQ+SSE4.1.
uint32_t crc32_update_pclmul(uint32_t state, const uint8_t* data, size_t len);
#endif

/// Best available path for this CPU (scalar reference if forced or unsupported).
uint32_t crc32_update(uint32_t state, const uint8_t* data, size_t len);

/// Name of the selected backend ("sliceby8" or "pclmul").
const char* crc32_backend();

}  // namespace uroce::kernels
