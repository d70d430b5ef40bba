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

// Byte-class statistics used by the payload inspector: a byte is "text"
// if it is printable ASCII (0x20..0x7e) or one of tab, LF, CR.
struct ByteClassCounts {
  uint64_t text = 0;
  uint64_t total = 0;
  uint64_t binary() const { return total - text; }
};

ByteClassCounts byteclass_count_scalar(const uint8_t* data, size_t len);

#if defined(__x86_64__) || defined(__i386__)
ByteClassCounts byteclass_count_avx2(const uint8_t* data, size_t len);
#endif

ByteClassCounts byteclass_count(const uint8_t* data, size_t len);

}  // namespace uroce::kernels
