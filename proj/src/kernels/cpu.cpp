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

#include "uroce/kernels/cpu.hpp"

#include <cstdlib>

namespace uroce::kernels {

static CpuFeatures detect() {
  CpuFeatures f;
  const char* env = std::getenv("UROCE_FORCE_SCALAR");
  f.force_scalar = env != nullptr && env[0] != '\0' && env[0] != '0';
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  f.avx2 = __builtin_cpu_supports("avx2");
  f.pclmulqdq = __builtin_cpu_supports("pclmul") && __builtin_cpu_supports("sse4.1");
  f.aesni = __builtin_cpu_supports("aes") && __builtin_cpu_supports("sse2");
#endif
  return f;
}

const CpuFeatures& cpu_features() {
  static const CpuFeatures f = detect();
  return f;
}

}  // namespace uroce::kernels
