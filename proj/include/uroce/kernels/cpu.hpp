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

namespace uroce::kernels {

// Runtime ISA selection for the data-plane kernels (checksum, cipher,
// feature transforms). Every kernel ships a scalar reference; vector
// variants are picked once at startup and must be bit-identical to it.
struct CpuFeatures {
  bool avx2 = false;
  bool pclmulqdq = false;
  bool aesni = false;
  // Setting UROCE_FORCE_SCALAR=1 in the environment pins every dispatch
  // to the scalar reference path.
  bool force_scalar = false;
};

const CpuFeatures& cpu_features();

}  // namespace uroce::kernels
