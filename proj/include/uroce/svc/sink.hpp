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

#include <string>

#include "uroce/common.hpp"

namespace uroce::svc {

// A named delivery target. `device` sinks stand in for accelerator memory
// reached by DMA; writes land without touching the host staging buffer.
class MemorySink {
 public:
  MemorySink(std::string name, size_t size, bool device)
      : name_(std::move(name)), mem_(size, 0), device_(device) {}

  const std::string& name() const { return name_; }
  bool is_device() const { return device_; }
  size_t size() const { return mem_.size(); }

  bool write(uint64_t offset, BytesView data) {
    if (offset + data.size() > mem_.size()) return false;
    std::memcpy(mem_.data() + offset, data.data(), data.size());
    ++writes_;
    bytes_written_ += data.size();
    return true;
  }

  BytesView bytes() const { return mem_; }
  void clear() { std::fill(mem_.begin(), mem_.end(), 0); }

  uint64_t writes() const { return writes_; }
  uint64_t bytes_written() const { return bytes_written_; }

 private:
  std::string name_;
  Bytes mem_;
  bool device_;
  uint64_t writes_ = 0;
  uint64_t bytes_written_ = 0;
};

}  // namespace uroce::svc
