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

#include <cstdio>
#include <string>

#include "uroce/common.hpp"

namespace uroce::net {

// Classic pcap, magic 0xa1b2c3d4 (microsecond timestamps), version 2.4,
// link type 101 (raw IP) since our wire image starts at the IP header.
constexpr uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr uint32_t kPcapLinkTypeRawIp = 101;
constexpr uint32_t kPcapSnapLen = 65535;
constexpr size_t kPcapGlobalHeaderBytes = 24;
constexpr size_t kPcapRecordHeaderBytes = 16;

Bytes pcap_global_header();
Bytes pcap_record(MicroTime ts_us, BytesView captured, uint32_t orig_len);

class PcapWriter {
 public:
  PcapWriter() = default;
  ~PcapWriter();
  PcapWriter(const PcapWriter&) = delete;
  PcapWriter& operator=(const PcapWriter&) = delete;

  bool open(const std::string& path);
  bool is_open() const { return file_ != nullptr; }
  bool append(MicroTime ts_us, BytesView captured, uint32_t orig_len);
  void close();

  uint64_t records_written() const { return records_; }

 private:
  std::FILE* file_ = nullptr;
  uint64_t records_ = 0;
};

struct PcapPacket {
  MicroTime ts_us = 0;
  uint32_t orig_len = 0;
  Bytes data;
};

struct PcapFile {
  uint32_t link_type = 0;
  std::vector<PcapPacket> packets;
};

Result<PcapFile, std::string> pcap_parse(BytesView bytes);
Result<PcapFile, std::string> pcap_read_file(const std::string& path);

}  // namespace uroce::net
