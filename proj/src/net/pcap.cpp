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

#include "uroce/net/pcap.hpp"

namespace uroce::net {

namespace {

// pcap headers are written in host endianness by convention; readers key off
// the magic. We fix little-endian so captures are byte-stable everywhere.
void put_u32(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}
void put_u16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}
uint32_t get_u32(const uint8_t* p) { return load_le32(p); }

}  // namespace

Bytes pcap_global_header() {
  Bytes out;
  out.reserve(kPcapGlobalHeaderBytes);
  put_u32(out, kPcapMagic);
  put_u16(out, 2);  // version major
  put_u16(out, 4);  // version minor
  put_u32(out, 0);  // thiszone
  put_u32(out, 0);  // sigfigs
  put_u32(out, kPcapSnapLen);
  put_u32(out, kPcapLinkTypeRawIp);
  return out;
}

Bytes pcap_record(MicroTime ts_us, BytesView captured, uint32_t orig_len) {
  Bytes out;
  out.reserve(kPcapRecordHeaderBytes + captured.size());
  put_u32(out, static_cast<uint32_t>(ts_us / 1'000'000));
  put_u32(out, static_cast<uint32_t>(ts_us % 1'000'000));
  put_u32(out, static_cast<uint32_t>(captured.size()));
  put_u32(out, orig_len);
  out.insert(out.end(), captured.begin(), captured.end());
  return out;
}

PcapWriter::~PcapWriter() { close(); }

bool PcapWriter::open(const std::string& path) {
  close();
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) return false;
  Bytes hdr = pcap_global_header();
  if (std::fwrite(hdr.data(), 1, hdr.size(), file_) != hdr.size()) {
    close();
    return false;
  }
  return true;
}

bool PcapWriter::append(MicroTime ts_us, BytesView captured, uint32_t orig_len) {
  if (file_ == nullptr) return false;
  Bytes rec = pcap_record(ts_us, captured, orig_len);
  if (std::fwrite(rec.data(), 1, rec.size(), file_) != rec.size()) return false;
  std::fflush(file_);
  ++records_;
  return true;
}

void PcapWriter::close() {
  if (file_ != nullptr) {
    std::fclose(file_);
    file_ = nullptr;
  }
}

Result<PcapFile, std::string> pcap_parse(BytesView bytes) {
  if (bytes.size() < kPcapGlobalHeaderBytes) return std::string("pcap: short global header");
  if (get_u32(bytes.data()) != kPcapMagic) return std::string("pcap: bad magic");
  PcapFile file;
  file.link_type = get_u32(bytes.data() + 20);
  size_t off = kPcapGlobalHeaderBytes;
  while (off < bytes.size()) {
    if (off + kPcapRecordHeaderBytes > bytes.size()) return std::string("pcap: short record header");
    PcapPacket pkt;
    uint32_t sec = get_u32(bytes.data() + off);
    uint32_t usec = get_u32(bytes.data() + off + 4);
    uint32_t incl = get_u32(bytes.data() + off + 8);
    pkt.orig_len = get_u32(bytes.data() + off + 12);
    pkt.ts_us = static_cast<MicroTime>(sec) * 1'000'000 + usec;
    off += kPcapRecordHeaderBytes;
    if (off + incl > bytes.size()) return std::string("pcap: short record body");
    pkt.data.assign(bytes.begin() + off, bytes.begin() + off + incl);
    off += incl;
    file.packets.push_back(std::move(pkt));
  }
  return file;
}

Result<PcapFile, std::string> pcap_read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) return std::string("pcap: cannot open " + path);
  Bytes bytes;
  uint8_t buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) bytes.insert(bytes.end(), buf, buf + n);
  std::fclose(f);
  return pcap_parse(bytes);
}

}  // namespace uroce::net
