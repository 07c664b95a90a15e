#pragma once

#include <string>
#include <vector>

#include "iotid/packet.hpp"

namespace iotid {

struct PcapFile {
    std::vector<RawPacket> packets;
    int truncated_records = 0;  // trailing records dropped in lenient mode
    bool big_endian = false;
};

// Classic pcap only, Ethernet linktype only. Both byte orders of the magic
// are accepted. In lenient mode (default) a truncated trailing record is
// dropped and counted; strict mode throws TruncatedFile instead.
PcapFile read_pcap(const std::string& path, bool strict = false);

// Little-endian classic pcap, version 2.4, linktype 1. Round-trips exactly
// through read_pcap.
void write_pcap(const std::vector<RawPacket>& packets, const std::string& path);

}  // namespace iotid
