#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iotid/packet.hpp"

namespace iotid {

// Canonical bidirectional flow key: the lexicographically smaller
// (address bytes, port) endpoint goes first, so both directions collide.
struct SessionKey {
    IpAddr addr_a, addr_b;
    std::uint16_t port_a = 0, port_b = 0;
    Transport transport = Transport::None;

    static SessionKey canonical(const IpAddr& src, std::uint16_t sport, const IpAddr& dst,
                                std::uint16_t dport, Transport t);
    bool operator==(const SessionKey& o) const;
    bool operator<(const SessionKey& o) const;
};

struct Session {
    SessionKey key;
    std::vector<ParsedPacket> packets;  // time-ordered
    std::string label;                  // device type, empty until assigned
    std::string setup_id;
};

struct SanitizerMap {
    std::map<IpAddr, IpAddr> address_map;
    std::map<MacAddr, MacAddr> mac_map;
    std::uint64_t seed = 0;
};

// Replaces every distinct IP and MAC with a seeded random counterpart
// (IPs also as byte substrings inside payloads), consistently across the
// whole packet list. Equal originals stay equal; distinct stay distinct.
std::pair<std::vector<ParsedPacket>, SanitizerMap> sanitize(std::vector<ParsedPacket> packets,
                                                            std::uint64_t seed);

// Drops packets that carry no application layer (empty payload).
std::vector<ParsedPacket> filter_packets(const std::vector<ParsedPacket>& packets);

// Groups TCP/UDP packets into bidirectional sessions keyed by the canonical
// 5-tuple; sessions come out ordered by first-packet time. Packets without a
// transport layer are left out.
std::vector<Session> assemble_sessions(const std::vector<ParsedPacket>& packets);

// Removes sessions whose concatenated payload stream is byte-identical to an
// earlier one; also drops sessions with zero payload bytes.
std::vector<Session> dedup_sessions(const std::vector<Session>& sessions);

// First `limit` bytes of the session's concatenated payloads, unpadded.
Bytes session_bytes(const Session& session, std::size_t limit);

// Audit dump of a sanitizer map: one "original replacement" line per entry.
std::string sanitizer_map_text(const SanitizerMap& map);

}  // namespace iotid
