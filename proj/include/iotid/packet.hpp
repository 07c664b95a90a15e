#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iotid/bytes.hpp"

namespace iotid {

struct RawPacket {
    std::int64_t timestamp_micros = 0;
    Bytes captured;
    std::uint32_t original_length = 0;

    bool operator==(const RawPacket&) const = default;
};

struct MacAddr {
    std::array<std::uint8_t, 6> b{};
    auto operator<=>(const MacAddr&) const = default;
    std::string to_string() const;
};

// IPv4 or IPv6 address. For v4 only the first 4 bytes of raw are used.
struct IpAddr {
    bool v6 = false;
    std::array<std::uint8_t, 16> raw{};

    std::size_t len() const { return v6 ? 16 : 4; }
    static IpAddr v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        IpAddr ip;
        ip.raw[0] = a; ip.raw[1] = b; ip.raw[2] = c; ip.raw[3] = d;
        return ip;
    }
    bool operator==(const IpAddr& o) const { return v6 == o.v6 && bytes_equal(o); }
    // Lexicographic on address bytes, shorter-prefix first; total order for keying.
    bool operator<(const IpAddr& o) const;
    std::string to_string() const;

  private:
    bool bytes_equal(const IpAddr& o) const {
        for (std::size_t i = 0; i < len(); ++i)
            if (raw[i] != o.raw[i]) return false;
        return true;
    }
};

enum class LinkType : std::uint8_t { Ethernet, ArpBearing, LLC, Other };
enum class NetProto : std::uint8_t { IPv4, IPv6, None };
enum class Transport : std::uint8_t { TCP, UDP, None };
enum class AppProto : std::uint8_t { HTTP, HTTPS, DHCP, BOOTP, SSDP, DNS, MDNS, NTP };

const char* to_string(AppProto p);

struct ParsedPacket {
    LinkType link = LinkType::Other;
    NetProto network = NetProto::None;
    bool is_icmp = false;
    bool is_icmpv6 = false;
    bool is_eapol = false;
    std::optional<IpAddr> src_ip, dst_ip;
    Transport transport = Transport::None;
    std::optional<std::uint16_t> src_port, dst_port;
    std::set<AppProto> app_protocols;
    bool opt_padding = false;       // IPv4 EOOL/NOP present (or v6 Pad1/PadN)
    bool opt_router_alert = false;  // IPv4 option 20 / v6 hop-by-hop option 5
    Bytes payload;                  // application-layer bytes
    std::uint32_t size = 0;         // original wire length

    // Carried through for session ordering and sanitization; not features.
    std::int64_t timestamp_micros = 0;
    std::optional<MacAddr> src_mac, dst_mac;
};

ParsedPacket parse_packet(const RawPacket& raw);

// Port-based application protocol table. Only packets that actually carry
// application bytes get flags; a bare SYN on port 80 has no application layer.
std::set<AppProto> detect_app_protocols(Transport transport, std::uint16_t src_port,
                                        std::uint16_t dst_port, const Bytes& payload);

}  // namespace iotid
