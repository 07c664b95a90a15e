#include "iotid/packet.hpp"

#include <cstdio>

namespace iotid {

std::string MacAddr::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", b[0], b[1], b[2], b[3], b[4],
                  b[5]);
    return buf;
}

bool IpAddr::operator<(const IpAddr& o) const {
    std::size_t n = std::min(len(), o.len());
    for (std::size_t i = 0; i < n; ++i)
        if (raw[i] != o.raw[i]) return raw[i] < o.raw[i];
    return len() < o.len();
}

std::string IpAddr::to_string() const {
    char buf[64];
    if (!v6) {
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", raw[0], raw[1], raw[2], raw[3]);
    } else {
        std::snprintf(buf, sizeof buf, "%02x%02x:%02x%02x:%02x%02x:%02x%02x:%02x%02x:%02x%02x:%02x%02x:%02x%02x",
                      raw[0], raw[1], raw[2], raw[3], raw[4], raw[5], raw[6], raw[7], raw[8],
                      raw[9], raw[10], raw[11], raw[12], raw[13], raw[14], raw[15]);
    }
    return buf;
}

const char* to_string(AppProto p) {
    switch (p) {
        case AppProto::HTTP: return "HTTP";
        case AppProto::HTTPS: return "HTTPS";
        case AppProto::DHCP: return "DHCP";
        case AppProto::BOOTP: return "BOOTP";
        case AppProto::SSDP: return "SSDP";
        case AppProto::DNS: return "DNS";
        case AppProto::MDNS: return "MDNS";
        case AppProto::NTP: return "NTP";
    }
    return "?";
}

std::set<AppProto> detect_app_protocols(Transport transport, std::uint16_t src_port,
                                        std::uint16_t dst_port, const Bytes& payload) {
    std::set<AppProto> out;
    if (transport == Transport::None || payload.empty()) return out;
    auto on_port = [&](std::uint16_t p) { return src_port == p || dst_port == p; };
    if (on_port(80) || on_port(8080)) out.insert(AppProto::HTTP);
    if (on_port(443)) out.insert(AppProto::HTTPS);
    if (on_port(1900)) out.insert(AppProto::SSDP);
    if (on_port(53)) out.insert(AppProto::DNS);
    if (on_port(5353)) out.insert(AppProto::MDNS);
    if (on_port(123)) out.insert(AppProto::NTP);
    if (on_port(67) || on_port(68)) {
        out.insert(AppProto::BOOTP);
        // BOOTP fixed header is 236 bytes; DHCP adds the magic cookie after it.
        if (payload.size() >= 240 && payload[236] == 0x63 && payload[237] == 0x82 &&
            payload[238] == 0x53 && payload[239] == 0x63)
            out.insert(AppProto::DHCP);
    }
    return out;
}

namespace {

// Scans an IPv4 options region (between the fixed header and header end).
void scan_ipv4_options(const std::uint8_t* p, std::size_t n, ParsedPacket& pkt) {
    std::size_t i = 0;
    while (i < n) {
        std::uint8_t type = p[i];
        if (type == 0) {  // end of option list
            pkt.opt_padding = true;
            break;
        }
        if (type == 1) {  // no-op pad
            pkt.opt_padding = true;
            ++i;
            continue;
        }
        if (i + 1 >= n) break;
        std::uint8_t optlen = p[i + 1];
        if (optlen < 2 || i + optlen > n) break;
        if (type == 0x94) pkt.opt_router_alert = true;  // copied|class0|number 20
        i += optlen;
    }
}

// Scans a v6 hop-by-hop / destination-options TLV block.
void scan_ipv6_tlvs(const std::uint8_t* p, std::size_t n, ParsedPacket& pkt) {
    std::size_t i = 0;
    while (i < n) {
        std::uint8_t type = p[i];
        if (type == 0) {  // Pad1
            pkt.opt_padding = true;
            ++i;
            continue;
        }
        if (i + 1 >= n) break;
        std::uint8_t optlen = p[i + 1];
        if (i + 2 + optlen > n) break;
        if (type == 1) pkt.opt_padding = true;       // PadN
        if (type == 5) pkt.opt_router_alert = true;  // router alert
        i += 2 + optlen;
    }
}

void parse_transport(const std::uint8_t* p, std::size_t n, std::uint8_t proto, bool v6,
                     ParsedPacket& pkt) {
    switch (proto) {
        case 1:
            if (!v6) pkt.is_icmp = true;
            return;
        case 58:
            if (v6) pkt.is_icmpv6 = true;
            return;
        case 6: {
            if (n < 20) return;
            pkt.transport = Transport::TCP;
            pkt.src_port = rd_u16be(p);
            pkt.dst_port = rd_u16be(p + 2);
            std::size_t doff = static_cast<std::size_t>(p[12] >> 4) * 4;
            if (doff < 20 || doff > n) return;
            pkt.payload.assign(p + doff, p + n);
            return;
        }
        case 17: {
            if (n < 8) return;
            pkt.transport = Transport::UDP;
            pkt.src_port = rd_u16be(p);
            pkt.dst_port = rd_u16be(p + 2);
            std::size_t ulen = rd_u16be(p + 4);
            std::size_t avail = n - 8;
            std::size_t plen = (ulen >= 8 && ulen - 8 <= avail) ? ulen - 8 : avail;
            pkt.payload.assign(p + 8, p + 8 + plen);
            return;
        }
        default:
            return;
    }
}

void parse_ipv4(const std::uint8_t* p, std::size_t n, ParsedPacket& pkt) {
    if (n < 20 || (p[0] >> 4) != 4) return;
    std::size_t ihl = static_cast<std::size_t>(p[0] & 0x0F) * 4;
    if (ihl < 20 || ihl > n) return;
    pkt.network = NetProto::IPv4;
    IpAddr src, dst;
    std::copy(p + 12, p + 16, src.raw.begin());
    std::copy(p + 16, p + 20, dst.raw.begin());
    pkt.src_ip = src;
    pkt.dst_ip = dst;
    if (ihl > 20) scan_ipv4_options(p + 20, ihl - 20, pkt);
    // Ethernet may pad short frames; trust the IP total length when sane.
    std::size_t total = rd_u16be(p + 2);
    std::size_t end = (total >= ihl && total <= n) ? total : n;
    parse_transport(p + ihl, end - ihl, p[9], false, pkt);
}

void parse_ipv6(const std::uint8_t* p, std::size_t n, ParsedPacket& pkt) {
    if (n < 40 || (p[0] >> 4) != 6) return;
    pkt.network = NetProto::IPv6;
    IpAddr src, dst;
    src.v6 = dst.v6 = true;
    std::copy(p + 8, p + 24, src.raw.begin());
    std::copy(p + 24, p + 40, dst.raw.begin());
    pkt.src_ip = src;
    pkt.dst_ip = dst;
    std::size_t plen = rd_u16be(p + 4);
    std::size_t end = (40 + plen <= n) ? 40 + plen : n;
    std::uint8_t next = p[6];
    std::size_t off = 40;
    // Walk extension headers until a transport (or something we don't know).
    while (off < end) {
        if (next == 0 || next == 43 || next == 60) {
            if (off + 2 > end) return;
            std::size_t hlen = (static_cast<std::size_t>(p[off + 1]) + 1) * 8;
            if (off + hlen > end) return;
            if (next != 43 && hlen > 2) scan_ipv6_tlvs(p + off + 2, hlen - 2, pkt);
            next = p[off];
            off += hlen;
            continue;
        }
        if (next == 44) {  // fragment header, fixed 8 bytes
            if (off + 8 > end) return;
            next = p[off];
            off += 8;
            continue;
        }
        break;
    }
    if (off <= end) parse_transport(p + off, end - off, next, true, pkt);
}

}  // namespace

ParsedPacket parse_packet(const RawPacket& raw) {
    ParsedPacket pkt;
    pkt.timestamp_micros = raw.timestamp_micros;
    pkt.size = raw.original_length ? raw.original_length
                                   : static_cast<std::uint32_t>(raw.captured.size());
    const std::uint8_t* p = raw.captured.data();
    std::size_t n = raw.captured.size();
    if (n < 14) return pkt;  // shorter than any link header: Other/None throughout

    MacAddr dst, src;
    std::copy(p, p + 6, dst.b.begin());
    std::copy(p + 6, p + 12, src.b.begin());
    pkt.dst_mac = dst;
    pkt.src_mac = src;

    std::uint16_t ethertype = rd_u16be(p + 12);
    if (ethertype <= 1500) {
        pkt.link = LinkType::LLC;  // 802.3 length field
        return pkt;
    }
    switch (ethertype) {
        case 0x0806:
            pkt.link = LinkType::ArpBearing;
            return pkt;
        case 0x888E:
            pkt.link = LinkType::Ethernet;
            pkt.is_eapol = true;
            return pkt;
        case 0x0800:
            pkt.link = LinkType::Ethernet;
            parse_ipv4(p + 14, n - 14, pkt);
            break;
        case 0x86DD:
            pkt.link = LinkType::Ethernet;
            parse_ipv6(p + 14, n - 14, pkt);
            break;
        default:
            pkt.link = LinkType::Ethernet;
            return pkt;
    }
    if (pkt.transport != Transport::None)
        pkt.app_protocols =
            detect_app_protocols(pkt.transport, *pkt.src_port, *pkt.dst_port, pkt.payload);
    return pkt;
}

}  // namespace iotid
