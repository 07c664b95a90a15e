#include "iotid/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <random>
#include <string>

#include "iotid/bytes.hpp"
#include "iotid/errors.hpp"
#include "iotid/pcap.hpp"

namespace iotid {

namespace {

using Rng = std::mt19937_64;

Bytes ascii(const char* s) { return Bytes(s, s + std::string(s).size()); }

// Fixed-width decimal so random identifiers never change payload sizes.
std::string fixed_num(Rng& rng, int width, std::uint64_t mod) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(rng() % mod));
    return buf;
}

std::array<std::uint8_t, 6> mac(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d,
                                std::uint8_t e, std::uint8_t f) {
    return {a, b, c, d, e, f};
}

constexpr std::uint16_t kEthIpv4 = 0x0800;
constexpr std::uint16_t kEthArp = 0x0806;
constexpr std::uint16_t kEthEapol = 0x888E;

struct FrameSink {
    std::vector<RawPacket>* out = nullptr;
    std::int64_t ts_micros = 0;
    Rng* rng = nullptr;

    void push(const Bytes& frame, std::uint32_t gap_hint = 0) {
        std::int64_t gap = gap_hint ? gap_hint : 200 + static_cast<std::int64_t>((*rng)() % 18000);
        ts_micros += gap;
        out->push_back(RawPacket{ts_micros, frame, static_cast<std::uint32_t>(frame.size())});
    }
};

Bytes eth_frame(const std::array<std::uint8_t, 6>& dst, const std::array<std::uint8_t, 6>& src,
                std::uint16_t ethertype, const Bytes& body, std::size_t pad_to = 60) {
    Bytes f;
    f.insert(f.end(), dst.begin(), dst.end());
    f.insert(f.end(), src.begin(), src.end());
    wr_u16be(f, ethertype);
    f.insert(f.end(), body.begin(), body.end());
    if (f.size() < pad_to) f.resize(pad_to, 0);
    return f;
}

Bytes ipv4_packet(const IpAddr& src, const IpAddr& dst, std::uint8_t proto, const Bytes& l4,
                  const Bytes& options = {}) {
    Bytes opts = options;
    while (opts.size() % 4 != 0) opts.push_back(0x01);  // NOP fill
    Bytes p;
    std::uint8_t ihl = static_cast<std::uint8_t>(5 + opts.size() / 4);
    p.push_back(static_cast<std::uint8_t>(0x40 | ihl));
    p.push_back(0);  // dscp
    wr_u16be(p, static_cast<std::uint16_t>(ihl * 4 + l4.size()));
    wr_u16be(p, 0x4a4a);  // id
    wr_u16be(p, 0x4000);  // DF
    p.push_back(64);      // ttl
    p.push_back(proto);
    wr_u16be(p, 0);  // checksum, capture tooling here does not verify
    p.insert(p.end(), src.raw.begin(), src.raw.begin() + 4);
    p.insert(p.end(), dst.raw.begin(), dst.raw.begin() + 4);
    p.insert(p.end(), opts.begin(), opts.end());
    p.insert(p.end(), l4.begin(), l4.end());
    return p;
}

Bytes udp_segment(std::uint16_t sport, std::uint16_t dport, const Bytes& payload) {
    Bytes s;
    wr_u16be(s, sport);
    wr_u16be(s, dport);
    wr_u16be(s, static_cast<std::uint16_t>(8 + payload.size()));
    wr_u16be(s, 0);
    s.insert(s.end(), payload.begin(), payload.end());
    return s;
}

constexpr std::uint8_t kTcpSyn = 0x02, kTcpAck = 0x10, kTcpFin = 0x01, kTcpPsh = 0x08;

Bytes tcp_segment(std::uint16_t sport, std::uint16_t dport, std::uint32_t seq, std::uint32_t ack,
                  std::uint8_t flags, const Bytes& payload) {
    Bytes s;
    wr_u16be(s, sport);
    wr_u16be(s, dport);
    wr_u32be(s, seq);
    wr_u32be(s, ack);
    s.push_back(5 << 4);
    s.push_back(flags);
    wr_u16be(s, 0xFFFF);
    wr_u16be(s, 0);
    wr_u16be(s, 0);
    s.insert(s.end(), payload.begin(), payload.end());
    return s;
}

struct Host {
    std::array<std::uint8_t, 6> mac;
    IpAddr ip;
};

// Builds one direction of an IPv4 UDP datagram as a full Ethernet frame.
Bytes udp_frame(const Host& from, const Host& to, std::uint16_t sport, std::uint16_t dport,
                const Bytes& payload) {
    return eth_frame(to.mac, from.mac, kEthIpv4,
                     ipv4_packet(from.ip, to.ip, 17, udp_segment(sport, dport, payload)));
}

Bytes tcp_frame(const Host& from, const Host& to, std::uint16_t sport, std::uint16_t dport,
                std::uint32_t seq, std::uint32_t ack, std::uint8_t flags, const Bytes& payload,
                const Bytes& ip_options = {}, std::size_t pad_to = 60) {
    return eth_frame(to.mac, from.mac, kEthIpv4,
                     ipv4_packet(from.ip, to.ip, 6, tcp_segment(sport, dport, seq, ack, flags, payload),
                                 ip_options),
                     pad_to);
}

Bytes arp_request(const Host& who, const IpAddr& target) {
    Bytes a;
    wr_u16be(a, 1);       // ethernet
    wr_u16be(a, 0x0800);  // ipv4
    a.push_back(6);
    a.push_back(4);
    wr_u16be(a, 1);  // request
    a.insert(a.end(), who.mac.begin(), who.mac.end());
    a.insert(a.end(), who.ip.raw.begin(), who.ip.raw.begin() + 4);
    a.insert(a.end(), 6, 0);
    a.insert(a.end(), target.raw.begin(), target.raw.begin() + 4);
    std::array<std::uint8_t, 6> bcast = mac(0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF);
    return eth_frame(bcast, who.mac, kEthArp, a);
}

Bytes icmp_echo(const Host& from, const Host& to, std::uint16_t seq, std::size_t data_len) {
    Bytes icmp;
    icmp.push_back(8);  // echo request
    icmp.push_back(0);
    wr_u16be(icmp, 0);
    wr_u16be(icmp, 0x77);
    wr_u16be(icmp, seq);
    for (std::size_t i = 0; i < data_len; ++i) icmp.push_back(static_cast<std::uint8_t>(0x61 + i % 23));
    return eth_frame(to.mac, from.mac, kEthIpv4, ipv4_packet(from.ip, to.ip, 1, icmp));
}

Bytes eapol_start(const Host& dev) {
    Bytes e{0x01, 0x01, 0x00, 0x00};  // version 1, start, len 0
    std::array<std::uint8_t, 6> pae = mac(0x01, 0x80, 0xC2, 0x00, 0x00, 0x03);
    return eth_frame(pae, dev.mac, kEthEapol, e);
}

Bytes llc_frame(const Host& dev, std::uint8_t sap, std::size_t body_len) {
    Bytes body{sap, sap, 0x03};
    for (std::size_t i = 0; i < body_len; ++i) body.push_back(static_cast<std::uint8_t>(i * 3 + 1));
    std::array<std::uint8_t, 6> dst = mac(0x01, 0x80, 0xC2, 0x00, 0x00, 0x0E);
    Bytes f;
    f.insert(f.end(), dst.begin(), dst.end());
    f.insert(f.end(), dev.mac.begin(), dev.mac.end());
    wr_u16be(f, static_cast<std::uint16_t>(body.size()));  // 802.3 length field
    f.insert(f.end(), body.begin(), body.end());
    if (f.size() < 60) f.resize(60, 0);
    return f;
}

// ---- generic phase, byte-identical across every device and setup ----

Bytes generic_ntp_request() {
    Bytes p{0x23, 0x00, 0x06, 0xEC};
    while (p.size() < 48) p.push_back(static_cast<std::uint8_t>(p.size() * 7 + 3));
    return p;
}

Bytes generic_ntp_response() {
    Bytes p{0x24, 0x02, 0x06, 0xE9};
    while (p.size() < 48) p.push_back(static_cast<std::uint8_t>(p.size() * 11 + 5));
    return p;
}

void dns_name(Bytes& b, const std::vector<std::string>& labels) {
    for (const auto& l : labels) {
        b.push_back(static_cast<std::uint8_t>(l.size()));
        b.insert(b.end(), l.begin(), l.end());
    }
    b.push_back(0);
}

Bytes generic_dns_query() {
    Bytes p;
    wr_u16be(p, 0x1337);
    wr_u16be(p, 0x0100);
    wr_u16be(p, 1);
    wr_u16be(p, 0);
    wr_u16be(p, 0);
    wr_u16be(p, 0);
    dns_name(p, {"time", "sync", "example"});
    wr_u16be(p, 1);
    wr_u16be(p, 1);
    return p;
}

Bytes generic_dns_response() {
    Bytes p = generic_dns_query();
    p[2] = 0x81;
    p[3] = 0x80;
    p[7] = 1;  // one answer
    wr_u16be(p, 0xC00C);
    wr_u16be(p, 1);
    wr_u16be(p, 1);
    wr_u32be(p, 300);
    wr_u16be(p, 4);
    p.push_back(198);
    p.push_back(51);
    p.push_back(100);
    p.push_back(7);
    return p;
}

Bytes generic_http_request() {
    return ascii(
        "GET /fw/check HTTP/1.1\r\n"
        "Host: fw.vendor.example\r\n"
        "User-Agent: iot-fw-agent/1.0\r\n"
        "Connection: close\r\n\r\n");
}

Bytes generic_http_response() {
    Bytes p = ascii(
        "HTTP/1.1 200 OK\r\n"
        "Content-Type: application/octet-stream\r\n"
        "Content-Length: 260\r\n\r\n");
    for (int i = 0; i < 260; ++i) p.push_back(static_cast<std::uint8_t>(i * 13 + 7));
    return p;
}

// ---- per-setup state ----

struct Setup {
    const DeviceProfile* profile;
    Host device, gateway, vendor;  // vendor = this device family's cloud endpoint
    Host ntp_server, fw_server;
    std::uint16_t next_port = 49160;
    std::uint32_t next_seq = 1000;
    Rng rng;
    FrameSink sink;

    std::uint16_t ephemeral() { return next_port += static_cast<std::uint16_t>(1 + rng() % 5); }

    Bytes filler(std::size_t n) {
        Bytes f(n);
        for (auto& b : f)
            b = static_cast<std::uint8_t>(profile->filler_base + rng() % 40);
        return f;
    }
};

void udp_exchange(Setup& st, const Host& server, std::uint16_t sport, std::uint16_t dport,
                  const Bytes& req, const Bytes& resp) {
    st.sink.push(udp_frame(st.device, server, sport, dport, req));
    if (!resp.empty()) st.sink.push(udp_frame(server, st.device, dport, sport, resp));
}

// TCP session with handshake, segmented response, acks and teardown. Only the
// request/response payload bytes matter for classification; the bookkeeping
// frames feed the per-packet fingerprints.
void tcp_exchange(Setup& st, const Host& server, std::uint16_t dport, const Bytes& req,
                  const Bytes& resp) {
    std::uint16_t sport = st.ephemeral();
    std::uint32_t cseq = st.next_seq += 7919, sseq = st.next_seq += 104729;
    st.sink.push(tcp_frame(st.device, server, sport, dport, cseq, 0, kTcpSyn, {}));
    st.sink.push(tcp_frame(server, st.device, dport, sport, sseq, cseq + 1, kTcpSyn | kTcpAck, {}));
    st.sink.push(tcp_frame(st.device, server, sport, dport, cseq + 1, sseq + 1, kTcpAck, {}));
    cseq += 1;
    sseq += 1;
    if (!req.empty()) {
        st.sink.push(tcp_frame(st.device, server, sport, dport, cseq, sseq, kTcpAck | kTcpPsh, req));
        cseq += static_cast<std::uint32_t>(req.size());
        st.sink.push(tcp_frame(server, st.device, dport, sport, sseq, cseq, kTcpAck, {}));
    }
    std::size_t off = 0;
    while (off < resp.size()) {
        std::size_t n = std::min<std::size_t>(resp.size() - off, 1200);
        Bytes seg(resp.begin() + off, resp.begin() + off + n);
        st.sink.push(tcp_frame(server, st.device, dport, sport, sseq, cseq, kTcpAck | kTcpPsh, seg));
        sseq += static_cast<std::uint32_t>(n);
        st.sink.push(tcp_frame(st.device, server, sport, dport, cseq, sseq, kTcpAck, {}));
        off += n;
    }
    st.sink.push(tcp_frame(server, st.device, dport, sport, sseq, cseq, kTcpFin | kTcpAck, {}));
    st.sink.push(tcp_frame(st.device, server, sport, dport, cseq, sseq + 1, kTcpFin | kTcpAck, {}));
    st.sink.push(tcp_frame(server, st.device, dport, sport, sseq + 1, cseq + 1, kTcpAck, {}));
}

void generic_phase(Setup& st) {
    udp_exchange(st, st.ntp_server, st.ephemeral(), 123, generic_ntp_request(), generic_ntp_response());
    udp_exchange(st, st.gateway, st.ephemeral(), 53, generic_dns_query(), generic_dns_response());
    tcp_exchange(st, st.fw_server, 80, generic_http_request(), generic_http_response());
}

Bytes with_motif(Setup& st, const Bytes& header, std::size_t total) {
    Bytes p = header;
    p.insert(p.end(), st.profile->motif.begin(), st.profile->motif.end());
    if (p.size() < total) {
        Bytes f = st.filler(total - p.size());
        p.insert(p.end(), f.begin(), f.end());
    }
    return p;
}

void dns_session(Setup& st, std::size_t target) {
    Bytes q;
    wr_u16be(q, static_cast<std::uint16_t>(st.rng()));
    wr_u16be(q, 0x0100);
    wr_u16be(q, 1);
    wr_u16be(q, 0);
    wr_u16be(q, 0);
    wr_u16be(q, 0);
    std::string sub = "d" + fixed_num(st.rng, 5, 100000);
    dns_name(q, {sub, std::string(st.profile->motif.begin(), st.profile->motif.begin() + 4), "example"});
    wr_u16be(q, 1);
    wr_u16be(q, 1);
    Bytes r = q;
    r[2] = 0x81;
    r[3] = 0x80;
    std::size_t want = target > q.size() ? target - q.size() : 24;
    Bytes extra = with_motif(st, {}, std::min<std::size_t>(want, 400));
    r.insert(r.end(), extra.begin(), extra.end());
    udp_exchange(st, st.gateway, st.ephemeral(), 53, q, r);
}

void ntp_session(Setup& st) {
    Bytes q{0x23, 0x00, 0x06, 0xEC};
    q = with_motif(st, q, 48);
    Bytes r{0x24, 0x02, 0x06, 0xE9};
    r = with_motif(st, r, 48);
    udp_exchange(st, st.ntp_server, st.ephemeral(), 123, q, r);
}

void http_session(Setup& st, std::size_t target) {
    Bytes req = ascii("GET /api/v1/state?n=");
    Bytes tail = ascii(fixed_num(st.rng, 6, 1000000).c_str());
    req.insert(req.end(), tail.begin(), tail.end());
    Bytes hdr = ascii(" HTTP/1.1\r\nHost: cloud.example\r\nUser-Agent: ");
    req.insert(req.end(), hdr.begin(), hdr.end());
    req.insert(req.end(), st.profile->motif.begin(), st.profile->motif.end());
    Bytes crlf = ascii("\r\n\r\n");
    req.insert(req.end(), crlf.begin(), crlf.end());
    std::size_t body = target > req.size() + 40 ? target - req.size() - 40 : 64;
    Bytes resp = ascii("HTTP/1.1 200 OK\r\nContent-Length: ");
    Bytes len = ascii(std::to_string(body).c_str());
    resp.insert(resp.end(), len.begin(), len.end());
    resp.insert(resp.end(), crlf.begin(), crlf.end());
    Bytes fill = with_motif(st, {}, body);
    resp.insert(resp.end(), fill.begin(), fill.end());
    tcp_exchange(st, st.vendor, st.rng() % 3 == 0 ? 8080 : 80, req, resp);
}

void ssdp_session(Setup& st, std::size_t target) {
    Host group{mac(0x01, 0x00, 0x5E, 0x7F, 0xFF, 0xFA), IpAddr::v4(239, 255, 255, 250)};
    Bytes req = ascii("M-SEARCH * HTTP/1.1\r\nHOST: 239.255.255.250:1900\r\nMAN: \"ssdp:discover\"\r\nST: ");
    req.insert(req.end(), st.profile->motif.begin(), st.profile->motif.end());
    Bytes crlf = ascii("\r\n\r\n");
    req.insert(req.end(), crlf.begin(), crlf.end());
    std::uint16_t sport = st.ephemeral();
    st.sink.push(udp_frame(st.device, group, sport, 1900, req));
    Bytes resp = ascii("HTTP/1.1 200 OK\r\nEXT:\r\nUSN: uuid:");
    Bytes fill = with_motif(st, {}, target > resp.size() ? target - resp.size() : 60);
    resp.insert(resp.end(), fill.begin(), fill.end());
    st.sink.push(udp_frame(st.gateway, st.device, 1900, sport, resp));
}

void mdns_announce(Setup& st, std::size_t target) {
    Host group{mac(0x01, 0x00, 0x5E, 0x00, 0x00, 0xFB), IpAddr::v4(224, 0, 0, 251)};
    Bytes p;
    wr_u16be(p, 0);
    wr_u16be(p, 0x8400);  // authoritative response
    wr_u16be(p, 0);
    wr_u16be(p, 1);
    wr_u16be(p, 0);
    wr_u16be(p, 0);
    std::string inst = "dev" + fixed_num(st.rng, 5, 100000);
    dns_name(p, {inst, "_http", "_tcp", "local"});
    wr_u16be(p, 16);  // TXT
    wr_u16be(p, 0x8001);
    wr_u32be(p, 120);
    Bytes txt = with_motif(st, {}, target > p.size() + 2 ? target - p.size() - 2 : 32);
    if (txt.size() > 255) txt.resize(255);
    wr_u16be(p, static_cast<std::uint16_t>(txt.size() + 1));
    p.push_back(static_cast<std::uint8_t>(txt.size()));
    p.insert(p.end(), txt.begin(), txt.end());
    st.sink.push(udp_frame(st.device, group, 5353, 5353, p));
}

// DHCP renew: the client names itself in option 60 and puts its own address
// in ciaddr, so address sanitization has to reach into the payload here.
void dhcp_session(Setup& st) {
    auto dhcp_payload = [&](std::uint8_t op, std::uint8_t msg_type) {
        Bytes p;
        p.push_back(op);
        p.push_back(1);
        p.push_back(6);
        p.push_back(0);
        wr_u32be(p, 0x3903F326);
        wr_u16be(p, 0);
        wr_u16be(p, 0);
        p.insert(p.end(), st.device.ip.raw.begin(), st.device.ip.raw.begin() + 4);  // ciaddr
        p.insert(p.end(), st.device.ip.raw.begin(), st.device.ip.raw.begin() + 4);  // yiaddr
        p.insert(p.end(), st.gateway.ip.raw.begin(), st.gateway.ip.raw.begin() + 4);
        p.insert(p.end(), 4, 0);
        p.insert(p.end(), st.device.mac.begin(), st.device.mac.end());
        p.insert(p.end(), 10, 0);   // chaddr pad
        p.insert(p.end(), 192, 0);  // sname + file
        p.push_back(0x63);
        p.push_back(0x82);
        p.push_back(0x53);
        p.push_back(0x63);
        p.push_back(53);
        p.push_back(1);
        p.push_back(msg_type);
        p.push_back(60);  // vendor class
        p.push_back(static_cast<std::uint8_t>(st.profile->motif.size()));
        p.insert(p.end(), st.profile->motif.begin(), st.profile->motif.end());
        p.push_back(0xFF);
        return p;
    };
    udp_exchange(st, st.gateway, 68, 67, dhcp_payload(1, 3), dhcp_payload(2, 5));
}

void app_session(Setup& st, int kind, std::size_t target) {
    switch (kind) {
        case 0: dns_session(st, target); break;
        case 1: http_session(st, target); break;
        case 2: ntp_session(st); break;
        case 3: ssdp_session(st, target); break;
        case 4: mdns_announce(st, target); break;
        default: dhcp_session(st); break;
    }
}

int pick_protocol(Setup& st) {
    const ProtocolMix& m = st.profile->mix;
    double w[6] = {m.dns, m.http, m.ntp, m.ssdp, m.mdns, m.dhcp};
    double total = 0;
    for (double x : w) total += x;
    double r = std::uniform_real_distribution<double>(0, total)(st.rng);
    for (int i = 0; i < 6; ++i) {
        if (r < w[i]) return i;
        r -= w[i];
    }
    return 0;
}

// Link-layer mannerisms emitted right after power-on, before any session.
void emit_quirks(Setup& st) {
    switch (st.profile->quirk) {
        case 0:  // ARP sweep then pings
            for (int i = 0; i < 3; ++i)
                st.sink.push(arp_request(st.device, IpAddr::v4(192, 168, 1, static_cast<std::uint8_t>(1 + i))));
            st.sink.push(icmp_echo(st.device, st.gateway, 1, 24));
            st.sink.push(icmp_echo(st.device, st.gateway, 2, 40));
            break;
        case 1:  // 802.1X attempt, single ARP
            st.sink.push(eapol_start(st.device));
            st.sink.push(arp_request(st.device, st.gateway.ip));
            break;
        case 2:  // spanning-tree style LLC chatter
            st.sink.push(llc_frame(st.device, 0x42, 35));
            st.sink.push(llc_frame(st.device, 0x42, 43));
            st.sink.push(arp_request(st.device, st.gateway.ip));
            break;
        case 3:  // mdns announce burst
            mdns_announce(st, 90 + (st.rng() % 3) * 20);
            mdns_announce(st, 150 + (st.rng() % 3) * 20);
            break;
        case 4:  // ssdp notify burst with router-alert marking
        {
            Host group{mac(0x01, 0x00, 0x5E, 0x7F, 0xFF, 0xFA), IpAddr::v4(239, 255, 255, 250)};
            for (int i = 0; i < 2; ++i) {
                Bytes n = ascii("NOTIFY * HTTP/1.1\r\nHOST: 239.255.255.250:1900\r\nNT: upnp:rootdevice\r\nUSN: ");
                Bytes fill = with_motif(st, {}, 40 + static_cast<std::size_t>(i) * 18);
                n.insert(n.end(), fill.begin(), fill.end());
                Bytes ra{0x94, 0x04, 0x00, 0x00};
                st.sink.push(eth_frame(group.mac, st.device.mac, kEthIpv4,
                                       ipv4_packet(st.device.ip, group.ip, 17,
                                                   udp_segment(st.ephemeral(), 1900, n), ra)));
            }
            st.sink.push(arp_request(st.device, st.gateway.ip));
            break;
        }
        case 5:  // icmp heavy
            st.sink.push(icmp_echo(st.device, st.gateway, 1, 16));
            st.sink.push(icmp_echo(st.device, st.gateway, 2, 32));
            st.sink.push(icmp_echo(st.device, st.gateway, 3, 48));
            break;
        case 6:  // arp + eapol + llc mix
            st.sink.push(arp_request(st.device, st.gateway.ip));
            st.sink.push(eapol_start(st.device));
            st.sink.push(llc_frame(st.device, 0xAA, 21));
            break;
        default:  // quiet device, lone ARP
            st.sink.push(arp_request(st.device, st.gateway.ip));
            break;
    }
    // Firmware-revision tell: some units emit one extra frame at boot. This
    // is the main thing separating the near-identical sibling models for
    // per-packet fingerprints, and it only shows up probabilistically.
    if (std::uniform_real_distribution<double>(0, 1)(st.rng) < st.profile->marker_prob) {
        if (st.profile->quirk == 3)
            mdns_announce(st, 70);
        else
            st.sink.push(eapol_start(st.device));
    }
}

// Keep-alive ping-pong on an established connection; alternating direction
// and per-direction frame sizes, so adjacent packets never collapse as
// duplicates. The size offset comes from the device family.
void emit_keepalive_padding(Setup& st, int frames) {
    std::size_t pad = 60 + static_cast<std::size_t>(st.profile->pad_delta);
    std::uint16_t sport = st.ephemeral();
    std::uint32_t cseq = st.next_seq += 911, sseq = st.next_seq += 677;
    st.sink.push(tcp_frame(st.device, st.vendor, sport, 443, cseq, 0, kTcpSyn, {}));
    st.sink.push(tcp_frame(st.vendor, st.device, 443, sport, sseq, cseq + 1, kTcpSyn | kTcpAck, {}));
    st.sink.push(tcp_frame(st.device, st.vendor, sport, 443, cseq + 1, sseq + 1, kTcpAck, {}));
    for (int i = 3; i < frames; ++i) {
        bool up = (i % 2) != 0;
        const Host& from = up ? st.device : st.vendor;
        const Host& to = up ? st.vendor : st.device;
        std::uint16_t sp = up ? sport : static_cast<std::uint16_t>(443);
        std::uint16_t dp = up ? static_cast<std::uint16_t>(443) : sport;
        st.sink.push(tcp_frame(from, to, sp, dp, cseq + 1, sseq + 1, kTcpAck, {}, {},
                               up ? pad : pad + 4),
                     40000);
    }
}

}  // namespace

std::vector<DeviceProfile> default_profiles() {
    std::vector<DeviceProfile> p;
    p.push_back({"LumenBridge", {.dns = 0.2, .http = 0.5, .ntp = 0.2, .ssdp = 0.1},
                 ascii("LMB-HUB/fw2.4.1"), 30, 5, 900, 300, 0, 16, 560, 0, 0});
    p.push_back({"VoltPlugA", {.dns = 0.5, .http = 0.2, .ntp = 0.25, .dhcp = 0.05},
                 ascii("VPLG-A001/1.2"), 10, 2, 420, 120, 1, 42, 500, 4, 0.25});
    p.push_back({"VoltPlugB", {.dns = 0.5, .http = 0.2, .ntp = 0.25, .dhcp = 0.05},
                 ascii("VPLG-B001/1.2"), 12, 2, 630, 150, 1, 48, 515, 4, 0.75});
    p.push_back({"NimbusCamS", {.dns = 0.2, .http = 0.6, .mdns = 0.2},
                 ascii("NIMBUS-S3 cam"), 16, 3, 2400, 250, 3, 74, 610, 8, 0.25});
    p.push_back({"NimbusCamP", {.dns = 0.2, .http = 0.6, .mdns = 0.2},
                 ascii("NIMBUS-P5 cam"), 14, 3, 3900, 250, 3, 80, 590, 8, 0.75});
    p.push_back({"EchoThermo", {.dns = 0.3, .ntp = 0.4, .mdns = 0.3},
                 ascii("ECHO-THERM v7"), 8, 2, 300, 80, 5, 120, 470, 12, 0});
    p.push_back({"SsdpHubX", {.dns = 0.2, .http = 0.2, .ssdp = 0.6},
                 ascii("SSDPHUB-X9"), 20, 4, 700, 200, 4, 150, 575, 16, 0});
    p.push_back({"KettleMini", {.dns = 0.4, .http = 0.3, .ntp = 0.3},
                 ascii("KETL-MINI 05"), 6, 1, 350, 90, 6, 190, 450, 20, 0});
    return p;
}

std::vector<RawPacket> generate_setup(const DeviceProfile& profile, std::uint64_t seed) {
    std::vector<RawPacket> frames;
    Setup st;
    st.profile = &profile;
    st.rng.seed(seed);
    st.sink = FrameSink{&frames, 1600000000LL * 1000000, &st.rng};

    std::uint8_t m4 = static_cast<std::uint8_t>(st.rng()), m5 = static_cast<std::uint8_t>(st.rng());
    std::uint8_t m6 = static_cast<std::uint8_t>(st.rng());
    std::uint8_t oui = static_cast<std::uint8_t>(0x10 + (profile.filler_base % 0x70));
    st.device = Host{mac(0x02, oui, 0x5E, m4, m5, m6),
                     IpAddr::v4(192, 168, 1, static_cast<std::uint8_t>(10 + st.rng() % 200))};
    st.gateway = Host{mac(0xC0, 0xFF, 0xEE, 0x00, 0x00, 0x01), IpAddr::v4(192, 168, 1, 1)};
    st.vendor = Host{st.gateway.mac, IpAddr::v4(203, 0, 113, static_cast<std::uint8_t>(10 + profile.quirk * 9))};
    st.ntp_server = Host{st.gateway.mac, IpAddr::v4(198, 51, 100, 20)};
    st.fw_server = Host{st.gateway.mac, IpAddr::v4(198, 51, 100, 30)};

    emit_quirks(st);

    std::normal_distribution<double> n_sessions(profile.sessions_mean, profile.sessions_spread);
    int total_sessions = std::max(2, static_cast<int>(std::lround(n_sessions(st.rng))));
    // Sizes snap to a five-point grid per device so the same frame sizes
    // recur across its captures while staying distinct between devices.
    auto session_bytes_target = [&] {
        int step = static_cast<int>(st.rng() % 5) - 2;
        double b = profile.bytes_mean + step * profile.bytes_spread;
        return static_cast<std::size_t>(std::max(64.0, b));
    };

    // Opening session first so device-specific bytes land at the front of the
    // capture, then the generic phase every device performs identically.
    app_session(st, pick_protocol(st), session_bytes_target());
    generic_phase(st);
    for (int s = 1; s < total_sessions; ++s) app_session(st, pick_protocol(st), session_bytes_target());

    int deficit = profile.frame_target - static_cast<int>(frames.size());
    if (deficit > 8) emit_keepalive_padding(st, deficit);
    return frames;
}

std::vector<ManifestEntry> generate_corpus(const std::vector<DeviceProfile>& profiles,
                                           int setups_per_device, std::uint64_t seed,
                                           const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "pcaps");
    std::vector<ManifestEntry> entries;
    for (const auto& profile : profiles) {
        for (int s = 0; s < setups_per_device; ++s) {
            std::uint64_t setup_seed = fnv1a64(profile.name + ":" + std::to_string(s)) ^ seed;
            auto frames = generate_setup(profile, setup_seed);
            std::string setup_id = profile.name + "-s" + std::to_string(s);
            std::string rel = (fs::path("pcaps") / (setup_id + ".pcap")).string();
            write_pcap(frames, (fs::path(out_dir) / rel).string());
            // manifest-relative so the corpus directory can move or be diffed
            entries.push_back(ManifestEntry{rel, profile.name, setup_id});
        }
    }
    write_manifest((fs::path(out_dir) / "manifest.json").string(), entries);
    return entries;
}

}  // namespace iotid
