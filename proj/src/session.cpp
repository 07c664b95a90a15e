#include "iotid/session.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace iotid {

SessionKey SessionKey::canonical(const IpAddr& src, std::uint16_t sport, const IpAddr& dst,
                                 std::uint16_t dport, Transport t) {
    SessionKey k;
    k.transport = t;
    bool src_first = src < dst || (!(dst < src) && sport <= dport);
    if (src_first) {
        k.addr_a = src; k.port_a = sport;
        k.addr_b = dst; k.port_b = dport;
    } else {
        k.addr_a = dst; k.port_a = dport;
        k.addr_b = src; k.port_b = sport;
    }
    return k;
}

bool SessionKey::operator==(const SessionKey& o) const {
    return transport == o.transport && port_a == o.port_a && port_b == o.port_b &&
           addr_a == o.addr_a && addr_b == o.addr_b;
}

bool SessionKey::operator<(const SessionKey& o) const {
    if (addr_a < o.addr_a) return true;
    if (o.addr_a < addr_a) return false;
    if (port_a != o.port_a) return port_a < o.port_a;
    if (addr_b < o.addr_b) return true;
    if (o.addr_b < addr_b) return false;
    if (port_b != o.port_b) return port_b < o.port_b;
    return transport < o.transport;
}

namespace {

IpAddr random_replacement(const IpAddr& original, std::mt19937_64& rng) {
    IpAddr r;
    r.v6 = original.v6;
    if (!original.v6) {
        r.raw[0] = 10;  // draw from 10/8 so replacements look like lab addresses
        for (int i = 1; i < 4; ++i) r.raw[i] = static_cast<std::uint8_t>(rng() & 0xFF);
    } else {
        r.raw[0] = 0xFD;  // unique-local space
        for (int i = 1; i < 16; ++i) r.raw[i] = static_cast<std::uint8_t>(rng() & 0xFF);
    }
    return r;
}

MacAddr random_mac(std::mt19937_64& rng) {
    MacAddr m;
    for (auto& byte : m.b) byte = static_cast<std::uint8_t>(rng() & 0xFF);
    m.b[0] = static_cast<std::uint8_t>((m.b[0] & 0xFC) | 0x02);  // locally administered unicast
    return m;
}

// Replaces IP byte substrings in a payload. Longer (v6) patterns win over v4
// when both match at one position; originals are tried in map order so the
// scan is deterministic.
void rewrite_payload(Bytes& payload, const std::map<IpAddr, IpAddr>& amap) {
    if (payload.empty()) return;
    std::vector<const std::pair<const IpAddr, IpAddr>*> v6s, v4s;
    for (const auto& e : amap) (e.first.v6 ? v6s : v4s).push_back(&e);
    auto try_match = [&](std::size_t pos, const std::pair<const IpAddr, IpAddr>* e) {
        std::size_t n = e->first.len();
        if (pos + n > payload.size()) return false;
        for (std::size_t i = 0; i < n; ++i)
            if (payload[pos + i] != e->first.raw[i]) return false;
        for (std::size_t i = 0; i < n; ++i) payload[pos + i] = e->second.raw[i];
        return true;
    };
    std::size_t pos = 0;
    while (pos < payload.size()) {
        std::size_t advanced = 0;
        for (const auto* e : v6s)
            if (try_match(pos, e)) { advanced = 16; break; }
        if (!advanced)
            for (const auto* e : v4s)
                if (try_match(pos, e)) { advanced = 4; break; }
        pos += advanced ? advanced : 1;
    }
}

}  // namespace

std::pair<std::vector<ParsedPacket>, SanitizerMap> sanitize(std::vector<ParsedPacket> packets,
                                                            std::uint64_t seed) {
    SanitizerMap map;
    map.seed = seed;

    std::set<IpAddr> ips;
    std::set<MacAddr> macs;
    for (const auto& p : packets) {
        if (p.src_ip) ips.insert(*p.src_ip);
        if (p.dst_ip) ips.insert(*p.dst_ip);
        if (p.src_mac) macs.insert(*p.src_mac);
        if (p.dst_mac) macs.insert(*p.dst_mac);
    }

    std::mt19937_64 rng(seed);
    std::set<IpAddr> used_ips(ips.begin(), ips.end());  // keep replacements off originals too
    for (const auto& ip : ips) {
        IpAddr r;
        do {
            r = random_replacement(ip, rng);
        } while (used_ips.count(r));
        used_ips.insert(r);
        map.address_map.emplace(ip, r);
    }
    std::set<MacAddr> used_macs(macs.begin(), macs.end());
    for (const auto& mac : macs) {
        MacAddr r;
        do {
            r = random_mac(rng);
        } while (used_macs.count(r));
        used_macs.insert(r);
        map.mac_map.emplace(mac, r);
    }

    for (auto& p : packets) {
        if (p.src_ip) p.src_ip = map.address_map.at(*p.src_ip);
        if (p.dst_ip) p.dst_ip = map.address_map.at(*p.dst_ip);
        if (p.src_mac) p.src_mac = map.mac_map.at(*p.src_mac);
        if (p.dst_mac) p.dst_mac = map.mac_map.at(*p.dst_mac);
        rewrite_payload(p.payload, map.address_map);
    }
    return {std::move(packets), std::move(map)};
}

std::vector<ParsedPacket> filter_packets(const std::vector<ParsedPacket>& packets) {
    std::vector<ParsedPacket> out;
    out.reserve(packets.size());
    for (const auto& p : packets)
        if (!(p.payload.empty() && p.app_protocols.empty())) out.push_back(p);
    return out;
}

std::vector<Session> assemble_sessions(const std::vector<ParsedPacket>& packets) {
    std::vector<Session> sessions;
    std::map<SessionKey, std::size_t> index;
    for (const auto& p : packets) {
        if (p.transport == Transport::None || !p.src_ip || !p.dst_ip) continue;
        SessionKey key =
            SessionKey::canonical(*p.src_ip, *p.src_port, *p.dst_ip, *p.dst_port, p.transport);
        auto [it, fresh] = index.emplace(key, sessions.size());
        if (fresh) {
            Session s;
            s.key = key;
            sessions.push_back(std::move(s));
        }
        sessions[it->second].packets.push_back(p);
    }
    return sessions;
}

std::vector<Session> dedup_sessions(const std::vector<Session>& sessions) {
    std::vector<Session> out;
    std::map<std::uint64_t, std::vector<Bytes>> seen;
    for (const auto& s : sessions) {
        Bytes stream;
        for (const auto& p : s.packets) stream.insert(stream.end(), p.payload.begin(), p.payload.end());
        if (stream.empty()) continue;
        auto& bucket = seen[fnv1a64(stream)];
        bool dup = std::any_of(bucket.begin(), bucket.end(),
                               [&](const Bytes& b) { return b == stream; });
        if (dup) continue;
        bucket.push_back(std::move(stream));
        out.push_back(s);
    }
    return out;
}

Bytes session_bytes(const Session& session, std::size_t limit) {
    Bytes out;
    for (const auto& p : session.packets) {
        if (out.size() >= limit) break;
        std::size_t take = std::min(limit - out.size(), p.payload.size());
        out.insert(out.end(), p.payload.begin(), p.payload.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return out;
}

std::string sanitizer_map_text(const SanitizerMap& map) {
    std::ostringstream os;
    for (const auto& [from, to] : map.address_map) os << from.to_string() << " " << to.to_string() << "\n";
    for (const auto& [from, to] : map.mac_map) os << from.to_string() << " " << to.to_string() << "\n";
    return os.str();
}

}  // namespace iotid
