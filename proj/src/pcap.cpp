#include "iotid/pcap.hpp"

#include "iotid/errors.hpp"

namespace iotid {

namespace {
constexpr std::uint32_t kMagicLE = 0xA1B2C3D4;  // written by us
constexpr std::uint32_t kMagicBE = 0xD4C3B2A1;  // same magic read in the other order
constexpr std::size_t kGlobalHeader = 24;
constexpr std::size_t kRecordHeader = 16;
}  // namespace

PcapFile read_pcap(const std::string& path, bool strict) {
    Bytes data = read_file(path);
    if (data.size() < kGlobalHeader) throw MalformedHeader("pcap shorter than global header: " + path);

    std::uint32_t magic = rd_u32le(data.data());
    bool be;
    if (magic == kMagicLE)
        be = false;
    else if (magic == kMagicBE)
        be = true;
    else
        throw MalformedHeader("not a classic pcap magic: " + path);

    auto u16 = [&](std::size_t off) { return be ? rd_u16be(&data[off]) : rd_u16le(&data[off]); };
    auto u32 = [&](std::size_t off) { return be ? rd_u32be(&data[off]) : rd_u32le(&data[off]); };

    if (u16(4) != 2) throw MalformedHeader("unsupported pcap major version");
    std::uint32_t linktype = u32(20);
    if (linktype != 1) throw LinkTypeUnsupported("linktype " + std::to_string(linktype) + ", only Ethernet handled");

    PcapFile out;
    out.big_endian = be;
    std::size_t off = kGlobalHeader;
    while (off < data.size()) {
        if (off + kRecordHeader > data.size()) {
            if (strict) throw TruncatedFile("record header cut short in " + path);
            ++out.truncated_records;
            break;
        }
        std::uint32_t ts_sec = u32(off);
        std::uint32_t ts_usec = u32(off + 4);
        std::uint32_t incl = u32(off + 8);
        std::uint32_t orig = u32(off + 12);
        off += kRecordHeader;
        if (off + incl > data.size()) {
            if (strict) throw TruncatedFile("record body cut short in " + path);
            ++out.truncated_records;
            break;
        }
        RawPacket pkt;
        pkt.timestamp_micros = static_cast<std::int64_t>(ts_sec) * 1000000 + ts_usec;
        pkt.captured.assign(data.begin() + static_cast<std::ptrdiff_t>(off),
                            data.begin() + static_cast<std::ptrdiff_t>(off + incl));
        pkt.original_length = orig;
        out.packets.push_back(std::move(pkt));
        off += incl;
    }
    return out;
}

void write_pcap(const std::vector<RawPacket>& packets, const std::string& path) {
    Bytes out;
    out.reserve(kGlobalHeader + packets.size() * (kRecordHeader + 64));
    wr_u32le(out, kMagicLE);
    wr_u16le(out, 2);      // version 2.4
    wr_u16le(out, 4);
    wr_u32le(out, 0);      // thiszone
    wr_u32le(out, 0);      // sigfigs
    wr_u32le(out, 65535);  // snaplen
    wr_u32le(out, 1);      // Ethernet
    for (const auto& pkt : packets) {
        auto micros = pkt.timestamp_micros;
        wr_u32le(out, static_cast<std::uint32_t>(micros / 1000000));
        wr_u32le(out, static_cast<std::uint32_t>(micros % 1000000));
        auto incl = static_cast<std::uint32_t>(pkt.captured.size());
        wr_u32le(out, incl);
        wr_u32le(out, std::max(pkt.original_length, incl));
        out.insert(out.end(), pkt.captured.begin(), pkt.captured.end());
    }
    write_file(path, out);
}

}  // namespace iotid
