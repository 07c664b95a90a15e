#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotid/packet.hpp"
#include "iotid/representation.hpp"

namespace iotid {

// Relative protocol weights for a device's application sessions.
struct ProtocolMix {
    double dns = 0, http = 0, ntp = 0, ssdp = 0, mdns = 0, dhcp = 0;
};

// A synthetic stand-in for one commercial device model. Two of the default
// profiles come in near-identical "same manufacturer" pairs on purpose.
struct DeviceProfile {
    std::string name;
    ProtocolMix mix;
    Bytes motif;  // 4-16 byte signature injected into payloads
    double sessions_mean = 10, sessions_spread = 3;
    double bytes_mean = 600, bytes_spread = 200;  // payload bytes per session
    int quirk = 0;             // link-layer behavior pattern at capture start
    std::uint8_t filler_base = 32;  // payload filler alphabet
    int frame_target = 420;    // total frames per capture (padding fills up)
    int pad_delta = 0;         // keep-alive frame size offset; pairs share it
    double marker_prob = 0;    // chance of an extra boot frame per capture
};

std::vector<DeviceProfile> default_profiles();  // 8 profiles

// One setup capture: link-layer quirks, the first application session's
// opening, a byte-identical generic phase (time sync, resolver lookup,
// firmware check) shared by every device, then the remaining sessions and
// keep-alive padding. Deterministic per seed.
std::vector<RawPacket> generate_setup(const DeviceProfile& profile, std::uint64_t seed);

// Writes <out_dir>/pcaps/*.pcap and <out_dir>/manifest.json.
std::vector<ManifestEntry> generate_corpus(const std::vector<DeviceProfile>& profiles,
                                           int setups_per_device, std::uint64_t seed,
                                           const std::string& out_dir);

}  // namespace iotid
