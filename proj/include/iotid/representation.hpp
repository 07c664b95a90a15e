#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iotid/bytes.hpp"

namespace iotid {

// 28x28 gray image of the first bytes of a session, row-major.
struct TrafficImage {
    std::array<std::uint8_t, 784> pixels{};
    std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * 28 + c]; }
    std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * 28 + c]; }
    bool operator==(const TrafficImage&) const = default;
};

// The same bytes as 28 timesteps of 28 features, scaled to [0,1].
// Stored flat, step-major; a 784x1 reading uses the same buffer.
struct ByteSequence {
    std::array<double, 784> values{};
};

struct LabeledSample {
    Bytes bytes;  // at most 784
    std::string label;
    std::string setup_id;
    int session_index = -1;
};

// weight_d = max_N / n_d; the most frequent class gets exactly 1.0
using ClassWeights = std::map<std::string, double>;

TrafficImage to_image(const Bytes& bytes);
ByteSequence to_sequence(const TrafficImage& image);

ClassWeights compute_class_weights(const std::map<std::string, std::size_t>& counts);

// Stratified split: per class, floor(ratio*n) clamped to [1, n-1] goes to
// train. Deterministic in seed. Throws ClassTooSmall below 2 samples.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_dataset(
    const std::vector<LabeledSample>& samples, double ratio, std::uint64_t seed);

// ---- dataset manifest (JSON list of captures with their ground truth) ----

struct ManifestEntry {
    std::string pcap_path;
    std::string device_type;
    std::string setup_id;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// ---- binary sample cache ----
// 16-byte header: "IOTP", version u16, sample count u32, class count u16,
// 4 reserved zero bytes. Then per sample: label_id u16, length u16, 784
// bytes zero-padded. Little-endian throughout.

struct SampleCache {
    std::vector<std::string> classes;  // index = label id
    std::vector<std::uint16_t> labels;
    std::vector<Bytes> payloads;  // trimmed to real length
};

void write_sample_cache(const std::string& path, const SampleCache& cache);
SampleCache read_sample_cache(const std::string& path);  // classes left empty

// Sidecar JSON carrying class names, per-class counts and sample origins.
void write_cache_meta(const std::string& path, const SampleCache& cache,
                      const std::vector<std::string>& origins);
std::vector<std::string> read_cache_classes(const std::string& meta_path);

}  // namespace iotid
