#include "iotid/representation.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <json.hpp>

#include "iotid/errors.hpp"

namespace iotid {

TrafficImage to_image(const Bytes& bytes) {
    if (bytes.size() > 784)
        throw ShapeMismatch("image input longer than 784 bytes: " + std::to_string(bytes.size()));
    TrafficImage img;
    std::copy(bytes.begin(), bytes.end(), img.pixels.begin());
    return img;
}

ByteSequence to_sequence(const TrafficImage& image) {
    ByteSequence seq;
    for (std::size_t i = 0; i < 784; ++i) seq.values[i] = image.pixels[i] / 255.0;
    return seq;
}

ClassWeights compute_class_weights(const std::map<std::string, std::size_t>& counts) {
    if (counts.empty()) throw EmptyDataset("no classes to weight");
    std::size_t max_n = 0;
    for (const auto& [name, n] : counts) {
        if (n == 0) throw ClassTooSmall("zero sessions for class " + name);
        max_n = std::max(max_n, n);
    }
    ClassWeights w;
    for (const auto& [name, n] : counts) w[name] = static_cast<double>(max_n) / static_cast<double>(n);
    return w;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_dataset(
    const std::vector<LabeledSample>& samples, double ratio, std::uint64_t seed) {
    if (samples.empty()) throw EmptyDataset("nothing to split");
    if (!(ratio > 0.0 && ratio < 1.0)) throw BadConfig("split ratio must be in (0,1)");

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].label].push_back(i);

    std::mt19937_64 rng(seed);
    std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> out;
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 2)
            throw ClassTooSmall("class " + label + " has " + std::to_string(idx.size()) +
                                " sample(s), need 2 to split");
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n_train = static_cast<std::size_t>(ratio * static_cast<double>(idx.size()));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < n_train ? out.first : out.second).push_back(samples[idx[k]]);
    }
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoFailure("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_array()) throw BadConfig("manifest must be a JSON array");
    std::vector<ManifestEntry> out;
    try {
        for (const auto& e : j) {
            ManifestEntry m;
            m.pcap_path = e.at("pcap_path").get<std::string>();
            m.device_type = e.at("device_type").get<std::string>();
            m.setup_id = e.at("setup_id").get<std::string>();
            out.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig("manifest entry is missing a field: " + std::string(e.what()));
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries)
        j.push_back({{"pcap_path", e.pcap_path}, {"device_type", e.device_type}, {"setup_id", e.setup_id}});
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoFailure("cannot write manifest: " + path);
    f << j.dump(2) << "\n";
}

namespace {
constexpr char kCacheMagic[4] = {'I', 'O', 'T', 'P'};
constexpr std::uint16_t kCacheVersion = 1;
}  // namespace

void write_sample_cache(const std::string& path, const SampleCache& cache) {
    if (cache.labels.size() != cache.payloads.size())
        throw ShapeMismatch("cache labels/payloads size mismatch");
    if (cache.classes.size() > 65535) throw BadConfig("too many classes for cache format");
    Bytes out;
    out.reserve(16 + cache.labels.size() * 788);
    out.insert(out.end(), kCacheMagic, kCacheMagic + 4);
    wr_u16le(out, kCacheVersion);
    wr_u32le(out, static_cast<std::uint32_t>(cache.labels.size()));
    wr_u16le(out, static_cast<std::uint16_t>(cache.classes.size()));
    for (int i = 0; i < 4; ++i) out.push_back(0);
    for (std::size_t i = 0; i < cache.labels.size(); ++i) {
        const Bytes& b = cache.payloads[i];
        if (b.size() > 784) throw ShapeMismatch("cached sample longer than 784 bytes");
        if (!cache.classes.empty() && cache.labels[i] >= cache.classes.size())
            throw UnknownLabel("label id " + std::to_string(cache.labels[i]) + " out of range");
        wr_u16le(out, cache.labels[i]);
        wr_u16le(out, static_cast<std::uint16_t>(b.size()));
        out.insert(out.end(), b.begin(), b.end());
        out.insert(out.end(), 784 - b.size(), 0);
    }
    write_file(path, out);
}

SampleCache read_sample_cache(const std::string& path) {
    Bytes data = read_file(path);
    if (data.size() < 16 || std::memcmp(data.data(), kCacheMagic, 4) != 0)
        throw MalformedHeader("not a sample cache: " + path);
    if (rd_u16le(&data[4]) != kCacheVersion) throw MalformedHeader("unsupported cache version");
    std::uint32_t count = rd_u32le(&data[6]);
    std::uint16_t class_count = rd_u16le(&data[10]);
    if (data.size() != 16 + static_cast<std::size_t>(count) * 788)
        throw TruncatedFile("cache size does not match sample count: " + path);
    SampleCache cache;
    cache.classes.resize(class_count);  // names come from the sidecar, ids must stay valid
    std::size_t off = 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t label = rd_u16le(&data[off]);
        std::uint16_t len = rd_u16le(&data[off + 2]);
        if (len > 784) throw MalformedHeader("cached sample length field out of range");
        cache.labels.push_back(label);
        cache.payloads.emplace_back(data.begin() + static_cast<std::ptrdiff_t>(off + 4),
                                    data.begin() + static_cast<std::ptrdiff_t>(off + 4 + len));
        off += 788;
    }
    return cache;
}

void write_cache_meta(const std::string& path, const SampleCache& cache,
                      const std::vector<std::string>& origins) {
    nlohmann::json counts = nlohmann::json::object();
    for (std::size_t i = 0; i < cache.labels.size(); ++i) {
        const std::string& name = cache.classes.at(cache.labels[i]);
        counts[name] = counts.value(name, 0) + 1;
    }
    nlohmann::json j = {{"classes", cache.classes}, {"counts", counts}, {"origins", origins}};
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoFailure("cannot write cache meta: " + path);
    f << j.dump(2) << "\n";
}

std::vector<std::string> read_cache_classes(const std::string& meta_path) {
    std::ifstream f(meta_path);
    if (!f) throw IoFailure("cannot open cache meta: " + meta_path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw BadConfig("cache meta is not valid JSON: " + std::string(e.what()));
    }
    return j.at("classes").get<std::vector<std::string>>();
}

}  // namespace iotid
