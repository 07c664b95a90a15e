#include "iotid/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "iotid/bytes.hpp"
#include "iotid/errors.hpp"
#include "iotid/pcap.hpp"
#include "iotid/session.hpp"

namespace iotid {

namespace fs = std::filesystem;

std::string resolve_against(const std::string& path, const std::string& base_file) {
    fs::path p(path);
    if (p.is_absolute() || fs::exists(p)) return path;
    return (fs::path(base_file).parent_path() / p).string();
}

std::uint64_t capture_seed(const std::string& setup_id, std::uint64_t master) {
    return fnv1a64(setup_id) ^ master;
}

std::vector<ParsedPacket> load_parsed(const std::string& pcap_path) {
    PcapFile pf = read_pcap(pcap_path);
    std::vector<ParsedPacket> parsed;
    parsed.reserve(pf.packets.size());
    for (const auto& raw : pf.packets) parsed.push_back(parse_packet(raw));
    std::stable_sort(parsed.begin(), parsed.end(),
                     [](const ParsedPacket& a, const ParsedPacket& b) {
                         return a.timestamp_micros < b.timestamp_micros;
                     });
    return parsed;
}

IngestResult ingest_manifest(const std::vector<ManifestEntry>& entries, Granularity granularity,
                             std::uint64_t seed, std::size_t limit,
                             const std::string& manifest_path, std::ostream* sanitize_log) {
    std::vector<Session> all_sessions;
    std::vector<LabeledSample> samples;
    for (const auto& entry : entries) {
        auto parsed = load_parsed(resolve_against(entry.pcap_path, manifest_path));
        auto [sanitized, map] = sanitize(std::move(parsed), capture_seed(entry.setup_id, seed));
        if (sanitize_log) *sanitize_log << "# " << entry.setup_id << "\n" << sanitizer_map_text(map);
        auto filtered = filter_packets(sanitized);
        if (granularity == Granularity::Setup) {
            Bytes stream;
            for (const auto& pkt : filtered) {
                std::size_t take = std::min(limit - stream.size(), pkt.payload.size());
                stream.insert(stream.end(), pkt.payload.begin(), pkt.payload.begin() + take);
                if (stream.size() >= limit) break;
            }
            if (!stream.empty())
                samples.push_back(LabeledSample{stream, entry.device_type, entry.setup_id, -1});
        } else {
            auto sessions = assemble_sessions(filtered);
            for (auto& s : sessions) {
                s.label = entry.device_type;
                s.setup_id = entry.setup_id;
                all_sessions.push_back(std::move(s));
            }
        }
    }

    if (granularity == Granularity::Session) {
        auto kept = dedup_sessions(all_sessions);
        int idx = 0;
        for (const auto& s : kept)
            samples.push_back(LabeledSample{session_bytes(s, limit), s.label, s.setup_id, idx++});
    }
    if (samples.empty()) throw EmptyDataset("ingest produced no samples");

    std::set<std::string> class_set;
    for (const auto& s : samples) class_set.insert(s.label);
    IngestResult res;
    res.cache.classes.assign(class_set.begin(), class_set.end());
    std::map<std::string, std::uint16_t> id_of;
    for (std::size_t i = 0; i < res.cache.classes.size(); ++i)
        id_of[res.cache.classes[i]] = static_cast<std::uint16_t>(i);
    for (const auto& s : samples) {
        res.cache.labels.push_back(id_of[s.label]);
        Bytes b = s.bytes;
        if (b.size() > 784) b.resize(784);
        res.cache.payloads.push_back(std::move(b));
        res.origins.push_back(s.setup_id + "#" + std::to_string(s.session_index));
        res.counts[s.label]++;
    }
    return res;
}

std::vector<LabeledFingerprint> load_fingerprints(const std::vector<ManifestEntry>& entries,
                                                  std::uint64_t seed,
                                                  const std::string& manifest_path) {
    std::vector<LabeledFingerprint> out;
    for (const auto& entry : entries) {
        auto parsed = load_parsed(resolve_against(entry.pcap_path, manifest_path));
        auto [sanitized, map] = sanitize(std::move(parsed), capture_seed(entry.setup_id, seed));
        LabeledFingerprint lf;
        lf.fp = extract_fingerprint(sanitized);
        lf.fp.label = entry.device_type;
        lf.setup_id = entry.setup_id;
        out.push_back(std::move(lf));
    }
    if (out.empty()) throw EmptyDataset("manifest has no entries");
    return out;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(const std::vector<std::string>& labels,
                                                            double ratio, std::uint64_t seed) {
    std::vector<LabeledSample> dummies;
    for (std::size_t i = 0; i < labels.size(); ++i)
        dummies.push_back(LabeledSample{{}, labels[i], "", static_cast<int>(i)});
    auto [tr, te] = split_dataset(dummies, ratio, seed);
    std::pair<std::vector<int>, std::vector<int>> out;
    for (const auto& s : tr) out.first.push_back(s.session_index);
    for (const auto& s : te) out.second.push_back(s.session_index);
    return out;
}

NnSample to_nn_sample(const Bytes& bytes, int label) {
    ByteSequence seq = to_sequence(to_image(bytes));
    return NnSample{std::vector<double>(seq.values.begin(), seq.values.end()), label};
}

NnDataset split_nn_dataset(const SampleCache& cache, const std::vector<std::string>& classes,
                           double ratio, std::uint64_t seed) {
    NnDataset ds;
    ds.classes = classes;
    std::vector<std::string> labels;
    for (auto id : cache.labels) {
        if (id >= ds.classes.size()) throw UnknownLabel("cache label id out of range");
        labels.push_back(ds.classes[id]);
    }
    auto [tr_idx, te_idx] = split_indices(labels, ratio, seed);
    std::map<std::string, std::size_t> train_counts;
    for (int i : tr_idx) {
        ds.train.push_back(to_nn_sample(cache.payloads[i], cache.labels[i]));
        ds.train_labels.push_back(labels[i]);
        train_counts[labels[i]]++;
    }
    for (int i : te_idx) {
        ds.test.push_back(to_nn_sample(cache.payloads[i], cache.labels[i]));
        ds.test_labels.push_back(labels[i]);
    }
    ClassWeights w = compute_class_weights(train_counts);
    for (std::size_t i = 0; i < ds.classes.size(); ++i) {
        auto it = w.find(ds.classes[i]);
        if (it != w.end()) ds.weights[static_cast<int>(i)] = it->second;
    }
    return ds;
}

NnDataset load_nn_dataset(const std::string& cache_path, double ratio, std::uint64_t seed) {
    SampleCache cache = read_sample_cache(cache_path);
    return split_nn_dataset(cache, read_cache_classes(cache_path + ".meta.json"), ratio, seed);
}

}  // namespace iotid
