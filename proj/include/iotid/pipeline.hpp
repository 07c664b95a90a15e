#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "iotid/models.hpp"
#include "iotid/representation.hpp"
#include "iotid/sentinel.hpp"

namespace iotid {

// End-to-end plumbing from capture manifests to model-ready datasets. The
// command-line driver and the test harnesses share these.

// Capture paths in manifests may be relative to the manifest's directory.
std::string resolve_against(const std::string& path, const std::string& base_file);

// Per-capture sanitizer seed, derived so captures keep their mapping when
// the manifest grows.
std::uint64_t capture_seed(const std::string& setup_id, std::uint64_t master);

// Read, parse and time-order one capture.
std::vector<ParsedPacket> load_parsed(const std::string& pcap_path);

enum class Granularity { Session, Setup };

struct IngestResult {
    SampleCache cache;
    std::vector<std::string> origins;  // "<setup_id>#<index>" per sample
    std::map<std::string, std::size_t> counts;
};

// pcaps -> sanitized -> filtered -> sessions (deduplicated corpus-wide) ->
// byte samples. Setup granularity takes one sample per capture instead.
IngestResult ingest_manifest(const std::vector<ManifestEntry>& entries, Granularity granularity,
                             std::uint64_t seed, std::size_t limit,
                             const std::string& manifest_path, std::ostream* sanitize_log = nullptr);

struct LabeledFingerprint {
    Fingerprint fp;
    std::string setup_id;
};

// Per-packet feature fingerprints of whole captures (unfiltered packets),
// sanitized with the same per-capture seeds as ingest.
std::vector<LabeledFingerprint> load_fingerprints(const std::vector<ManifestEntry>& entries,
                                                  std::uint64_t seed,
                                                  const std::string& manifest_path);

// Stratified split over arbitrary label lists; returns index sets. Runs on
// placeholder samples so it splits exactly like the sample splitter.
std::pair<std::vector<int>, std::vector<int>> split_indices(const std::vector<std::string>& labels,
                                                            double ratio, std::uint64_t seed);

struct NnDataset {
    std::vector<std::string> classes;
    std::vector<NnSample> train, test;
    std::vector<std::string> train_labels, test_labels;  // class names, aligned
    std::map<int, double> weights;                       // from train counts
};

NnSample to_nn_sample(const Bytes& bytes, int label);

// Cache file + sidecar -> split, normalized dataset with class weights.
NnDataset load_nn_dataset(const std::string& cache_path, double ratio, std::uint64_t seed);
NnDataset split_nn_dataset(const SampleCache& cache, const std::vector<std::string>& classes,
                           double ratio, std::uint64_t seed);

}  // namespace iotid
