#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "iotid/packet.hpp"

namespace iotid {

// The 23 per-packet features of the hand-crafted identification pipeline.
struct PacketFeatureVector {
    std::uint8_t arp = 0, llc = 0;
    std::uint8_t ip = 0, icmp = 0, icmpv6 = 0, eapol = 0;
    std::uint8_t tcp = 0, udp = 0;
    std::uint8_t http = 0, https = 0, dhcp = 0, bootp = 0, ssdp = 0, dns = 0, mdns = 0, ntp = 0;
    std::uint8_t ip_padding = 0, ip_router_alert = 0;
    std::uint32_t size = 0;
    std::uint8_t raw_data = 0;
    std::uint32_t dest_ip_counter = 0;  // distinct destination IPs seen so far
    std::uint8_t src_port_class = 0, dst_port_class = 0;  // 0 none, 1 well-known, 2 registered, 3 dynamic

    std::array<double, 23> to_array() const;
    bool operator==(const PacketFeatureVector&) const = default;
    std::string key() const;  // stable text form, used for symbolization
};

constexpr int kPacketFeatureCount = 23;
extern const char* const kPacketFeatureNames[kPacketFeatureCount];

struct Fingerprint {
    std::vector<PacketFeatureVector> columns;  // consecutive duplicates removed
    std::string label;  // empty if unknown
};

int port_class(std::uint16_t port);

// One feature column per packet, consecutive identical columns collapsed.
Fingerprint extract_fingerprint(const std::vector<ParsedPacket>& packets);

// Fixed-width forest input: first max_packets columns, zero-padded.
std::vector<double> flatten_fingerprint(const Fingerprint& fp, int max_packets);

std::string fingerprint_csv(const Fingerprint& fp);

// ---- random forest ----

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double prob = 0.0;  // positive-class fraction at a leaf
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    double predict(const std::vector<double>& x) const;
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    int dim = 0;
    std::string positive_type;

    double predict_proba(const std::vector<double>& x) const;
};

struct ForestParams {
    int n_trees = 100;
    int min_leaf = 2;
};

RandomForest train_random_forest(const std::vector<std::vector<double>>& positives,
                                 const std::vector<std::vector<double>>& negatives,
                                 const ForestParams& params, std::uint64_t seed);

// ---- two-step classifier ----

struct BaselineClassifier {
    int max_packets = 32;
    std::vector<std::string> types;  // sorted
    std::map<std::string, RandomForest> forests;
    std::map<std::string, std::vector<std::vector<int>>> references;  // symbolized per type
    std::map<std::string, int> symbol_table;  // column key -> symbol id (1-based; 0 = unseen)
    bool trained = false;
};

BaselineClassifier train_baseline(const std::vector<Fingerprint>& fingerprints,
                                  const ForestParams& params, int max_packets,
                                  std::uint64_t seed);

std::vector<int> symbolize(const Fingerprint& fp, const std::map<std::string, int>& table);

// Optimal string alignment flavor: insertions, deletions, substitutions and
// immediate transpositions, each substring edited at most once.
int damerau_levenshtein(const std::vector<int>& a, const std::vector<int>& b);

std::set<std::string> candidate_types(const BaselineClassifier& clf, const Fingerprint& fp);

// Candidate with the smallest mean length-normalized edit distance to its
// reference fingerprints; ties go to the lexicographically first name.
std::string discriminate(const BaselineClassifier& clf, const Fingerprint& fp,
                         const std::set<std::string>& candidates);

std::string baseline_predict(const BaselineClassifier& clf, const Fingerprint& fp);

std::string classifier_to_json(const BaselineClassifier& clf);
BaselineClassifier classifier_from_json(const std::string& text);

}  // namespace iotid
