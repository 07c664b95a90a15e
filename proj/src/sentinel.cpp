#include "iotid/sentinel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "iotid/errors.hpp"

namespace iotid {

const char* const kPacketFeatureNames[kPacketFeatureCount] = {
    "arp",        "llc",  "ip",       "icmp",     "icmpv6",
    "eapol",      "tcp",  "udp",      "http",     "https",
    "dhcp",       "bootp", "ssdp",    "dns",      "mdns",
    "ntp",        "ip_padding",       "ip_router_alert",
    "size",       "raw_data",         "dest_ip_counter",
    "src_port_class",                 "dst_port_class"};

std::array<double, 23> PacketFeatureVector::to_array() const {
    return {static_cast<double>(arp),
            static_cast<double>(llc),
            static_cast<double>(ip),
            static_cast<double>(icmp),
            static_cast<double>(icmpv6),
            static_cast<double>(eapol),
            static_cast<double>(tcp),
            static_cast<double>(udp),
            static_cast<double>(http),
            static_cast<double>(https),
            static_cast<double>(dhcp),
            static_cast<double>(bootp),
            static_cast<double>(ssdp),
            static_cast<double>(dns),
            static_cast<double>(mdns),
            static_cast<double>(ntp),
            static_cast<double>(ip_padding),
            static_cast<double>(ip_router_alert),
            static_cast<double>(size),
            static_cast<double>(raw_data),
            static_cast<double>(dest_ip_counter),
            static_cast<double>(src_port_class),
            static_cast<double>(dst_port_class)};
}

std::string PacketFeatureVector::key() const {
    auto a = to_array();
    std::string s;
    for (double v : a) {
        s += std::to_string(static_cast<long long>(v));
        s += ',';
    }
    return s;
}

int port_class(std::uint16_t port) {
    if (port <= 1023) return 1;
    if (port <= 49151) return 2;
    return 3;
}

Fingerprint extract_fingerprint(const std::vector<ParsedPacket>& packets) {
    Fingerprint fp;
    std::set<IpAddr> dests;
    for (const auto& p : packets) {
        if (p.dst_ip) dests.insert(*p.dst_ip);
        PacketFeatureVector f;
        f.arp = p.link == LinkType::ArpBearing;
        f.llc = p.link == LinkType::LLC;
        f.ip = p.network != NetProto::None;
        f.icmp = p.is_icmp;
        f.icmpv6 = p.is_icmpv6;
        f.eapol = p.is_eapol;
        f.tcp = p.transport == Transport::TCP;
        f.udp = p.transport == Transport::UDP;
        f.http = p.app_protocols.count(AppProto::HTTP) > 0;
        f.https = p.app_protocols.count(AppProto::HTTPS) > 0;
        f.dhcp = p.app_protocols.count(AppProto::DHCP) > 0;
        f.bootp = p.app_protocols.count(AppProto::BOOTP) > 0;
        f.ssdp = p.app_protocols.count(AppProto::SSDP) > 0;
        f.dns = p.app_protocols.count(AppProto::DNS) > 0;
        f.mdns = p.app_protocols.count(AppProto::MDNS) > 0;
        f.ntp = p.app_protocols.count(AppProto::NTP) > 0;
        f.ip_padding = p.opt_padding;
        f.ip_router_alert = p.opt_router_alert;
        f.size = p.size;
        f.raw_data = !p.payload.empty();
        f.dest_ip_counter = static_cast<std::uint32_t>(dests.size());
        f.src_port_class = p.src_port ? static_cast<std::uint8_t>(port_class(*p.src_port)) : 0;
        f.dst_port_class = p.dst_port ? static_cast<std::uint8_t>(port_class(*p.dst_port)) : 0;
        if (fp.columns.empty() || !(fp.columns.back() == f)) fp.columns.push_back(f);
    }
    return fp;
}

std::vector<double> flatten_fingerprint(const Fingerprint& fp, int max_packets) {
    if (max_packets <= 0) throw BadConfig("max_packets must be positive");
    std::vector<double> out(static_cast<std::size_t>(max_packets) * 23, 0.0);
    std::size_t n = std::min<std::size_t>(fp.columns.size(), static_cast<std::size_t>(max_packets));
    for (std::size_t c = 0; c < n; ++c) {
        auto a = fp.columns[c].to_array();
        std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(c * 23));
    }
    return out;
}

std::string fingerprint_csv(const Fingerprint& fp) {
    std::ostringstream os;
    for (int i = 0; i < kPacketFeatureCount; ++i) os << (i ? "," : "") << kPacketFeatureNames[i];
    os << "\n";
    for (const auto& col : fp.columns) {
        auto a = col.to_array();
        for (int i = 0; i < kPacketFeatureCount; ++i) {
            if (i) os << ",";
            os << static_cast<long long>(a[static_cast<std::size_t>(i)]);
        }
        os << "\n";
    }
    return os.str();
}

double DecisionTree::predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].prob;
}

double RandomForest::predict_proba(const std::vector<double>& x) const {
    if (trees.empty()) throw NotTrained("forest has no trees");
    if (static_cast<int>(x.size()) != dim) throw ShapeMismatch("forest input dimension mismatch");
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
}

namespace {

struct TreeBuilder {
    const std::vector<const std::vector<double>*>& xs;
    const std::vector<int>& ys;
    int dim;
    int min_leaf;
    std::mt19937_64& rng;
    std::vector<TreeNode> nodes;

    static double gini(int pos, int total) {
        if (total == 0) return 0.0;
        double p = static_cast<double>(pos) / total;
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<int>& idx) {
        int pos = 0;
        for (int i : idx) pos += ys[static_cast<std::size_t>(i)];
        int total = static_cast<int>(idx.size());

        auto make_leaf = [&]() {
            TreeNode leaf;
            leaf.prob = total ? static_cast<double>(pos) / total : 0.0;
            nodes.push_back(leaf);
            return static_cast<int>(nodes.size()) - 1;
        };
        if (pos == 0 || pos == total || total < 2 * min_leaf) return make_leaf();

        // sqrt(d) feature candidates, sampled without replacement
        int n_cand = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(dim))));
        std::vector<int> features(static_cast<std::size_t>(dim));
        std::iota(features.begin(), features.end(), 0);
        for (int i = 0; i < n_cand; ++i) {
            std::uniform_int_distribution<int> pick(i, dim - 1);
            std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(pick(rng))]);
        }

        double base = gini(pos, total);
        double best_gain = 1e-12;  // require strict improvement
        int best_f = -1;
        double best_thr = 0.0;

        std::vector<std::pair<double, int>> vals;
        for (int ci = 0; ci < n_cand; ++ci) {
            int f = features[static_cast<std::size_t>(ci)];
            vals.clear();
            for (int i : idx)
                vals.emplace_back((*xs[static_cast<std::size_t>(i)])[static_cast<std::size_t>(f)],
                                  ys[static_cast<std::size_t>(i)]);
            std::sort(vals.begin(), vals.end());
            int lpos = 0;
            for (int k = 0; k + 1 < total; ++k) {
                lpos += vals[static_cast<std::size_t>(k)].second;
                if (vals[static_cast<std::size_t>(k)].first ==
                    vals[static_cast<std::size_t>(k + 1)].first)
                    continue;
                int ln = k + 1, rn = total - ln;
                if (ln < min_leaf || rn < min_leaf) continue;
                double g = base -
                           (static_cast<double>(ln) / total) * gini(lpos, ln) -
                           (static_cast<double>(rn) / total) * gini(pos - lpos, rn);
                if (g > best_gain) {  // first strict winner kept on ties
                    best_gain = g;
                    best_f = f;
                    best_thr = 0.5 * (vals[static_cast<std::size_t>(k)].first +
                                      vals[static_cast<std::size_t>(k + 1)].first);
                }
            }
        }
        if (best_f < 0) return make_leaf();

        std::vector<int> left, right;
        for (int i : idx)
            ((*xs[static_cast<std::size_t>(i)])[static_cast<std::size_t>(best_f)] <= best_thr
                 ? left
                 : right)
                .push_back(i);
        if (static_cast<int>(left.size()) < min_leaf || static_cast<int>(right.size()) < min_leaf)
            return make_leaf();

        TreeNode node;
        node.feature = best_f;
        node.threshold = best_thr;
        nodes.push_back(node);
        int self = static_cast<int>(nodes.size()) - 1;
        nodes[static_cast<std::size_t>(self)].left = build(left);
        nodes[static_cast<std::size_t>(self)].right = build(right);
        return self;
    }
};

}  // namespace

RandomForest train_random_forest(const std::vector<std::vector<double>>& positives,
                                 const std::vector<std::vector<double>>& negatives,
                                 const ForestParams& params, std::uint64_t seed) {
    if (positives.empty() || negatives.empty()) throw EmptyDataset("both classes need samples");
    std::size_t dim = positives[0].size();
    std::vector<const std::vector<double>*> xs;
    std::vector<int> ys;
    for (const auto& v : positives) {
        if (v.size() != dim) throw ShapeMismatch("inconsistent feature dimension");
        xs.push_back(&v);
        ys.push_back(1);
    }
    for (const auto& v : negatives) {
        if (v.size() != dim) throw ShapeMismatch("inconsistent feature dimension");
        xs.push_back(&v);
        ys.push_back(0);
    }

    RandomForest forest;
    forest.dim = static_cast<int>(dim);
    std::mt19937_64 master(seed);
    int n = static_cast<int>(xs.size());
    for (int t = 0; t < params.n_trees; ++t) {
        std::mt19937_64 tree_rng(master());
        std::vector<int> sample(static_cast<std::size_t>(n));
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (auto& s : sample) s = pick(tree_rng);
        TreeBuilder builder{xs, ys, forest.dim, params.min_leaf, tree_rng, {}};
        builder.build(sample);
        DecisionTree tree;
        tree.nodes = std::move(builder.nodes);
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

BaselineClassifier train_baseline(const std::vector<Fingerprint>& fingerprints,
                                  const ForestParams& params, int max_packets,
                                  std::uint64_t seed) {
    if (fingerprints.empty()) throw EmptyDataset("no training fingerprints");
    BaselineClassifier clf;
    clf.max_packets = max_packets;

    std::set<std::string> type_set;
    for (const auto& fp : fingerprints) {
        if (fp.label.empty()) throw UnknownLabel("training fingerprint without a label");
        type_set.insert(fp.label);
    }
    clf.types.assign(type_set.begin(), type_set.end());

    int next_symbol = 1;
    for (const auto& fp : fingerprints)
        for (const auto& col : fp.columns) {
            auto [it, fresh] = clf.symbol_table.emplace(col.key(), next_symbol);
            if (fresh) ++next_symbol;
        }
    for (const auto& fp : fingerprints)
        clf.references[fp.label].push_back(symbolize(fp, clf.symbol_table));

    std::map<std::string, std::vector<std::vector<double>>> flat;
    for (const auto& fp : fingerprints)
        flat[fp.label].push_back(flatten_fingerprint(fp, max_packets));

    std::mt19937_64 master(seed);
    for (const auto& type : clf.types) {
        std::uint64_t forest_seed = master();
        std::vector<std::vector<double>> pos = flat[type], neg;
        for (const auto& [other, vecs] : flat)
            if (other != type) neg.insert(neg.end(), vecs.begin(), vecs.end());
        RandomForest f = train_random_forest(pos, neg, params, forest_seed);
        f.positive_type = type;
        clf.forests.emplace(type, std::move(f));
    }
    clf.trained = true;
    return clf;
}

std::vector<int> symbolize(const Fingerprint& fp, const std::map<std::string, int>& table) {
    std::vector<int> out;
    out.reserve(fp.columns.size());
    for (const auto& col : fp.columns) {
        auto it = table.find(col.key());
        out.push_back(it == table.end() ? 0 : it->second);
    }
    return out;
}

int damerau_levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t m = a.size(), n = b.size();
    std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
    for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= m; ++i)
        for (std::size_t j = 1; j <= n; ++j) {
            int cost = a[i - 1] == b[j - 1] ? 0 : 1;
            int best = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
                best = std::min(best, d[i - 2][j - 2] + 1);
            d[i][j] = best;
        }
    return d[m][n];
}

std::set<std::string> candidate_types(const BaselineClassifier& clf, const Fingerprint& fp) {
    if (!clf.trained) throw NotTrained("baseline classifier not trained");
    std::vector<double> x = flatten_fingerprint(fp, clf.max_packets);
    std::set<std::string> out;
    for (const auto& [type, forest] : clf.forests)
        if (forest.predict_proba(x) >= 0.5) out.insert(type);
    return out;
}

std::string discriminate(const BaselineClassifier& clf, const Fingerprint& fp,
                         const std::set<std::string>& candidates) {
    if (candidates.empty()) throw EmptyDataset("no candidates to discriminate");
    std::vector<int> sym = symbolize(fp, clf.symbol_table);
    std::string best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& type : candidates) {  // set iterates lexicographically: ties keep first
        auto it = clf.references.find(type);
        if (it == clf.references.end() || it->second.empty()) continue;
        double sum = 0.0;
        for (const auto& ref : it->second) {
            double norm = static_cast<double>(std::max({sym.size(), ref.size(), std::size_t{1}}));
            sum += damerau_levenshtein(sym, ref) / norm;
        }
        double mean = sum / static_cast<double>(it->second.size());
        if (mean < best_dist) {
            best_dist = mean;
            best = type;
        }
    }
    if (best.empty()) throw EmptyDataset("candidates have no reference fingerprints");
    return best;
}

std::string baseline_predict(const BaselineClassifier& clf, const Fingerprint& fp) {
    std::set<std::string> cands = candidate_types(clf, fp);
    if (cands.empty()) cands.insert(clf.types.begin(), clf.types.end());
    return discriminate(clf, fp, cands);
}

std::string classifier_to_json(const BaselineClassifier& clf) {
    nlohmann::json j;
    j["version"] = 1;
    j["max_packets"] = clf.max_packets;
    j["types"] = clf.types;
    nlohmann::json forests = nlohmann::json::object();
    for (const auto& [type, forest] : clf.forests) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : forest.trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.prob});
            trees.push_back(std::move(nodes));
        }
        forests[type] = {{"dim", forest.dim}, {"trees", std::move(trees)}};
    }
    j["forests"] = std::move(forests);
    j["symbols"] = clf.symbol_table;
    nlohmann::json refs = nlohmann::json::object();
    for (const auto& [type, seqs] : clf.references) refs[type] = seqs;
    j["references"] = std::move(refs);
    return j.dump();
}

BaselineClassifier classifier_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedHeader("classifier JSON unreadable: " + std::string(e.what()));
    }
    if (j.value("version", 0) != 1) throw MalformedHeader("unsupported classifier version");
    BaselineClassifier clf;
    clf.max_packets = j.at("max_packets").get<int>();
    clf.types = j.at("types").get<std::vector<std::string>>();
    for (const auto& [type, fj] : j.at("forests").items()) {
        RandomForest forest;
        forest.dim = fj.at("dim").get<int>();
        forest.positive_type = type;
        for (const auto& tj : fj.at("trees")) {
            DecisionTree tree;
            for (const auto& nj : tj) {
                TreeNode n;
                n.feature = nj.at(0).get<int>();
                n.threshold = nj.at(1).get<double>();
                n.left = nj.at(2).get<int>();
                n.right = nj.at(3).get<int>();
                n.prob = nj.at(4).get<double>();
                tree.nodes.push_back(n);
            }
            forest.trees.push_back(std::move(tree));
        }
        clf.forests.emplace(type, std::move(forest));
    }
    clf.symbol_table = j.at("symbols").get<std::map<std::string, int>>();
    for (const auto& [type, seqs] : j.at("references").items())
        clf.references[type] = seqs.get<std::vector<std::vector<int>>>();
    clf.trained = true;
    return clf;
}

}  // namespace iotid
