#include "iotid/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iotid/errors.hpp"

namespace iotid {

MetricsReport compute_metrics(const std::vector<std::string>& truths,
                              const std::vector<std::string>& predictions) {
    if (truths.size() != predictions.size())
        throw ShapeMismatch("truth/prediction length mismatch");
    if (truths.empty()) throw EmptyDataset("no samples to score");

    std::set<std::string> classes(truths.begin(), truths.end());
    classes.insert(predictions.begin(), predictions.end());

    MetricsReport rep;
    rep.sample_count = truths.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (truths[i] == predictions[i]) ++correct;
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(truths.size());

    for (const auto& c : classes) {
        long long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            bool t = truths[i] == c, p = predictions[i] == c;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        rep.precision[c] = prec;
        rep.recall[c] = rec;
        rep.macro_precision += prec;
        rep.macro_recall += rec;
    }
    rep.macro_precision /= static_cast<double>(classes.size());
    rep.macro_recall /= static_cast<double>(classes.size());
    return rep;
}

ConfusionMatrix confusion(const std::vector<std::string>& truths,
                          const std::vector<std::string>& predictions,
                          const std::vector<std::string>& classes) {
    if (truths.size() != predictions.size())
        throw ShapeMismatch("truth/prediction length mismatch");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;

    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(classes.size(), std::vector<long long>(classes.size(), 0));
    for (std::size_t i = 0; i < truths.size(); ++i) {
        auto t = index.find(truths[i]);
        auto p = index.find(predictions[i]);
        if (t == index.end()) throw UnknownLabel("truth label not in class list: " + truths[i]);
        if (p == index.end())
            throw UnknownLabel("predicted label not in class list: " + predictions[i]);
        ++cm.counts[t->second][p->second];
    }
    return cm;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& c : cm.classes) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < cm.classes.size(); ++r) {
        os << cm.classes[r];
        for (long long v : cm.counts[r]) os << "," << v;
        os << "\n";
    }
    return os.str();
}

std::string confusion_normalized_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& c : cm.classes) os << "," << c;
    os << "\n";
    char buf[16];
    for (std::size_t r = 0; r < cm.classes.size(); ++r) {
        long long total = 0;
        for (long long v : cm.counts[r]) total += v;
        os << cm.classes[r];
        for (long long v : cm.counts[r]) {
            double f = total ? static_cast<double>(v) / static_cast<double>(total) : 0.0;
            std::snprintf(buf, sizeof buf, "%.2f", f);
            os << "," << buf;
        }
        os << "\n";
    }
    return os.str();
}

std::string metrics_json(const MetricsReport& report) {
    nlohmann::json j;
    j["accuracy"] = report.accuracy;
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    j["per_class"] = nlohmann::json::object();
    for (const auto& [c, p] : report.precision)
        j["per_class"][c] = {{"precision", p}, {"recall", report.recall.at(c)}};
    j["samples"] = report.sample_count;
    return j.dump(2);
}

LatencyReport benchmark_inference(const std::string& method,
                                  const std::function<void(std::size_t)>& identify_one,
                                  std::size_t n_samples, int repetitions) {
    if (n_samples < 100) throw BadConfig("latency benchmark needs at least 100 samples");
    if (repetitions < 1) throw BadConfig("repetitions must be positive");

    for (std::size_t i = 0; i < n_samples; ++i) identify_one(i);  // warm-up, unmeasured

    std::vector<double> times_ms;
    times_ms.reserve(n_samples * static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r)
        for (std::size_t i = 0; i < n_samples; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            identify_one(i);
            auto t1 = std::chrono::steady_clock::now();
            times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }

    double mean = 0.0;
    for (double t : times_ms) mean += t;
    mean /= static_cast<double>(times_ms.size());
    double var = 0.0;
    for (double t : times_ms) var += (t - mean) * (t - mean);
    var /= static_cast<double>(times_ms.size());

    LatencyReport rep;
    rep.method = method;
    rep.mean_ms = mean;
    rep.std_ms = std::sqrt(var);
    rep.n = n_samples;
    return rep;
}

std::string latency_json(const std::vector<LatencyReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports)
        j.push_back({{"method", r.method}, {"mean_ms", r.mean_ms}, {"std_ms", r.std_ms}, {"n", r.n}});
    return j.dump(2);
}

}  // namespace iotid
