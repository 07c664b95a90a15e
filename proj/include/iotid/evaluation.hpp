#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace iotid {

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    std::map<std::string, double> precision, recall;
    std::size_t sample_count = 0;
};

struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<long long>> counts;  // [true][predicted]
};

struct LatencyReport {
    std::string method;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    std::size_t n = 0;  // distinct samples measured
};

// Accuracy plus one-vs-rest macro precision/recall. Classes that appear in
// neither list do not exist here; undefined ratios count as 0.
MetricsReport compute_metrics(const std::vector<std::string>& truths,
                              const std::vector<std::string>& predictions);

ConfusionMatrix confusion(const std::vector<std::string>& truths,
                          const std::vector<std::string>& predictions,
                          const std::vector<std::string>& classes);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string confusion_normalized_csv(const ConfusionMatrix& cm);  // row-normalized, 2 decimals

std::string metrics_json(const MetricsReport& report);

// Wall-clock per-sample time of `identify_one(sample_index)`, single thread.
// Every sample runs once unmeasured (warm-up), then `repetitions` measured
// passes over all samples.
LatencyReport benchmark_inference(const std::string& method,
                                  const std::function<void(std::size_t)>& identify_one,
                                  std::size_t n_samples, int repetitions);

std::string latency_json(const std::vector<LatencyReport>& reports);

}  // namespace iotid
