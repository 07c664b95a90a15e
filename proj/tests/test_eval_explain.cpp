#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "iotid/errors.hpp"
#include "iotid/evaluation.hpp"
#include "iotid/explain.hpp"

using namespace iotid;
using nn::Vec;

namespace {

std::string temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "iotid_tests" / name;
    std::filesystem::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

// Linear scorer with a softmax on top of fixed logit rows; its expected
// gradients have a closed form, which pins the Monte Carlo estimator.
struct AffineProbe : DifferentiableModel {
    // probabilities are themselves affine here: p = W x + q (rows of W sum
    // to a distribution for every x in the test range)
    std::vector<Vec> w;
    Vec q;
    int num_classes() const override { return static_cast<int>(w.size()); }
    Vec probabilities(const Vec& x) override {
        Vec p(w.size());
        for (std::size_t c = 0; c < w.size(); ++c) {
            p[c] = q[c];
            for (std::size_t i = 0; i < x.size(); ++i) p[c] += w[c][i] * x[i];
        }
        return p;
    }
    Vec input_gradient(const Vec&, int cls) override { return w[static_cast<std::size_t>(cls)]; }
    std::string tag() const override { return "affine"; }
};

}  // namespace

TEST_CASE("metrics match a hand count") {
    std::vector<std::string> truth = {"A", "A", "B", "B"};
    std::vector<std::string> pred = {"A", "B", "B", "B"};
    MetricsReport r = compute_metrics(truth, pred);

    CHECK(r.sample_count == 4);
    CHECK(r.accuracy == doctest::Approx(0.75));
    CHECK(r.precision.at("A") == doctest::Approx(1.0));
    CHECK(r.recall.at("A") == doctest::Approx(0.5));
    CHECK(r.precision.at("B") == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall.at("B") == doctest::Approx(1.0));
    CHECK(r.macro_precision == doctest::Approx(5.0 / 6.0));
    CHECK(r.macro_recall == doctest::Approx(0.75));
}

TEST_CASE("classes seen only in predictions still enter the macro average") {
    std::vector<std::string> truth = {"A", "A", "A"};
    std::vector<std::string> pred = {"A", "A", "C"};
    MetricsReport r = compute_metrics(truth, pred);

    // C was never right and never true: both ratios are undefined -> 0
    CHECK(r.precision.at("C") == 0.0);
    CHECK(r.recall.at("C") == 0.0);
    CHECK(r.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(r.macro_precision == doctest::Approx((1.0 + 0.0) / 2.0));
    CHECK(r.macro_recall == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0));

    CHECK_THROWS_AS(compute_metrics({}, {}), EmptyDataset);
    CHECK_THROWS_AS(compute_metrics({"A"}, {}), ShapeMismatch);
}

TEST_CASE("perfect and degenerate predictions") {
    std::vector<std::string> truth = {"x", "y", "z"};
    MetricsReport perfect = compute_metrics(truth, truth);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_precision == 1.0);
    CHECK(perfect.macro_recall == 1.0);

    std::vector<std::string> all_x = {"x", "x", "x"};
    MetricsReport collapsed = compute_metrics(truth, all_x);
    CHECK(collapsed.accuracy == doctest::Approx(1.0 / 3.0));
    CHECK(collapsed.precision.at("x") == doctest::Approx(1.0 / 3.0));
    CHECK(collapsed.recall.at("x") == 1.0);
    CHECK(collapsed.recall.at("y") == 0.0);
}

TEST_CASE("confusion matrix counts and identities") {
    std::vector<std::string> truth = {"A", "A", "B", "B", "B", "C"};
    std::vector<std::string> pred = {"A", "B", "B", "B", "A", "C"};
    ConfusionMatrix cm = confusion(truth, pred, {"A", "B", "C"});

    REQUIRE(cm.counts.size() == 3);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.counts[0][1] == 1);
    CHECK(cm.counts[1][0] == 1);
    CHECK(cm.counts[1][1] == 2);
    CHECK(cm.counts[2][2] == 1);

    long long total = 0, diag = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            total += cm.counts[i][j];
            if (i == j) diag += cm.counts[i][j];
        }
    CHECK(total == 6);

    MetricsReport r = compute_metrics(truth, pred);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(diag) / total));

    SUBCASE("csv carries a header column and row per class") {
        auto text = confusion_csv(cm);
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);
        CHECK(line == "true\\pred,A,B,C");
        std::getline(is, line);
        CHECK(line == "A,1,1,0");
        std::getline(is, line);
        CHECK(line == "B,1,2,0");
        std::getline(is, line);
        CHECK(line == "C,0,0,1");
    }
    SUBCASE("normalized rows sum to about one") {
        auto text = confusion_normalized_csv(cm);
        CHECK(text.find("A,0.50,0.50,0.00") != std::string::npos);
        CHECK(text.find("B,0.33,0.67,0.00") != std::string::npos);
        CHECK(text.find("C,0.00,0.00,1.00") != std::string::npos);
    }
    SUBCASE("unknown labels are rejected") {
        CHECK_THROWS_AS(confusion(truth, pred, {"A", "B"}), UnknownLabel);
    }
}

TEST_CASE("metrics json is stable and parseable") {
    std::vector<std::string> truth = {"A", "A", "B"};
    std::vector<std::string> pred = {"A", "B", "B"};
    auto j1 = metrics_json(compute_metrics(truth, pred));
    auto j2 = metrics_json(compute_metrics(truth, pred));
    CHECK(j1 == j2);
    CHECK(j1.find("\"accuracy\"") != std::string::npos);
    CHECK(j1.find("\"macro_precision\"") != std::string::npos);
    CHECK(j1.find("\"per_class\"") != std::string::npos);
}

TEST_CASE("benchmark runs warmup plus measured repetitions") {
    std::size_t calls = 0;
    auto report = benchmark_inference("probe", [&](std::size_t) { ++calls; }, 150, 3);
    CHECK(calls == 150 * 4);  // one warm-up + three measured passes
    CHECK(report.method == "probe");
    CHECK(report.n == 150);
    CHECK(report.mean_ms >= 0.0);
    CHECK(report.std_ms >= 0.0);

    SUBCASE("too few samples is an error") {
        CHECK_THROWS_AS(benchmark_inference("probe", [](std::size_t) {}, 99, 1), BadConfig);
    }
    SUBCASE("latency json lists every method") {
        LatencyReport a{"alpha", 1.25, 0.1, 100};
        LatencyReport b{"beta", 2.5, 0.2, 100};
        auto text = latency_json({a, b});
        CHECK(text.find("alpha") != std::string::npos);
        CHECK(text.find("beta") != std::string::npos);
        CHECK(text.find("1.25") != std::string::npos);
    }
    SUBCASE("a slow function yields a larger mean than a fast one") {
        volatile double sink = 0.0;
        auto slow = benchmark_inference("slow", [&](std::size_t) {
            for (int i = 0; i < 40000; ++i) sink = sink + std::sqrt(static_cast<double>(i));
        }, 100, 2);
        auto fast = benchmark_inference("fast", [&](std::size_t) { sink = sink + 1.0; }, 100, 2);
        CHECK(slow.mean_ms > fast.mean_ms);
    }
}

TEST_CASE("expected gradients are exact for an affine model") {
    // For p_c affine in x the interpolation integral collapses and the
    // estimator must converge to w_c * (x - mean(background)).
    std::mt19937_64 rng(71);
    AffineProbe probe;
    int dim = 6;
    probe.w = {Vec(static_cast<std::size_t>(dim)), Vec(static_cast<std::size_t>(dim))};
    for (auto& row : probe.w)
        for (auto& v : row) v = std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
    probe.q = {0.5, 0.5};

    Vec x(static_cast<std::size_t>(dim));
    for (auto& v : x) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::vector<Vec> background;
    for (int b = 0; b < 4; ++b) {
        Vec bg(static_cast<std::size_t>(dim));
        for (auto& v : bg) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        background.push_back(bg);
    }

    AttributionMap map = expected_gradients(probe, x, background, 65536, 9);
    REQUIRE(map.scores.size() == x.size());
    CHECK(map.model_tag == "affine");

    Vec p = probe.probabilities(x);
    int cls = p[0] >= p[1] ? 0 : 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double mean_bg = 0.0;
        for (const auto& bg : background) mean_bg += bg[i];
        mean_bg /= static_cast<double>(background.size());
        double expect = probe.w[static_cast<std::size_t>(cls)][i] * (x[i] - mean_bg);
        CHECK(std::fabs(map.scores[i] - expect) <
              0.02 * std::max(std::fabs(expect), 1e-3));
    }

    SUBCASE("estimate is deterministic in the seed") {
        AttributionMap again = expected_gradients(probe, x, background, 65536, 9);
        CHECK(again.scores == map.scores);
        AttributionMap other = expected_gradients(probe, x, background, 65536, 10);
        CHECK(other.scores != map.scores);
    }
    SUBCASE("empty background is rejected") {
        CHECK_THROWS_AS(expected_gradients(probe, x, {}, 16, 1), EmptyDataset);
    }
}

TEST_CASE("attribution scores approximately complete the prediction gap") {
    // sum of attributions ~= f(x) - mean f(background) for a real network
    CnnGeometry g;
    g.hw = 8;
    g.c1 = 4;
    g.k1 = 3;
    g.c2 = 6;
    g.k2 = 2;
    g.fc1 = 16;
    g.fc2 = 8;
    g.n_classes = 2;
    CnnModel model(g, 5);
    CnnExplainAdapter adapter(model);

    std::mt19937_64 rng(73);
    Vec x(64);
    for (auto& v : x) v = static_cast<double>(rng() % 256) / 255.0;
    std::vector<Vec> background;
    for (int b = 0; b < 6; ++b) {
        Vec bg(64);
        for (auto& v : bg) v = static_cast<double>(rng() % 256) / 255.0;
        background.push_back(bg);
    }

    Vec p = model.forward(x);
    int cls = p[0] >= p[1] ? 0 : 1;
    double mean_bg = 0.0;
    for (const auto& bg : background) mean_bg += model.forward(bg)[static_cast<std::size_t>(cls)];
    mean_bg /= static_cast<double>(background.size());
    double gap = p[static_cast<std::size_t>(cls)] - mean_bg;

    AttributionMap map = expected_gradients(adapter, x, background, 1024, 11);
    double total = 0.0;
    for (double s : map.scores) total += s;
    CHECK(std::fabs(total - gap) < 0.1 * std::max(std::fabs(gap), 0.01));
}

TEST_CASE("importance aggregation and the report files") {
    AttributionMap m1, m2;
    m1.model_tag = m2.model_tag = "probe";
    m1.scores.assign(784, 0.0);
    m2.scores.assign(784, 0.0);
    // heavy first row, mild signal at byte 100; signs must not cancel
    for (int i = 0; i < 28; ++i) {
        m1.scores[static_cast<std::size_t>(i)] = 0.5;
        m2.scores[static_cast<std::size_t>(i)] = -0.5;
    }
    m1.scores[100] = 0.2;
    m2.scores[100] = 0.2;

    ImportanceSummary s = aggregate_importance({m1, m2});
    CHECK(s.model_tag == "probe");
    REQUIRE(s.byte_means.size() == 784);
    REQUIRE(s.row_means.size() == 28);
    CHECK(s.byte_means[0] == doctest::Approx(0.5));
    CHECK(s.byte_means[100] == doctest::Approx(0.2));
    CHECK(s.row_means[0] == doctest::Approx(0.5));
    CHECK(s.row_means[3] == doctest::Approx(0.2 / 28.0));
    CHECK(s.max_index == 0);
    CHECK(s.max_value == doctest::Approx(0.5));
    REQUIRE(s.peak_rows.size() == 1);
    CHECK(s.peak_rows[0] == 0);

    SUBCASE("aggregation is permutation invariant") {
        ImportanceSummary t = aggregate_importance({m2, m1});
        CHECK(t.byte_means == s.byte_means);
        CHECK(t.peak_rows == s.peak_rows);
    }
    SUBCASE("mixed shapes and tags are rejected") {
        AttributionMap bad;
        bad.model_tag = "probe";
        bad.scores.assign(10, 0.0);
        CHECK_THROWS_AS(aggregate_importance({m1, bad}), ShapeMismatch);
        AttributionMap other = m1;
        other.model_tag = "elsewhere";
        CHECK_THROWS_AS(aggregate_importance({m1, other}), BadConfig);
        CHECK_THROWS_AS(aggregate_importance({}), EmptyDataset);
    }
    SUBCASE("short inputs fall back to a single row") {
        AttributionMap small;
        small.model_tag = "probe";
        small.scores = {1.0, 2.0, 3.0};
        ImportanceSummary t = aggregate_importance({small});
        REQUIRE(t.row_means.size() == 1);
        CHECK(t.row_means[0] == doctest::Approx(2.0));
    }
    SUBCASE("report files have the documented shapes") {
        auto dir = temp_dir("explain_report");
        importance_report(s, dir);

        auto bytes_csv = slurp(std::filesystem::path(dir) / "importance_bytes.csv");
        CHECK(count_lines(bytes_csv) == 785);  // header + 784
        CHECK(bytes_csv.rfind("byte_index,row,column,mean_abs_score\n", 0) == 0);

        auto rows_csv = slurp(std::filesystem::path(dir) / "importance_rows.csv");
        CHECK(count_lines(rows_csv) == 29);  // header + 28
        CHECK(rows_csv.rfind("row,mean_abs_score,peak\n", 0) == 0);
        CHECK(rows_csv.find("0,0.5,1") != std::string::npos);

        auto summary = slurp(std::filesystem::path(dir) / "importance_summary.json");
        for (const char* key : {"\"model\"", "\"max_index\"", "\"max_value\"", "\"mean_value\"",
                                "\"peak_rows\""})
            CHECK(summary.find(key) != std::string::npos);
    }
}
