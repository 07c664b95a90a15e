#include "iotid/explain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "iotid/errors.hpp"

namespace iotid {

AttributionMap expected_gradients(DifferentiableModel& model, const nn::Vec& x,
                                  const std::vector<nn::Vec>& background, int n_draws,
                                  std::uint64_t seed) {
    if (background.empty()) throw EmptyDataset("attribution needs a background set");
    if (n_draws < 1) throw BadConfig("n_draws must be positive");
    for (const auto& b : background)
        if (b.size() != x.size()) throw ShapeMismatch("background sample size mismatch");

    nn::Vec probs = model.probabilities(x);
    int cls = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, background.size() - 1);
    std::uniform_real_distribution<double> alpha_dist(0.0, 1.0);

    AttributionMap map;
    map.scores.assign(x.size(), 0.0);
    map.model_tag = model.tag();
    nn::Vec z(x.size());
    for (int d = 0; d < n_draws; ++d) {
        const nn::Vec& xp = background[pick(rng)];
        double alpha = alpha_dist(rng);
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = xp[i] + alpha * (x[i] - xp[i]);
        nn::Vec g = model.input_gradient(z, cls);
        for (std::size_t i = 0; i < x.size(); ++i) map.scores[i] += (x[i] - xp[i]) * g[i];
    }
    for (auto& s : map.scores) s /= static_cast<double>(n_draws);
    return map;
}

ImportanceSummary aggregate_importance(const std::vector<AttributionMap>& maps) {
    if (maps.empty()) throw EmptyDataset("no attribution maps to aggregate");
    std::size_t n = maps[0].scores.size();
    for (const auto& m : maps) {
        if (m.scores.size() != n) throw ShapeMismatch("attribution maps of mixed sizes");
        if (m.model_tag != maps[0].model_tag)
            throw BadConfig("attribution maps from different models");
    }

    ImportanceSummary s;
    s.model_tag = maps[0].model_tag;
    s.byte_means.assign(n, 0.0);
    for (const auto& m : maps)
        for (std::size_t i = 0; i < n; ++i) s.byte_means[i] += std::fabs(m.scores[i]);
    for (auto& v : s.byte_means) v /= static_cast<double>(maps.size());

    std::size_t width = n % 28 == 0 ? 28 : n;  // image rows when the input is the 784 window
    std::size_t rows = n / width;
    s.row_means.assign(rows, 0.0);
    for (std::size_t i = 0; i < n; ++i) s.row_means[i / width] += s.byte_means[i];
    for (auto& v : s.row_means) v /= static_cast<double>(width);

    s.max_index = static_cast<int>(std::max_element(s.byte_means.begin(), s.byte_means.end()) -
                                   s.byte_means.begin());
    s.max_value = s.byte_means[static_cast<std::size_t>(s.max_index)];
    for (double v : s.byte_means) s.mean_value += v;
    s.mean_value /= static_cast<double>(n);

    for (std::size_t r = 0; r < rows; ++r)
        if (s.row_means[r] > 2.0 * s.mean_value) s.peak_rows.push_back(static_cast<int>(r));
    return s;
}

void importance_report(const ImportanceSummary& summary, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::size_t n = summary.byte_means.size();
    std::size_t width = n % 28 == 0 ? 28 : n;

    {
        std::ofstream f(fs::path(out_dir) / "importance_bytes.csv", std::ios::trunc);
        if (!f) throw IoFailure("cannot write byte importance CSV");
        f << "byte_index,row,column,mean_abs_score\n";
        for (std::size_t i = 0; i < n; ++i)
            f << i << "," << i / width << "," << i % width << "," << summary.byte_means[i] << "\n";
    }
    {
        std::ofstream f(fs::path(out_dir) / "importance_rows.csv", std::ios::trunc);
        if (!f) throw IoFailure("cannot write row importance CSV");
        f << "row,mean_abs_score,peak\n";
        for (std::size_t r = 0; r < summary.row_means.size(); ++r) {
            bool peak = std::find(summary.peak_rows.begin(), summary.peak_rows.end(),
                                  static_cast<int>(r)) != summary.peak_rows.end();
            f << r << "," << summary.row_means[r] << "," << (peak ? 1 : 0) << "\n";
        }
    }
    {
        nlohmann::json j;
        j["model"] = summary.model_tag;
        j["max_index"] = summary.max_index;
        j["max_value"] = summary.max_value;
        j["mean_value"] = summary.mean_value;
        j["peak_rows"] = summary.peak_rows;
        std::ofstream f(fs::path(out_dir) / "importance_summary.json", std::ios::trunc);
        if (!f) throw IoFailure("cannot write importance summary");
        f << j.dump(2) << "\n";
    }
}

}  // namespace iotid
