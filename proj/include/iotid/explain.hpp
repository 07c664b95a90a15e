#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotid/models.hpp"

namespace iotid {

// Anything we can attribute: exposes class probabilities and the gradient
// of one class probability w.r.t. the input bytes.
struct DifferentiableModel {
    virtual ~DifferentiableModel() = default;
    virtual int num_classes() const = 0;
    virtual nn::Vec probabilities(const nn::Vec& x) = 0;
    virtual nn::Vec input_gradient(const nn::Vec& x, int cls) = 0;
    virtual std::string tag() const = 0;
};

struct CnnExplainAdapter : DifferentiableModel {
    CnnModel& model;
    explicit CnnExplainAdapter(CnnModel& m) : model(m) {}
    int num_classes() const override { return model.geo.n_classes; }
    nn::Vec probabilities(const nn::Vec& x) override { return model.forward(x); }
    nn::Vec input_gradient(const nn::Vec& x, int cls) override {
        return model.input_gradient(x, cls);
    }
    std::string tag() const override { return "cnn"; }
};

struct LstmExplainAdapter : DifferentiableModel {
    LstmModel& model;
    explicit LstmExplainAdapter(LstmModel& m) : model(m) {}
    int num_classes() const override { return model.geo.n_classes; }
    nn::Vec probabilities(const nn::Vec& x) override { return model.forward(x); }
    nn::Vec input_gradient(const nn::Vec& x, int cls) override {
        return model.input_gradient(x, cls);
    }
    std::string tag() const override { return "lstm"; }
};

struct AttributionMap {
    std::vector<double> scores;  // one per input position
    std::string model_tag;
    std::string origin;
};

struct ImportanceSummary {
    std::vector<double> byte_means;  // mean |score| per input position
    std::vector<double> row_means;   // position means grouped by image row
    std::vector<int> peak_rows;      // rows whose mean exceeds 2x global mean
    int max_index = 0;
    double max_value = 0.0;
    double mean_value = 0.0;
    std::string model_tag;
};

// Monte-Carlo expected gradients: draws (background sample, interpolation
// point) pairs and averages (x - x') * grad f_c at the interpolant, where c
// is the model's predicted class for x.
AttributionMap expected_gradients(DifferentiableModel& model, const nn::Vec& x,
                                  const std::vector<nn::Vec>& background, int n_draws,
                                  std::uint64_t seed);

ImportanceSummary aggregate_importance(const std::vector<AttributionMap>& maps);

// Writes importance_bytes.csv (784 data rows), importance_rows.csv (28 data
// rows with peak flags) and importance_summary.json into out_dir.
void importance_report(const ImportanceSummary& summary, const std::string& out_dir);

}  // namespace iotid
