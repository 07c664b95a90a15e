#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "iotid/nn/adam.hpp"
#include "iotid/nn/layers.hpp"
#include "iotid/nn/lstm.hpp"

namespace iotid {

struct NnSample {
    std::vector<double> x;  // flat normalized bytes, image-length
    int label = 0;
};

struct TrainConfig {
    int epochs = 80;
    int batch = 32;
    double lr = 1e-3;
    int tbptt_chunk = 7;   // >= sequence length disables truncation
    double dropout = 0.2;  // recurrent head only
    std::map<int, double> class_weights;  // label id -> weight; missing = 1.0
    std::uint64_t seed = 1;

    double weight_of(int label) const {
        auto it = class_weights.find(label);
        return it == class_weights.end() ? 1.0 : it->second;
    }
};

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
};

std::string history_csv(const TrainingHistory& history);

// ---- convolutional model ----

struct CnnGeometry {
    int hw = 28;       // square input side
    int c1 = 32, k1 = 5;
    int c2 = 64, k2 = 5;
    int fc1 = 120, fc2 = 84;
    int n_classes = 2;

    int conv1_out() const { return hw - k1 + 1; }
    int pool1_out() const { return conv1_out() / 2; }
    int conv2_out() const { return pool1_out() - k2 + 1; }
    int pool2_out() const { return conv2_out() / 2; }
    int flat() const { return c2 * pool2_out() * pool2_out(); }
};

struct CnnModel {
    CnnGeometry geo;
    nn::Conv2d conv1, conv2;
    nn::AvgPool2 pool1, pool2;
    nn::Relu crelu1, crelu2, frelu1, frelu2;
    nn::Dense fc1, fc2, head;
    nn::Softmax softmax;

    CnnModel(const CnnGeometry& g, std::uint64_t seed);
    std::vector<nn::Param*> params();
    std::size_t param_count();

    nn::Vec forward(const nn::Vec& x);            // x: hw*hw normalized bytes
    nn::Vec backward(const nn::Vec& dp);          // returns input gradient
    nn::Vec input_gradient(const nn::Vec& x, int cls);  // d p[cls] / d x

    std::string arch_tag() const;
};

CnnModel build_cnn(int n_classes, std::uint64_t seed);

// ---- recurrent model ----

struct LstmGeometry {
    int steps = 28, input_dim = 28;  // 784x1 is the alternative reading
    int hidden1 = 128, hidden2 = 128;
    int fc = 64;
    int n_classes = 2;
};

struct LstmModel {
    LstmGeometry geo;
    nn::LstmLayer lstm1, lstm2;
    nn::Dropout dropout;
    nn::Dense fc1, head;
    nn::Relu relu1;
    nn::Softmax softmax;

    LstmModel(const LstmGeometry& g, std::uint64_t seed, double dropout_rate = 0.2);
    std::vector<nn::Param*> params();
    std::size_t param_count();

    std::vector<nn::Vec> to_steps(const nn::Vec& x) const;
    // whole-sequence forward from zero state, dropout per `training`
    nn::Vec forward(const nn::Vec& x, bool training, std::mt19937_64& rng);
    nn::Vec forward(const nn::Vec& x);  // inference

    // one truncated-BPTT pass over a single sequence: loss at every chunk
    // end, gradients cut at chunk boundaries, hidden state carried across.
    // Returns mean per-chunk loss. With opt null, grads accumulate; with
    // opt set, one optimizer step per chunk (classic TBPTT updates).
    double tbptt_train_step(const nn::Vec& x, int label, double weight, int chunk,
                            nn::Adam* opt, bool training, std::mt19937_64& rng);

    nn::Vec input_gradient(const nn::Vec& x, int cls);  // full backward, no truncation

    std::string arch_tag() const;
};

LstmModel build_lstm(int n_classes, std::uint64_t seed);

// ---- shared training loop ----

TrainingHistory train(CnnModel& model, const std::vector<NnSample>& train_set,
                      const std::vector<NnSample>& val_set, const TrainConfig& config);
TrainingHistory train(LstmModel& model, const std::vector<NnSample>& train_set,
                      const std::vector<NnSample>& val_set, const TrainConfig& config);

std::pair<int, nn::Vec> predict(CnnModel& model, const nn::Vec& x);
std::pair<int, nn::Vec> predict(LstmModel& model, const nn::Vec& x);

// checkpoint plumbing
void save_model(CnnModel& model, const std::string& path);
void save_model(LstmModel& model, const std::string& path);
bool checkpoint_is_cnn(const std::string& path);
CnnModel load_cnn(const std::string& path);
LstmModel load_lstm(const std::string& path);

}  // namespace iotid
