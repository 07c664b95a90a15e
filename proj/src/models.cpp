#include "iotid/models.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "iotid/nn/checkpoint.hpp"

namespace iotid {

using nn::Vec;

std::string history_csv(const TrainingHistory& history) {
    std::ostringstream os;
    os << "epoch,train_loss,train_acc,test_acc\n";
    os.precision(6);
    os << std::fixed;
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& s = history.epochs[e];
        os << (e + 1) << "," << s.train_loss << "," << s.train_acc << "," << s.test_acc << "\n";
    }
    return os.str();
}

// ---- CNN ----

CnnModel::CnnModel(const CnnGeometry& g, std::uint64_t seed)
    : geo(g),
      conv1(1, g.c1, g.k1, "conv1"),
      conv2(g.c1, g.c2, g.k2, "conv2"),
      fc1(g.flat(), g.fc1, "fc1"),
      fc2(g.fc1, g.fc2, "fc2"),
      head(g.fc2, g.n_classes, "head") {
    if (g.n_classes < 2) throw BadConfig("need at least two classes");
    if (g.conv1_out() < 1 || g.conv1_out() % 2 || g.conv2_out() < 1 || g.conv2_out() % 2)
        throw BadConfig("convolution geometry does not compose");
    std::mt19937_64 rng(seed);
    conv1.init(rng);
    conv2.init(rng);
    fc1.init(rng);
    fc2.init(rng);
    head.init(rng);
}

std::vector<nn::Param*> CnnModel::params() {
    std::vector<nn::Param*> out;
    for (auto* p : conv1.params()) out.push_back(p);
    for (auto* p : conv2.params()) out.push_back(p);
    for (auto* p : fc1.params()) out.push_back(p);
    for (auto* p : fc2.params()) out.push_back(p);
    for (auto* p : head.params()) out.push_back(p);
    return out;
}

std::size_t CnnModel::param_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->value.numel();
    return n;
}

Vec CnnModel::forward(const Vec& x) {
    if (static_cast<int>(x.size()) != geo.hw * geo.hw)
        throw ShapeMismatch("image input size mismatch");
    nn::Tensor t({1, static_cast<std::size_t>(geo.hw), static_cast<std::size_t>(geo.hw)});
    t.v = x;
    nn::Tensor a = conv1.forward(t);
    a.v = crelu1.forward(a.v);
    a = pool1.forward(a);
    a = conv2.forward(a);
    a.v = crelu2.forward(a.v);
    a = pool2.forward(a);
    Vec f = fc1.forward(a.v);
    f = frelu1.forward(f);
    f = fc2.forward(f);
    f = frelu2.forward(f);
    f = head.forward(f);
    return softmax.forward(f);
}

Vec CnnModel::backward(const Vec& dp) {
    Vec d = softmax.backward(dp);
    d = head.backward(d);
    d = frelu2.backward(d);
    d = fc2.backward(d);
    d = frelu1.backward(d);
    d = fc1.backward(d);
    nn::Tensor t({static_cast<std::size_t>(geo.c2), static_cast<std::size_t>(geo.pool2_out()),
                  static_cast<std::size_t>(geo.pool2_out())});
    t.v = std::move(d);
    t = pool2.backward(t);
    t.v = crelu2.backward(t.v);
    t = conv2.backward(t);
    t = pool1.backward(t);
    t.v = crelu1.backward(t.v);
    t = conv1.backward(t);
    return t.v;
}

Vec CnnModel::input_gradient(const Vec& x, int cls) {
    forward(x);
    Vec dp(static_cast<std::size_t>(geo.n_classes), 0.0);
    dp.at(static_cast<std::size_t>(cls)) = 1.0;
    return backward(dp);
}

std::string CnnModel::arch_tag() const {
    std::ostringstream os;
    os << "cnn:" << geo.hw << "," << geo.c1 << "," << geo.k1 << "," << geo.c2 << "," << geo.k2
       << "," << geo.fc1 << "," << geo.fc2 << "," << geo.n_classes;
    return os.str();
}

CnnModel build_cnn(int n_classes, std::uint64_t seed) {
    CnnGeometry g;
    g.n_classes = n_classes;
    return CnnModel(g, seed);
}

// ---- LSTM ----

LstmModel::LstmModel(const LstmGeometry& g, std::uint64_t seed, double dropout_rate)
    : geo(g),
      lstm1(g.input_dim, g.hidden1, "lstm1"),
      lstm2(g.hidden1, g.hidden2, "lstm2"),
      dropout(dropout_rate),
      fc1(g.hidden2, g.fc, "fc1"),
      head(g.fc, g.n_classes, "head") {
    if (g.n_classes < 2) throw BadConfig("need at least two classes");
    std::mt19937_64 rng(seed);
    lstm1.init(rng);
    lstm2.init(rng);
    fc1.init(rng);
    head.init(rng);
}

std::vector<nn::Param*> LstmModel::params() {
    std::vector<nn::Param*> out;
    for (auto* p : lstm1.params()) out.push_back(p);
    for (auto* p : lstm2.params()) out.push_back(p);
    for (auto* p : fc1.params()) out.push_back(p);
    for (auto* p : head.params()) out.push_back(p);
    return out;
}

std::size_t LstmModel::param_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->value.numel();
    return n;
}

std::vector<Vec> LstmModel::to_steps(const Vec& x) const {
    if (static_cast<int>(x.size()) != geo.steps * geo.input_dim)
        throw ShapeMismatch("sequence input size mismatch");
    std::vector<Vec> xs(static_cast<std::size_t>(geo.steps));
    for (int t = 0; t < geo.steps; ++t)
        xs[static_cast<std::size_t>(t)].assign(
            x.begin() + static_cast<std::ptrdiff_t>(t) * geo.input_dim,
            x.begin() + static_cast<std::ptrdiff_t>(t + 1) * geo.input_dim);
    return xs;
}

namespace {

// classifier head shared by every LSTM pass: dropout -> dense -> relu ->
// dense -> softmax
Vec head_forward(LstmModel& m, const Vec& h, bool training, std::mt19937_64& rng) {
    Vec d = m.dropout.forward(h, training, rng);
    d = m.fc1.forward(d);
    d = m.relu1.forward(d);
    d = m.head.forward(d);
    return m.softmax.forward(d);
}

Vec head_backward(LstmModel& m, const Vec& dp) {
    Vec d = m.softmax.backward(dp);
    d = m.head.backward(d);
    d = m.relu1.backward(d);
    d = m.fc1.backward(d);
    return m.dropout.backward(d);
}

}  // namespace

Vec LstmModel::forward(const Vec& x, bool training, std::mt19937_64& rng) {
    auto xs = to_steps(x);
    auto out1 = lstm1.forward(xs, nn::LstmState::zeros(geo.hidden1));
    auto out2 = lstm2.forward(out1, nn::LstmState::zeros(geo.hidden2));
    return head_forward(*this, out2.back(), training, rng);
}

Vec LstmModel::forward(const Vec& x) {
    std::mt19937_64 rng(0);  // unused in inference
    return forward(x, false, rng);
}

double LstmModel::tbptt_train_step(const Vec& x, int label, double weight, int chunk,
                                   nn::Adam* opt, bool training, std::mt19937_64& rng) {
    if (chunk < 1) throw BadConfig("chunk length must be at least 1");
    auto xs = to_steps(x);
    auto s1 = nn::LstmState::zeros(geo.hidden1);
    auto s2 = nn::LstmState::zeros(geo.hidden2);
    double loss_sum = 0.0;
    int chunks = 0;
    for (int start = 0; start < geo.steps; start += chunk) {
        int len = std::min(chunk, geo.steps - start);
        std::vector<Vec> part(xs.begin() + start, xs.begin() + start + len);
        auto out1 = lstm1.forward(part, s1);
        auto out2 = lstm2.forward(out1, s2);
        Vec p = head_forward(*this, out2.back(), training, rng);
        loss_sum += nn::weighted_cross_entropy(p, label, weight);
        ++chunks;

        Vec dh = head_backward(*this, nn::weighted_cross_entropy_grad(p, label, weight));
        std::vector<Vec> dh2(out2.size(), Vec(static_cast<std::size_t>(geo.hidden2), 0.0));
        dh2.back() = dh;
        auto r2 = lstm2.backward(dh2);
        lstm1.backward(r2.dx);

        if (opt) {
            opt->step();
            opt->zero_grads();
        }
        s1 = lstm1.final_state();  // values only: truncation boundary
        s2 = lstm2.final_state();
    }
    return loss_sum / chunks;
}

Vec LstmModel::input_gradient(const Vec& x, int cls) {
    auto xs = to_steps(x);
    auto out1 = lstm1.forward(xs, nn::LstmState::zeros(geo.hidden1));
    auto out2 = lstm2.forward(out1, nn::LstmState::zeros(geo.hidden2));
    std::mt19937_64 rng(0);
    Vec p = head_forward(*this, out2.back(), false, rng);
    Vec dp(p.size(), 0.0);
    dp.at(static_cast<std::size_t>(cls)) = 1.0;
    Vec dh = head_backward(*this, dp);
    std::vector<Vec> dh2(out2.size(), Vec(static_cast<std::size_t>(geo.hidden2), 0.0));
    dh2.back() = dh;
    auto r2 = lstm2.backward(dh2);
    auto r1 = lstm1.backward(r2.dx);
    Vec dx;
    dx.reserve(x.size());
    for (const auto& step : r1.dx) dx.insert(dx.end(), step.begin(), step.end());
    return dx;
}

std::string LstmModel::arch_tag() const {
    std::ostringstream os;
    os << "lstm:" << geo.steps << "," << geo.input_dim << "," << geo.hidden1 << "," << geo.hidden2
       << "," << geo.fc << "," << geo.n_classes;
    return os.str();
}

LstmModel build_lstm(int n_classes, std::uint64_t seed) {
    LstmGeometry g;
    g.n_classes = n_classes;
    return LstmModel(g, seed);
}

// ---- training loops ----

namespace {

template <typename Model>
double val_accuracy(Model& model, const std::vector<NnSample>& val) {
    if (val.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& s : val)
        if (predict(model, s.x).first == s.label) ++hit;
    return static_cast<double>(hit) / static_cast<double>(val.size());
}

void check_labels(const std::vector<NnSample>& set, int n_classes) {
    for (const auto& s : set)
        if (s.label < 0 || s.label >= n_classes)
            throw UnknownLabel("sample label " + std::to_string(s.label) + " outside model range");
}

}  // namespace

TrainingHistory train(CnnModel& model, const std::vector<NnSample>& train_set,
                      const std::vector<NnSample>& val_set, const TrainConfig& config) {
    if (train_set.empty()) throw EmptyDataset("empty training set");
    check_labels(train_set, model.geo.n_classes);
    check_labels(val_set, model.geo.n_classes);

    nn::Adam opt(model.params(), config.lr);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainingHistory history;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += config.batch) {
            std::size_t stop = std::min(order.size(), pos + config.batch);
            for (std::size_t k = pos; k < stop; ++k) {
                const auto& s = train_set[order[k]];
                Vec p = model.forward(s.x);
                double w = config.weight_of(s.label);
                loss_sum += nn::weighted_cross_entropy(p, s.label, w);
                if (static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) == s.label)
                    ++hits;
                model.backward(nn::weighted_cross_entropy_grad(p, s.label, w));
            }
            opt.step();
            opt.zero_grads();
        }
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.train_acc = static_cast<double>(hits) / static_cast<double>(train_set.size());
        stats.test_acc = val_accuracy(model, val_set);
        history.epochs.push_back(stats);
    }
    return history;
}

TrainingHistory train(LstmModel& model, const std::vector<NnSample>& train_set,
                      const std::vector<NnSample>& val_set, const TrainConfig& config) {
    if (train_set.empty()) throw EmptyDataset("empty training set");
    check_labels(train_set, model.geo.n_classes);
    check_labels(val_set, model.geo.n_classes);
    if (config.tbptt_chunk < 1) throw BadConfig("chunk length must be at least 1");

    nn::Adam opt(model.params(), config.lr);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    int steps = model.geo.steps;
    int chunk = std::min(config.tbptt_chunk, steps);

    TrainingHistory history;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += config.batch) {
            std::size_t stop = std::min(order.size(), pos + config.batch);
            std::size_t bn = stop - pos;
            // Chunks advance in lockstep across the mini-batch: per chunk,
            // every sample contributes truncated gradients, then one shared
            // optimizer step; hidden states carry over to the next chunk.
            std::vector<nn::LstmState> s1(bn, nn::LstmState::zeros(model.geo.hidden1));
            std::vector<nn::LstmState> s2(bn, nn::LstmState::zeros(model.geo.hidden2));
            std::vector<int> last_pred(bn, -1);
            for (int start = 0; start < steps; start += chunk) {
                int len = std::min(chunk, steps - start);
                for (std::size_t k = 0; k < bn; ++k) {
                    const auto& s = train_set[order[pos + k]];
                    auto xs = model.to_steps(s.x);
                    std::vector<Vec> part(xs.begin() + start, xs.begin() + start + len);
                    auto out1 = model.lstm1.forward(part, s1[k]);
                    auto out2 = model.lstm2.forward(out1, s2[k]);
                    Vec p = head_forward(model, out2.back(), true, rng);
                    double w = config.weight_of(s.label);
                    loss_sum += nn::weighted_cross_entropy(p, s.label, w) /
                                static_cast<double>((steps + chunk - 1) / chunk);
                    Vec dh = head_backward(model, nn::weighted_cross_entropy_grad(p, s.label, w));
                    std::vector<Vec> dh2(out2.size(),
                                         Vec(static_cast<std::size_t>(model.geo.hidden2), 0.0));
                    dh2.back() = dh;
                    auto r2 = model.lstm2.backward(dh2);
                    model.lstm1.backward(r2.dx);
                    s1[k] = model.lstm1.final_state();
                    s2[k] = model.lstm2.final_state();
                    last_pred[k] =
                        static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
                }
                opt.step();
                opt.zero_grads();
            }
            for (std::size_t k = 0; k < bn; ++k)
                if (last_pred[k] == train_set[order[pos + k]].label) ++hits;
        }
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.train_acc = static_cast<double>(hits) / static_cast<double>(train_set.size());
        stats.test_acc = val_accuracy(model, val_set);
        history.epochs.push_back(stats);
    }
    return history;
}

std::pair<int, Vec> predict(CnnModel& model, const Vec& x) {
    Vec p = model.forward(x);
    int cls = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return {cls, std::move(p)};
}

std::pair<int, Vec> predict(LstmModel& model, const Vec& x) {
    Vec p = model.forward(x);
    int cls = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return {cls, std::move(p)};
}

// ---- checkpoints ----

namespace {

std::vector<int> parse_tag_numbers(const std::string& tag, const std::string& prefix,
                                   std::size_t expected) {
    if (tag.rfind(prefix, 0) != 0) throw CorruptFile("checkpoint architecture tag " + tag);
    std::vector<int> out;
    std::size_t pos = prefix.size();
    while (pos < tag.size()) {
        std::size_t next = tag.find(',', pos);
        if (next == std::string::npos) next = tag.size();
        int v = 0;
        auto res = std::from_chars(tag.data() + pos, tag.data() + next, v);
        if (res.ec != std::errc()) throw CorruptFile("bad number in architecture tag");
        out.push_back(v);
        pos = next + 1;
    }
    if (out.size() != expected) throw CorruptFile("architecture tag field count");
    return out;
}

}  // namespace

void save_model(CnnModel& model, const std::string& path) {
    std::vector<const nn::Param*> ps;
    for (auto* p : model.params()) ps.push_back(p);
    nn::write_checkpoint(path, model.arch_tag(), ps);
}

void save_model(LstmModel& model, const std::string& path) {
    std::vector<const nn::Param*> ps;
    for (auto* p : model.params()) ps.push_back(p);
    nn::write_checkpoint(path, model.arch_tag(), ps);
}

bool checkpoint_is_cnn(const std::string& path) {
    return nn::read_checkpoint(path).arch.rfind("cnn:", 0) == 0;
}

CnnModel load_cnn(const std::string& path) {
    nn::Checkpoint ck = nn::read_checkpoint(path);
    auto f = parse_tag_numbers(ck.arch, "cnn:", 8);
    CnnGeometry g;
    g.hw = f[0];
    g.c1 = f[1];
    g.k1 = f[2];
    g.c2 = f[3];
    g.k2 = f[4];
    g.fc1 = f[5];
    g.fc2 = f[6];
    g.n_classes = f[7];
    CnnModel model(g, 0);
    nn::apply_checkpoint(ck, model.params());
    return model;
}

LstmModel load_lstm(const std::string& path) {
    nn::Checkpoint ck = nn::read_checkpoint(path);
    auto f = parse_tag_numbers(ck.arch, "lstm:", 6);
    LstmGeometry g;
    g.steps = f[0];
    g.input_dim = f[1];
    g.hidden1 = f[2];
    g.hidden2 = f[3];
    g.fc = f[4];
    g.n_classes = f[5];
    LstmModel model(g, 0);
    nn::apply_checkpoint(ck, model.params());
    return model;
}

}  // namespace iotid
