#include "iotid/nn/lstm.hpp"

#include <cmath>

#include "iotid/nn/layers.hpp"

namespace iotid::nn {

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
constexpr int kGateI = 0, kGateF = 1, kGateG = 2, kGateO = 3;
}  // namespace

LstmLayer::LstmLayer(int input, int hidden_size, const std::string& name)
    : input_dim(input),
      hidden(hidden_size),
      W(name + ".W", {4, static_cast<std::size_t>(hidden_size), static_cast<std::size_t>(input)}),
      U(name + ".U",
        {4, static_cast<std::size_t>(hidden_size), static_cast<std::size_t>(hidden_size)}),
      b(name + ".b", {4, static_cast<std::size_t>(hidden_size)}) {}

void LstmLayer::init(std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    init_uniform(W, bound, rng);
    init_uniform(U, bound, rng);
    b.value.zero();
    b.grad.zero();
    for (int j = 0; j < hidden; ++j)
        b.value.v[static_cast<std::size_t>(kGateF) * hidden + j] = 1.0;  // remember by default
}

std::vector<std::vector<double>> LstmLayer::forward(const std::vector<std::vector<double>>& xs,
                                                    const LstmState& s0) {
    if (static_cast<int>(s0.h.size()) != hidden || static_cast<int>(s0.c.size()) != hidden)
        throw ShapeMismatch("lstm initial state size");
    std::size_t T = xs.size();
    cache = Cache{};
    cache.h0 = s0.h;
    cache.c0 = s0.c;
    cache.x = xs;
    auto& cc = cache;
    cc.i.resize(T);
    cc.f.resize(T);
    cc.g.resize(T);
    cc.o.resize(T);
    cc.c.resize(T);
    cc.h.resize(T);
    cc.tanh_c.resize(T);

    const std::size_t hh = static_cast<std::size_t>(hidden);
    std::vector<double> a(4 * hh);
    const double* h_prev = s0.h.data();
    const double* c_prev = s0.c.data();
    std::vector<std::vector<double>> out(T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& x = xs[t];
        if (static_cast<int>(x.size()) != input_dim) throw ShapeMismatch("lstm input dim");
        for (int gate = 0; gate < 4; ++gate)
            for (int j = 0; j < hidden; ++j) {
                std::size_t row = static_cast<std::size_t>(gate) * hh + static_cast<std::size_t>(j);
                const double* w = &W.value.v[row * static_cast<std::size_t>(input_dim)];
                const double* u = &U.value.v[row * hh];
                double acc = b.value.v[row];
                for (int i = 0; i < input_dim; ++i) acc += w[i] * x[static_cast<std::size_t>(i)];
                for (int i = 0; i < hidden; ++i) acc += u[i] * h_prev[i];
                a[row] = acc;
            }
        cc.i[t].resize(hh);
        cc.f[t].resize(hh);
        cc.g[t].resize(hh);
        cc.o[t].resize(hh);
        cc.c[t].resize(hh);
        cc.h[t].resize(hh);
        cc.tanh_c[t].resize(hh);
        for (std::size_t j = 0; j < hh; ++j) {
            double iv = sigmoid(a[static_cast<std::size_t>(kGateI) * hh + j]);
            double fv = sigmoid(a[static_cast<std::size_t>(kGateF) * hh + j]);
            double gv = std::tanh(a[static_cast<std::size_t>(kGateG) * hh + j]);
            double ov = sigmoid(a[static_cast<std::size_t>(kGateO) * hh + j]);
            double cv = fv * c_prev[j] + iv * gv;
            double tc = std::tanh(cv);
            cc.i[t][j] = iv;
            cc.f[t][j] = fv;
            cc.g[t][j] = gv;
            cc.o[t][j] = ov;
            cc.c[t][j] = cv;
            cc.tanh_c[t][j] = tc;
            cc.h[t][j] = ov * tc;
        }
        out[t] = cc.h[t];
        h_prev = cc.h[t].data();
        c_prev = cc.c[t].data();
    }
    return out;
}

LstmState LstmLayer::final_state() const {
    if (cache.h.empty()) return {cache.h0, cache.c0};
    return {cache.h.back(), cache.c.back()};
}

LstmLayer::BackwardResult LstmLayer::backward(const std::vector<std::vector<double>>& dh_steps,
                                              const LstmState* d_final) {
    const auto& cc = cache;
    std::size_t T = cc.h.size();
    if (dh_steps.size() != T) throw ShapeMismatch("lstm backward step count");
    const std::size_t hh = static_cast<std::size_t>(hidden);

    BackwardResult res;
    res.dx.assign(T, std::vector<double>(static_cast<std::size_t>(input_dim), 0.0));
    std::vector<double> dh(hh, 0.0), dc(hh, 0.0);
    if (d_final) {
        dh = d_final->h;
        dc = d_final->c;
    }
    std::vector<double> da(4 * hh);
    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t j = 0; j < hh; ++j) dh[j] += dh_steps[t][j];
        const double* c_prev = t == 0 ? cc.c0.data() : cc.c[t - 1].data();
        const double* h_prev = t == 0 ? cc.h0.data() : cc.h[t - 1].data();
        for (std::size_t j = 0; j < hh; ++j) {
            double tc = cc.tanh_c[t][j];
            double o = cc.o[t][j], i = cc.i[t][j], f = cc.f[t][j], g = cc.g[t][j];
            double dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
            double doj = dh[j] * tc;
            double dij = dcj * g;
            double dgj = dcj * i;
            double dfj = dcj * c_prev[j];
            da[static_cast<std::size_t>(kGateI) * hh + j] = dij * i * (1.0 - i);
            da[static_cast<std::size_t>(kGateF) * hh + j] = dfj * f * (1.0 - f);
            da[static_cast<std::size_t>(kGateG) * hh + j] = dgj * (1.0 - g * g);
            da[static_cast<std::size_t>(kGateO) * hh + j] = doj * o * (1.0 - o);
            dc[j] = dcj * f;  // flows to step t-1
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        const auto& x = cc.x[t];
        for (std::size_t row = 0; row < 4 * hh; ++row) {
            double gr = da[row];
            if (gr == 0.0) continue;
            double* dw = &W.grad.v[row * static_cast<std::size_t>(input_dim)];
            const double* w = &W.value.v[row * static_cast<std::size_t>(input_dim)];
            double* du = &U.grad.v[row * hh];
            const double* u = &U.value.v[row * hh];
            for (int i = 0; i < input_dim; ++i) {
                dw[i] += gr * x[static_cast<std::size_t>(i)];
                res.dx[t][static_cast<std::size_t>(i)] += gr * w[i];
            }
            for (std::size_t i = 0; i < hh; ++i) {
                du[i] += gr * h_prev[i];
                dh[i] += gr * u[i];
            }
            b.grad.v[row] += gr;
        }
    }
    res.d_state0.h = dh;
    res.d_state0.c = dc;
    return res;
}

}  // namespace iotid::nn
