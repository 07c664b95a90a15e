#pragma once

#include <random>
#include <vector>

#include "iotid/nn/tensor.hpp"

namespace iotid::nn {

struct LstmState {
    std::vector<double> h, c;
    static LstmState zeros(int hidden) {
        return {std::vector<double>(static_cast<std::size_t>(hidden), 0.0),
                std::vector<double>(static_cast<std::size_t>(hidden), 0.0)};
    }
};

// Single LSTM layer. Gate order in the stacked parameters: input, forget,
// candidate, output. c_t = f*c_{t-1} + i*g, h_t = o*tanh(c_t).
struct LstmLayer {
    int input_dim, hidden;
    Param W;  // [4, hidden, input_dim]
    Param U;  // [4, hidden, hidden]
    Param b;  // [4, hidden]

    struct Cache {
        std::vector<std::vector<double>> x, i, f, g, o, c, h, tanh_c;
        std::vector<double> h0, c0;
    };
    Cache cache;

    LstmLayer(int input, int hidden_size, const std::string& name);
    void init(std::mt19937_64& rng);  // uniform +-1/sqrt(hidden), forget bias 1

    // Runs T steps from state s0; returns h_1..h_T and fills the cache.
    std::vector<std::vector<double>> forward(const std::vector<std::vector<double>>& xs,
                                             const LstmState& s0);
    LstmState final_state() const;

    // dh_steps: per-step gradient on the outputs (zero rows allowed). Extra
    // gradient flowing into the final state may be passed via d_final.
    // Accumulates parameter grads; returns per-step input grads and the
    // gradient w.r.t. the initial state (what BPTT would push further back).
    struct BackwardResult {
        std::vector<std::vector<double>> dx;
        LstmState d_state0;
    };
    BackwardResult backward(const std::vector<std::vector<double>>& dh_steps,
                            const LstmState* d_final = nullptr);

    std::vector<Param*> params() { return {&W, &U, &b}; }
};

}  // namespace iotid::nn
