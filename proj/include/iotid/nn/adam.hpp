#pragma once

#include <vector>

#include "iotid/nn/tensor.hpp"

namespace iotid::nn {

// Adam with bias correction. Bound to a fixed parameter list; state slots
// are positional. step() consumes accumulated grads but does not clear them.
struct Adam {
    double lr;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long long t = 0;
    std::vector<Param*> params;
    std::vector<std::vector<double>> m, v;

    explicit Adam(std::vector<Param*> ps, double learning_rate) : lr(learning_rate), params(std::move(ps)) {
        for (auto* p : params) {
            m.emplace_back(p->value.numel(), 0.0);
            v.emplace_back(p->value.numel(), 0.0);
        }
    }

    void zero_grads() {
        for (auto* p : params) p->grad.zero();
    }

    void step() {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& pv = params[k]->value.v;
            auto& pg = params[k]->grad.v;
            if (pv.size() != pg.size() || pv.size() != m[k].size())
                throw ShapeMismatch("optimizer state size drifted");
            for (std::size_t i = 0; i < pv.size(); ++i) {
                double g = pg[i];
                m[k][i] = beta1 * m[k][i] + (1.0 - beta1) * g;
                v[k][i] = beta2 * v[k][i] + (1.0 - beta2) * g * g;
                double mhat = m[k][i] / bc1;
                double vhat = v[k][i] / bc2;
                pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
};

}  // namespace iotid::nn
