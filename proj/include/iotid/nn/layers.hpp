#pragma once

#include <random>
#include <vector>

#include "iotid/nn/tensor.hpp"

namespace iotid::nn {

using Vec = std::vector<double>;

// Valid cross-correlation, stride 1, square kernels.
struct Conv2d {
    int in_c, out_c, k;
    Param kernels;  // [out_c, in_c, k, k]
    Param bias;     // [out_c]
    Tensor x_cache;

    Conv2d(int in_channels, int out_channels, int kernel, const std::string& name);
    void init(std::mt19937_64& rng);
    // x: [in_c, H, W] -> [out_c, H-k+1, W-k+1]
    Tensor forward(const Tensor& x);
    // dy: same shape as forward output; accumulates kernel/bias grads, returns dx
    Tensor backward(const Tensor& dy);
    std::vector<Param*> params() { return {&kernels, &bias}; }
};

// 2x2 mean pooling, stride 2. Even spatial dims required.
struct AvgPool2 {
    std::vector<std::size_t> in_shape;
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);
};

struct Dense {
    int in_dim, out_dim;
    Param weights;  // [out, in]
    Param bias;     // [out]
    Vec x_cache;

    Dense(int in, int out, const std::string& name);
    void init(std::mt19937_64& rng);
    Vec forward(const Vec& x);
    Vec backward(const Vec& dy);
    std::vector<Param*> params() { return {&weights, &bias}; }
};

struct Relu {
    Vec x_cache;
    Vec forward(const Vec& x);
    Vec backward(const Vec& dy);
};

// Inverted dropout: training scales kept activations by 1/(1-rate) so
// inference is a plain identity.
struct Dropout {
    double rate;
    Vec mask;

    explicit Dropout(double r) : rate(r) {
        if (r < 0.0 || r >= 1.0) throw BadConfig("dropout rate must be in [0,1)");
    }
    Vec forward(const Vec& x, bool training, std::mt19937_64& rng);
    Vec backward(const Vec& dy) const;
};

struct Softmax {
    Vec p_cache;
    Vec forward(const Vec& logits);
    // dp: gradient w.r.t. probabilities; returns gradient w.r.t. logits
    Vec backward(const Vec& dp) const;
};

// loss = -weight * log(p[true_class] + 1e-12)
double weighted_cross_entropy(const Vec& probabilities, int true_class, double weight);
Vec weighted_cross_entropy_grad(const Vec& probabilities, int true_class, double weight);

void init_uniform(Param& p, double bound, std::mt19937_64& rng);

}  // namespace iotid::nn
