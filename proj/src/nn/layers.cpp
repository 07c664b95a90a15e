#include "iotid/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace iotid::nn {

void init_uniform(Param& p, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : p.value.v) x = dist(rng);
    p.grad.zero();
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, const std::string& name)
    : in_c(in_channels),
      out_c(out_channels),
      k(kernel),
      kernels(name + ".kernels",
              {static_cast<std::size_t>(out_channels), static_cast<std::size_t>(in_channels),
               static_cast<std::size_t>(kernel), static_cast<std::size_t>(kernel)}),
      bias(name + ".bias", {static_cast<std::size_t>(out_channels)}) {}

void Conv2d::init(std::mt19937_64& rng) {
    init_uniform(kernels, 1.0 / std::sqrt(static_cast<double>(in_c) * k * k), rng);
    bias.value.zero();
    bias.grad.zero();
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.shape.size() != 3 || static_cast<int>(x.shape[0]) != in_c)
        throw ShapeMismatch("conv input must be [in_c,H,W]");
    int H = static_cast<int>(x.shape[1]), W = static_cast<int>(x.shape[2]);
    if (H < k || W < k) throw ShapeMismatch("conv input smaller than kernel");
    int OH = H - k + 1, OW = W - k + 1;
    x_cache = x;

    Tensor y({static_cast<std::size_t>(out_c), static_cast<std::size_t>(OH),
              static_cast<std::size_t>(OW)});
    for (int oc = 0; oc < out_c; ++oc) {
        double* yp = &y.v[static_cast<std::size_t>(oc) * OH * OW];
        double b = bias.value.v[static_cast<std::size_t>(oc)];
        for (int i = 0; i < OH * OW; ++i) yp[i] = b;
        for (int ic = 0; ic < in_c; ++ic) {
            const double* xp = &x.v[static_cast<std::size_t>(ic) * H * W];
            const double* kp =
                &kernels.value.v[((static_cast<std::size_t>(oc) * in_c) + ic) * k * k];
            for (int di = 0; di < k; ++di)
                for (int dj = 0; dj < k; ++dj) {
                    double kv = kp[di * k + dj];
                    for (int i = 0; i < OH; ++i) {
                        const double* xrow = xp + (i + di) * W + dj;
                        double* yrow = yp + i * OW;
                        for (int j = 0; j < OW; ++j) yrow[j] += kv * xrow[j];
                    }
                }
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const Tensor& x = x_cache;
    if (x.v.empty()) throw NotTrained("conv backward without forward");
    int H = static_cast<int>(x.shape[1]), W = static_cast<int>(x.shape[2]);
    int OH = H - k + 1, OW = W - k + 1;
    if (dy.shape.size() != 3 || static_cast<int>(dy.shape[0]) != out_c ||
        static_cast<int>(dy.shape[1]) != OH || static_cast<int>(dy.shape[2]) != OW)
        throw ShapeMismatch("conv backward shape");

    Tensor dx(x.shape);
    for (int oc = 0; oc < out_c; ++oc) {
        const double* dyp = &dy.v[static_cast<std::size_t>(oc) * OH * OW];
        double bsum = 0.0;
        for (int i = 0; i < OH * OW; ++i) bsum += dyp[i];
        bias.grad.v[static_cast<std::size_t>(oc)] += bsum;
        for (int ic = 0; ic < in_c; ++ic) {
            const double* xp = &x.v[static_cast<std::size_t>(ic) * H * W];
            double* dxp = &dx.v[static_cast<std::size_t>(ic) * H * W];
            const double* kp =
                &kernels.value.v[((static_cast<std::size_t>(oc) * in_c) + ic) * k * k];
            double* dkp = &kernels.grad.v[((static_cast<std::size_t>(oc) * in_c) + ic) * k * k];
            for (int di = 0; di < k; ++di)
                for (int dj = 0; dj < k; ++dj) {
                    double kv = kp[di * k + dj];
                    double acc = 0.0;
                    for (int i = 0; i < OH; ++i) {
                        const double* dyrow = dyp + i * OW;
                        const double* xrow = xp + (i + di) * W + dj;
                        double* dxrow = dxp + (i + di) * W + dj;
                        for (int j = 0; j < OW; ++j) {
                            acc += dyrow[j] * xrow[j];
                            dxrow[j] += kv * dyrow[j];
                        }
                    }
                    dkp[di * k + dj] += acc;
                }
        }
    }
    return dx;
}

Tensor AvgPool2::forward(const Tensor& x) {
    if (x.shape.size() != 3) throw ShapeMismatch("pool input must be [C,H,W]");
    std::size_t C = x.shape[0], H = x.shape[1], W = x.shape[2];
    if (H % 2 || W % 2) throw ShapeMismatch("pool needs even spatial dims");
    in_shape = x.shape;
    Tensor y({C, H / 2, W / 2});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H / 2; ++i)
            for (std::size_t j = 0; j < W / 2; ++j) {
                const double* base = &x.v[c * H * W + 2 * i * W + 2 * j];
                y.v[c * (H / 2) * (W / 2) + i * (W / 2) + j] =
                    0.25 * (base[0] + base[1] + base[W] + base[W + 1]);
            }
    return y;
}

Tensor AvgPool2::backward(const Tensor& dy) {
    if (in_shape.empty()) throw NotTrained("pool backward without forward");
    std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
    Tensor dx(in_shape);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H / 2; ++i)
            for (std::size_t j = 0; j < W / 2; ++j) {
                double g = 0.25 * dy.v[c * (H / 2) * (W / 2) + i * (W / 2) + j];
                double* base = &dx.v[c * H * W + 2 * i * W + 2 * j];
                base[0] += g;
                base[1] += g;
                base[W] += g;
                base[W + 1] += g;
            }
    return dx;
}

Dense::Dense(int in, int out, const std::string& name)
    : in_dim(in),
      out_dim(out),
      weights(name + ".weights", {static_cast<std::size_t>(out), static_cast<std::size_t>(in)}),
      bias(name + ".bias", {static_cast<std::size_t>(out)}) {}

void Dense::init(std::mt19937_64& rng) {
    init_uniform(weights, 1.0 / std::sqrt(static_cast<double>(in_dim)), rng);
    bias.value.zero();
    bias.grad.zero();
}

Vec Dense::forward(const Vec& x) {
    if (static_cast<int>(x.size()) != in_dim) throw ShapeMismatch("dense input size");
    x_cache = x;
    Vec y(static_cast<std::size_t>(out_dim));
    for (int o = 0; o < out_dim; ++o) {
        const double* w = &weights.value.v[static_cast<std::size_t>(o) * in_dim];
        double acc = bias.value.v[static_cast<std::size_t>(o)];
        for (int i = 0; i < in_dim; ++i) acc += w[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc;
    }
    return y;
}

Vec Dense::backward(const Vec& dy) {
    if (x_cache.empty()) throw NotTrained("dense backward without forward");
    if (static_cast<int>(dy.size()) != out_dim) throw ShapeMismatch("dense grad size");
    Vec dx(static_cast<std::size_t>(in_dim), 0.0);
    for (int o = 0; o < out_dim; ++o) {
        double g = dy[static_cast<std::size_t>(o)];
        const double* w = &weights.value.v[static_cast<std::size_t>(o) * in_dim];
        double* dw = &weights.grad.v[static_cast<std::size_t>(o) * in_dim];
        for (int i = 0; i < in_dim; ++i) {
            dx[static_cast<std::size_t>(i)] += w[i] * g;
            dw[i] += x_cache[static_cast<std::size_t>(i)] * g;
        }
        bias.grad.v[static_cast<std::size_t>(o)] += g;
    }
    return dx;
}

Vec Relu::forward(const Vec& x) {
    x_cache = x;
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Vec Relu::backward(const Vec& dy) {
    Vec dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = x_cache[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

Vec Dropout::forward(const Vec& x, bool training, std::mt19937_64& rng) {
    if (!training || rate == 0.0) {
        mask.assign(x.size(), 1.0);
        return x;
    }
    double keep = 1.0 - rate;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    mask.resize(x.size());
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask[i] = u(rng) < keep ? 1.0 / keep : 0.0;
        y[i] = x[i] * mask[i];
    }
    return y;
}

Vec Dropout::backward(const Vec& dy) const {
    Vec dx(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
    return dx;
}

Vec Softmax::forward(const Vec& logits) {
    if (logits.empty()) throw ShapeMismatch("softmax on empty vector");
    for (double v : logits)
        if (!std::isfinite(v)) throw ShapeMismatch("softmax input not finite");
    double mx = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    p_cache = p;
    return p;
}

Vec Softmax::backward(const Vec& dp) const {
    if (p_cache.size() != dp.size()) throw ShapeMismatch("softmax backward size");
    double dot = 0.0;
    for (std::size_t i = 0; i < dp.size(); ++i) dot += dp[i] * p_cache[i];
    Vec dz(dp.size());
    for (std::size_t i = 0; i < dp.size(); ++i) dz[i] = p_cache[i] * (dp[i] - dot);
    return dz;
}

double weighted_cross_entropy(const Vec& probabilities, int true_class, double weight) {
    if (true_class < 0 || true_class >= static_cast<int>(probabilities.size()))
        throw UnknownLabel("loss class index out of range");
    return -weight * std::log(probabilities[static_cast<std::size_t>(true_class)] + 1e-12);
}

Vec weighted_cross_entropy_grad(const Vec& probabilities, int true_class, double weight) {
    if (true_class < 0 || true_class >= static_cast<int>(probabilities.size()))
        throw UnknownLabel("loss class index out of range");
    Vec dp(probabilities.size(), 0.0);
    dp[static_cast<std::size_t>(true_class)] =
        -weight / (probabilities[static_cast<std::size_t>(true_class)] + 1e-12);
    return dp;
}

}  // namespace iotid::nn
