#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ids4nr/tensor.hpp"

namespace ids4nr::vm {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double square_norm(std::span<const double> a) {
    double acc = 0.0;
    for (double x : a) acc += x * x;
    return acc;
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double dot_tensor_row(const Tensor& t, int row,
                             std::span<const double> x) {
    const float* r = t.row_ptr(row);
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
        acc += static_cast<double>(r[i]) * x[i];
    return acc;
}

// y = W x + b
inline std::vector<double> affine(const Tensor& W, const Tensor& b,
                                  std::span<const double> x) {
    std::vector<double> y(W.rows);
    for (int o = 0; o < W.rows; ++o)
        y[o] = static_cast<double>(b.value[o]) + dot_tensor_row(W, o, x);
    return y;
}

inline void tanh_inplace(std::vector<double>& v) {
    for (double& x : v) x = std::tanh(x);
}

inline void relu_inplace(std::vector<double>& v) {
    for (double& x : v)
        if (x < 0.0) x = 0.0;
}

inline std::vector<double> tensor_row(const Tensor& t, int row) {
    std::vector<double> out(t.cols);
    const float* r = t.row_ptr(row);
    for (int i = 0; i < t.cols; ++i) out[i] = static_cast<double>(r[i]);
    return out;
}

}  // namespace ids4nr::vm
