#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ids4nr/rng.hpp"

namespace ids4nr {

// A named parameter array. Values are stored as float32 (the checkpoint
// dtype); gradients and all tape arithmetic use double. A Tensor with
// rows == 1 is treated as a plain vector (prototypes, biases).
struct Tensor {
    std::string section;  // checkpoint section tag
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<float> value;
    std::vector<double> grad;

    Tensor() = default;
    Tensor(std::string sec, std::string nm, int r, int c)
        : section(std::move(sec)),
          name(std::move(nm)),
          rows(r),
          cols(c),
          value(static_cast<size_t>(r) * c, 0.0f),
          grad(static_cast<size_t>(r) * c, 0.0) {}

    int size() const { return rows * cols; }

    float* row_ptr(int r) { return value.data() + static_cast<size_t>(r) * cols; }
    const float* row_ptr(int r) const {
        return value.data() + static_cast<size_t>(r) * cols;
    }
    double* grad_ptr(int r) { return grad.data() + static_cast<size_t>(r) * cols; }

    std::span<const float> row(int r) const { return {row_ptr(r), (size_t)cols}; }

    void fill_normal(Rng& rng, double stddev) {
        for (auto& v : value) v = static_cast<float>(rng.normal() * stddev);
    }

    void zero_grad_row(int r) {
        double* g = grad_ptr(r);
        for (int i = 0; i < cols; ++i) g[i] = 0.0;
    }

    void zero_grad() {
        for (auto& g : grad) g = 0.0;
    }
};

}  // namespace ids4nr
