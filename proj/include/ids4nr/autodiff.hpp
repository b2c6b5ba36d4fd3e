#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ids4nr/tensor.hpp"

namespace ids4nr::ad {

// Handle to a vector-valued node on a Tape. dim == 1 nodes are scalars.
struct Var {
    int id = -1;
    int dim = 0;
};

// Reverse-mode tape over small dense vectors. One Tape instance is reused
// across training steps: build the loss, call backward(), read gradients off
// the parameter tensors, then clear().
//
// Parameter leaves accumulate into Tensor::grad; the tape records every
// (tensor, row) it touched so the optimizer can do sparse updates. row == -1
// denotes the whole tensor (dense parameters such as FFN weights).
class Tape {
public:
    Tape();

    // ---- leaves ----
    Var constant(std::span<const double> v);
    Var constant(std::initializer_list<double> v);
    Var zeros(int dim);
    Var param(Tensor& t, int row = -1);
    Var frozen(const Tensor& t, int row = -1);  // value only, never gets grad
    // Mean of several rows of t (multi-valued attribute fields).
    Var rows_mean(Tensor& t, std::span<const int> rows);

    // ---- elementwise / vector ops ----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // Hadamard
    Var scale(Var a, double c);
    Var add_const(Var a, double c);
    Var scale_by(Var a, Var s);  // s is a scalar node
    Var tanh(Var a);
    Var relu(Var a);
    Var exp(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);  // log(1 + e^x), numerically stable

    // ---- reductions / structure ----
    Var dot(Var a, Var b);       // -> scalar
    Var sum(Var a);              // -> scalar
    Var square_norm(Var a);      // -> scalar, ||a||^2
    Var concat(std::span<const Var> xs);
    // sum_k w_k * x_k with scalar weight nodes w_k.
    Var weighted_sum(std::span<const Var> xs, std::span<const Var> ws);
    // y = W x + b. W is out_dim x in_dim, b is 1 x out_dim.
    Var affine(Tensor& W, Var x, Tensor& b);

    // ---- values & gradients ----
    double value(Var v, int i = 0) const;
    std::span<const double> values(Var v) const;
    void backward(Var loss);

    const std::vector<std::pair<Tensor*, int>>& touched() const {
        return touched_;
    }

    void clear();
    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        Const,
        Param,
        Frozen,
        RowsMean,
        Add,
        Sub,
        Mul,
        Scale,
        AddConst,
        ScaleBy,
        Tanh,
        Relu,
        Exp,
        Sigmoid,
        Softplus,
        Dot,
        Sum,
        SquareNorm,
        Concat,
        WeightedSum,
        Affine,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        int off = 0;
        int dim = 0;
        double c = 0.0;
        Tensor* t = nullptr;
        Tensor* t2 = nullptr;
        int row = -1;
        int args_off = 0;
        int nargs = 0;
    };

    Var alloc(Op op, int dim);
    double* val(const Node& n) { return val_.data() + n.off; }
    const double* val(const Node& n) const { return val_.data() + n.off; }
    double* grd(const Node& n) { return grad_.data() + n.off; }

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> grad_;
    std::vector<int> args_;  // operand pools for Concat/WeightedSum/RowsMean
    std::vector<std::pair<Tensor*, int>> touched_;
    int top_ = 0;
};

}  // namespace ids4nr::ad
