#include "ids4nr/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <cstring>

namespace ids4nr::ad {

namespace {

inline double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double stable_softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

Tape::Tape() {
    nodes_.reserve(1 << 14);
    val_.reserve(1 << 18);
    grad_.reserve(1 << 18);
    args_.reserve(1 << 12);
    touched_.reserve(1 << 10);
}

Var Tape::alloc(Op op, int dim) {
    Node n;
    n.op = op;
    n.off = top_;
    n.dim = dim;
    top_ += dim;
    if (static_cast<size_t>(top_) > val_.size()) {
        val_.resize(top_);
        grad_.resize(top_);
    }
    std::memset(grad_.data() + n.off, 0, sizeof(double) * dim);
    nodes_.push_back(n);
    return Var{static_cast<int>(nodes_.size()) - 1, dim};
}

Var Tape::constant(std::span<const double> v) {
    Var out = alloc(Op::Const, static_cast<int>(v.size()));
    std::memcpy(val(nodes_[out.id]), v.data(), sizeof(double) * v.size());
    return out;
}

Var Tape::constant(std::initializer_list<double> v) {
    return constant(std::span<const double>(v.begin(), v.size()));
}

Var Tape::zeros(int dim) {
    Var out = alloc(Op::Const, dim);
    std::memset(val(nodes_[out.id]), 0, sizeof(double) * dim);
    return out;
}

Var Tape::param(Tensor& t, int row) {
    const int dim = row < 0 ? t.size() : t.cols;
    Var out = alloc(Op::Param, dim);
    Node& n = nodes_[out.id];
    n.t = &t;
    n.row = row;
    const float* src = row < 0 ? t.value.data() : t.row_ptr(row);
    double* dst = val(n);
    for (int i = 0; i < dim; ++i) dst[i] = static_cast<double>(src[i]);
    touched_.emplace_back(&t, row);
    return out;
}

Var Tape::frozen(const Tensor& t, int row) {
    const int dim = row < 0 ? t.size() : t.cols;
    Var out = alloc(Op::Frozen, dim);
    Node& n = nodes_[out.id];
    const float* src = row < 0 ? t.value.data() : t.row_ptr(row);
    double* dst = val(n);
    for (int i = 0; i < dim; ++i) dst[i] = static_cast<double>(src[i]);
    return out;
}

Var Tape::rows_mean(Tensor& t, std::span<const int> rows) {
    assert(!rows.empty());
    Var out = alloc(Op::RowsMean, t.cols);
    Node& n = nodes_[out.id];
    n.t = &t;
    n.args_off = static_cast<int>(args_.size());
    n.nargs = static_cast<int>(rows.size());
    for (int r : rows) {
        args_.push_back(r);
        touched_.emplace_back(&t, r);
    }
    double* dst = val(n);
    std::memset(dst, 0, sizeof(double) * t.cols);
    for (int r : rows) {
        const float* src = t.row_ptr(r);
        for (int i = 0; i < t.cols; ++i) dst[i] += static_cast<double>(src[i]);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (int i = 0; i < t.cols; ++i) dst[i] *= inv;
    return out;
}

Var Tape::add(Var a, Var b) {
    assert(a.dim == b.dim);
    Var out = alloc(Op::Add, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.b = b.id;
    const double* x = val(nodes_[a.id]);
    const double* y = val(nodes_[b.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = x[i] + y[i];
    return out;
}

Var Tape::sub(Var a, Var b) {
    assert(a.dim == b.dim);
    Var out = alloc(Op::Sub, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.b = b.id;
    const double* x = val(nodes_[a.id]);
    const double* y = val(nodes_[b.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = x[i] - y[i];
    return out;
}

Var Tape::mul(Var a, Var b) {
    assert(a.dim == b.dim);
    Var out = alloc(Op::Mul, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.b = b.id;
    const double* x = val(nodes_[a.id]);
    const double* y = val(nodes_[b.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = x[i] * y[i];
    return out;
}

Var Tape::scale(Var a, double c) {
    Var out = alloc(Op::Scale, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.c = c;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = c * x[i];
    return out;
}

Var Tape::add_const(Var a, double c) {
    Var out = alloc(Op::AddConst, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.c = c;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = x[i] + c;
    return out;
}

Var Tape::scale_by(Var a, Var s) {
    assert(s.dim == 1);
    Var out = alloc(Op::ScaleBy, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.b = s.id;
    const double* x = val(nodes_[a.id]);
    const double sv = *val(nodes_[s.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = sv * x[i];
    return out;
}

Var Tape::tanh(Var a) {
    Var out = alloc(Op::Tanh, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = std::tanh(x[i]);
    return out;
}

Var Tape::relu(Var a) {
    Var out = alloc(Op::Relu, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Var Tape::exp(Var a) {
    Var out = alloc(Op::Exp, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = std::exp(x[i]);
    return out;
}

Var Tape::sigmoid(Var a) {
    Var out = alloc(Op::Sigmoid, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = stable_sigmoid(x[i]);
    return out;
}

Var Tape::softplus(Var a) {
    Var out = alloc(Op::Softplus, a.dim);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double* z = val(n);
    for (int i = 0; i < a.dim; ++i) z[i] = stable_softplus(x[i]);
    return out;
}

Var Tape::dot(Var a, Var b) {
    assert(a.dim == b.dim);
    Var out = alloc(Op::Dot, 1);
    Node& n = nodes_[out.id];
    n.a = a.id;
    n.b = b.id;
    const double* x = val(nodes_[a.id]);
    const double* y = val(nodes_[b.id]);
    double acc = 0.0;
    for (int i = 0; i < a.dim; ++i) acc += x[i] * y[i];
    *val(n) = acc;
    return out;
}

Var Tape::sum(Var a) {
    Var out = alloc(Op::Sum, 1);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double acc = 0.0;
    for (int i = 0; i < a.dim; ++i) acc += x[i];
    *val(n) = acc;
    return out;
}

Var Tape::square_norm(Var a) {
    Var out = alloc(Op::SquareNorm, 1);
    Node& n = nodes_[out.id];
    n.a = a.id;
    const double* x = val(nodes_[a.id]);
    double acc = 0.0;
    for (int i = 0; i < a.dim; ++i) acc += x[i] * x[i];
    *val(n) = acc;
    return out;
}

Var Tape::concat(std::span<const Var> xs) {
    int dim = 0;
    for (const Var& v : xs) dim += v.dim;
    Var out = alloc(Op::Concat, dim);
    Node& n = nodes_[out.id];
    n.args_off = static_cast<int>(args_.size());
    n.nargs = static_cast<int>(xs.size());
    double* z = val(n);
    int at = 0;
    for (const Var& v : xs) {
        args_.push_back(v.id);
        const double* x = val(nodes_[v.id]);
        std::memcpy(z + at, x, sizeof(double) * v.dim);
        at += v.dim;
    }
    return out;
}

Var Tape::weighted_sum(std::span<const Var> xs, std::span<const Var> ws) {
    assert(xs.size() == ws.size() && !xs.empty());
    const int dim = xs[0].dim;
    Var out = alloc(Op::WeightedSum, dim);
    Node& n = nodes_[out.id];
    n.args_off = static_cast<int>(args_.size());
    n.nargs = static_cast<int>(xs.size());
    for (size_t k = 0; k < xs.size(); ++k) {
        assert(xs[k].dim == dim && ws[k].dim == 1);
        args_.push_back(xs[k].id);
        args_.push_back(ws[k].id);
    }
    double* z = val(n);
    std::memset(z, 0, sizeof(double) * dim);
    for (size_t k = 0; k < xs.size(); ++k) {
        const double w = *val(nodes_[ws[k].id]);
        const double* x = val(nodes_[xs[k].id]);
        for (int i = 0; i < dim; ++i) z[i] += w * x[i];
    }
    return out;
}

Var Tape::affine(Tensor& W, Var x, Tensor& b) {
    assert(W.cols == x.dim && b.size() == W.rows);
    Var out = alloc(Op::Affine, W.rows);
    Node& n = nodes_[out.id];
    n.a = x.id;
    n.t = &W;
    n.t2 = &b;
    touched_.emplace_back(&W, -1);
    touched_.emplace_back(&b, -1);
    const double* xv = val(nodes_[x.id]);
    double* z = val(n);
    const int in = W.cols;
    for (int o = 0; o < W.rows; ++o) {
        const float* wr = W.row_ptr(o);
        double acc = static_cast<double>(b.value[o]);
        for (int i = 0; i < in; ++i) acc += static_cast<double>(wr[i]) * xv[i];
        z[o] = acc;
    }
    return out;
}

double Tape::value(Var v, int i) const {
    assert(i < v.dim);
    return val_[nodes_[v.id].off + i];
}

std::span<const double> Tape::values(Var v) const {
    return {val_.data() + nodes_[v.id].off, static_cast<size_t>(v.dim)};
}

void Tape::backward(Var loss) {
    assert(loss.dim == 1);
    grad_[nodes_[loss.id].off] = 1.0;

    for (int idx = loss.id; idx >= 0; --idx) {
        const Node& n = nodes_[idx];
        const double* g = grad_.data() + n.off;
        switch (n.op) {
            case Op::Const:
            case Op::Frozen:
                break;
            case Op::Param: {
                double* tg = n.row < 0 ? n.t->grad.data() : n.t->grad_ptr(n.row);
                for (int i = 0; i < n.dim; ++i) tg[i] += g[i];
                break;
            }
            case Op::RowsMean: {
                const double inv = 1.0 / static_cast<double>(n.nargs);
                for (int k = 0; k < n.nargs; ++k) {
                    double* tg = n.t->grad_ptr(args_[n.args_off + k]);
                    for (int i = 0; i < n.dim; ++i) tg[i] += g[i] * inv;
                }
                break;
            }
            case Op::Add: {
                double* ga = grd(nodes_[n.a]);
                double* gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.dim; ++i) {
                    ga[i] += g[i];
                    gb[i] += g[i];
                }
                break;
            }
            case Op::Sub: {
                double* ga = grd(nodes_[n.a]);
                double* gb = grd(nodes_[n.b]);
                for (int i = 0; i < n.dim; ++i) {
                    ga[i] += g[i];
                    gb[i] -= g[i];
                }
                break;
            }
            case Op::Mul: {
                double* ga = grd(nodes_[n.a]);
                double* gb = grd(nodes_[n.b]);
                const double* xa = val(nodes_[n.a]);
                const double* xb = val(nodes_[n.b]);
                for (int i = 0; i < n.dim; ++i) {
                    ga[i] += g[i] * xb[i];
                    gb[i] += g[i] * xa[i];
                }
                break;
            }
            case Op::Scale: {
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.dim; ++i) ga[i] += n.c * g[i];
                break;
            }
            case Op::AddConst: {
                double* ga = grd(nodes_[n.a]);
                for (int i = 0; i < n.dim; ++i) ga[i] += g[i];
                break;
            }
            case Op::ScaleBy: {
                double* ga = grd(nodes_[n.a]);
                double* gs = grd(nodes_[n.b]);
                const double* xa = val(nodes_[n.a]);
                const double sv = *val(nodes_[n.b]);
                double acc = 0.0;
                for (int i = 0; i < n.dim; ++i) {
                    ga[i] += sv * g[i];
                    acc += xa[i] * g[i];
                }
                *gs += acc;
                break;
            }
            case Op::Tanh: {
                double* ga = grd(nodes_[n.a]);
                const double* y = val(n);
                for (int i = 0; i < n.dim; ++i)
                    ga[i] += (1.0 - y[i] * y[i]) * g[i];
                break;
            }
            case Op::Relu: {
                double* ga = grd(nodes_[n.a]);
                const double* xa = val(nodes_[n.a]);
                for (int i = 0; i < n.dim; ++i)
                    if (xa[i] > 0.0) ga[i] += g[i];
                break;
            }
            case Op::Exp: {
                double* ga = grd(nodes_[n.a]);
                const double* y = val(n);
                for (int i = 0; i < n.dim; ++i) ga[i] += y[i] * g[i];
                break;
            }
            case Op::Sigmoid: {
                double* ga = grd(nodes_[n.a]);
                const double* y = val(n);
                for (int i = 0; i < n.dim; ++i)
                    ga[i] += y[i] * (1.0 - y[i]) * g[i];
                break;
            }
            case Op::Softplus: {
                double* ga = grd(nodes_[n.a]);
                const double* xa = val(nodes_[n.a]);
                for (int i = 0; i < n.dim; ++i)
                    ga[i] += stable_sigmoid(xa[i]) * g[i];
                break;
            }
            case Op::Dot: {
                double* ga = grd(nodes_[n.a]);
                double* gb = grd(nodes_[n.b]);
                const double* xa = val(nodes_[n.a]);
                const double* xb = val(nodes_[n.b]);
                const double gy = g[0];
                const int d = nodes_[n.a].dim;
                for (int i = 0; i < d; ++i) {
                    ga[i] += gy * xb[i];
                    gb[i] += gy * xa[i];
                }
                break;
            }
            case Op::Sum: {
                double* ga = grd(nodes_[n.a]);
                const double gy = g[0];
                const int d = nodes_[n.a].dim;
                for (int i = 0; i < d; ++i) ga[i] += gy;
                break;
            }
            case Op::SquareNorm: {
                double* ga = grd(nodes_[n.a]);
                const double* xa = val(nodes_[n.a]);
                const double gy = 2.0 * g[0];
                const int d = nodes_[n.a].dim;
                for (int i = 0; i < d; ++i) ga[i] += gy * xa[i];
                break;
            }
            case Op::Concat: {
                int at = 0;
                for (int k = 0; k < n.nargs; ++k) {
                    const Node& src = nodes_[args_[n.args_off + k]];
                    double* ga = grad_.data() + src.off;
                    for (int i = 0; i < src.dim; ++i) ga[i] += g[at + i];
                    at += src.dim;
                }
                break;
            }
            case Op::WeightedSum: {
                for (int k = 0; k < n.nargs; ++k) {
                    const Node& xn = nodes_[args_[n.args_off + 2 * k]];
                    const Node& wn = nodes_[args_[n.args_off + 2 * k + 1]];
                    double* gx = grad_.data() + xn.off;
                    double* gw = grad_.data() + wn.off;
                    const double* xv = val_.data() + xn.off;
                    const double w = val_[wn.off];
                    double acc = 0.0;
                    for (int i = 0; i < n.dim; ++i) {
                        gx[i] += w * g[i];
                        acc += xv[i] * g[i];
                    }
                    *gw += acc;
                }
                break;
            }
            case Op::Affine: {
                const Node& xn = nodes_[n.a];
                double* gx = grad_.data() + xn.off;
                const double* xv = val_.data() + xn.off;
                Tensor& W = *n.t;
                Tensor& b = *n.t2;
                const int in = W.cols;
                for (int o = 0; o < W.rows; ++o) {
                    const double go = g[o];
                    if (go == 0.0) continue;
                    double* wg = W.grad.data() + static_cast<size_t>(o) * in;
                    const float* wr = W.row_ptr(o);
                    for (int i = 0; i < in; ++i) {
                        wg[i] += go * xv[i];
                        gx[i] += static_cast<double>(wr[i]) * go;
                    }
                    b.grad[o] += go;
                }
                break;
            }
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    args_.clear();
    touched_.clear();
    top_ = 0;
}

}  // namespace ids4nr::ad
