#include <doctest.h>

#include <cmath>
#include <vector>

#include "ids4nr/autodiff.hpp"
#include "ids4nr/rng.hpp"

using namespace ids4nr;

namespace {

// Finite-difference derivative of a scalar-valued tape program with respect
// to one entry of a parameter tensor.
template <typename BuildFn>
double fd_grad(Tensor& t, int idx, BuildFn build, double eps = 1e-6) {
    const float old = t.value[idx];
    t.value[idx] = static_cast<float>(static_cast<double>(old) + eps);
    const double hi = static_cast<double>(t.value[idx]);
    ad::Tape tp;
    const double lp = tp.value(build(tp));
    t.value[idx] = static_cast<float>(static_cast<double>(old) - eps);
    const double lo = static_cast<double>(t.value[idx]);
    ad::Tape tm;
    const double lm = tm.value(build(tm));
    t.value[idx] = old;
    return (lp - lm) / (hi - lo);
}

}  // namespace

TEST_CASE("tape forward matches hand computation") {
    ad::Tape tape;
    ad::Var a = tape.constant({1.0, 2.0, 3.0});
    ad::Var b = tape.constant({4.0, -1.0, 0.5});
    CHECK(tape.value(tape.dot(a, b)) == doctest::Approx(1 * 4 - 2 + 1.5));
    CHECK(tape.value(tape.sum(a)) == doctest::Approx(6.0));
    CHECK(tape.value(tape.square_norm(a)) == doctest::Approx(14.0));
    ad::Var s = tape.sub(a, b);
    CHECK(tape.value(s, 0) == doctest::Approx(-3.0));
    CHECK(tape.value(tape.softplus(tape.constant({0.0}))) ==
          doctest::Approx(std::log(2.0)));
    CHECK(tape.value(tape.sigmoid(tape.constant({0.0}))) ==
          doctest::Approx(0.5));
}

TEST_CASE("every op backpropagates the finite-difference gradient") {
    Rng rng(99);
    Tensor W("t", "W", 3, 4);
    Tensor b("t", "b", 1, 3);
    Tensor p("t", "p", 2, 4);
    W.fill_normal(rng, 0.5);
    b.fill_normal(rng, 0.5);
    p.fill_normal(rng, 0.7);
    const std::vector<double> eps_v{0.3, -0.2, 0.05, 0.4};

    // A program exercising affine, tanh, relu, exp, sigmoid, softplus, mul,
    // concat, weighted_sum, scale_by, dot and rows_mean together.
    auto build = [&](ad::Tape& t) {
        const int rows[] = {0, 1};
        ad::Var x = t.rows_mean(p, rows);
        ad::Var e = t.constant(eps_v);
        ad::Var h = t.tanh(t.affine(W, x, b));
        ad::Var r = t.relu(t.sub(h, t.constant({0.05, -0.02, 0.01})));
        ad::Var g = t.sigmoid(t.dot(r, r));
        ad::Var xs[] = {x, t.mul(x, e)};
        ad::Var ws[] = {g, t.add_const(t.scale(g, -1.0), 1.0)};
        ad::Var mix = t.weighted_sum(xs, ws);
        ad::Var cat_parts[] = {mix, r};
        ad::Var cat = t.concat(cat_parts);
        ad::Var sp = t.softplus(t.scale(t.sum(t.exp(t.scale(cat, 0.3))), 0.2));
        return t.add(sp, t.scale_by(t.square_norm(mix), g));
    };

    ad::Tape tape;
    ad::Var loss = build(tape);
    tape.backward(loss);

    for (Tensor* t : {&W, &b, &p}) {
        for (int i = 0; i < t->size(); ++i) {
            const double fd = fd_grad(*t, i, build);
            const double an = t->grad[i];
            CHECK(std::abs(an - fd) <
                  1e-5 * std::max({1.0, std::abs(an), std::abs(fd)}));
        }
    }
}

TEST_CASE("frozen leaves receive no gradient") {
    Tensor t("t", "x", 2, 3);
    for (int i = 0; i < 6; ++i) t.value[i] = static_cast<float>(i + 1);
    ad::Tape tape;
    ad::Var a = tape.frozen(t, 0);
    ad::Var b = tape.param(t, 1);
    tape.backward(tape.dot(a, b));
    CHECK(t.grad[0] == 0.0);
    CHECK(t.grad[1] == 0.0);
    CHECK(t.grad[2] == 0.0);
    CHECK(t.grad[3] == doctest::Approx(1.0));
    CHECK(t.grad[4] == doctest::Approx(2.0));
    CHECK(t.grad[5] == doctest::Approx(3.0));
    CHECK(tape.touched().size() == 1);
}

TEST_CASE("tape reuse after clear is clean") {
    Tensor t("t", "x", 1, 2);
    t.value[0] = 1.0f;
    t.value[1] = 2.0f;
    for (int round = 0; round < 3; ++round) {
        ad::Tape tape;
        ad::Var v = tape.param(t);
        tape.backward(tape.square_norm(v));
        CHECK(t.grad[0] == doctest::Approx(2.0));
        CHECK(t.grad[1] == doctest::Approx(4.0));
        t.zero_grad();
        tape.clear();
    }
}
