#include <doctest.h>

#include <cmath>

#include "ids4nr/backbones.hpp"
#include "ids4nr/vecmath.hpp"

using namespace ids4nr;
using namespace ids4nr::backbones;

TEST_CASE("score_lfm is the dot product") {
    std::vector<double> p{1.0, 2.0}, q{3.0, 4.0};
    CHECK(score_lfm(p, q) == doctest::Approx(11.0));
    CHECK(score_lfm(p, std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
    // bilinearity
    std::vector<double> p2{2.0, 4.0};
    CHECK(score_lfm(p2, q) == doctest::Approx(2.0 * score_lfm(p, q)));
}

TEST_CASE("score_cml is the negated squared distance") {
    std::vector<double> p{0.0, 0.0}, q{3.0, 4.0};
    CHECK(score_cml(p, p) == doctest::Approx(0.0));
    CHECK(score_cml(p, q) == doctest::Approx(-25.0));
    // translation invariance
    std::vector<double> pt{1.0, -2.0}, qt{4.0, 2.0};
    CHECK(score_cml(pt, qt) == doctest::Approx(score_cml(p, q)));
    // p = q is the maximum
    CHECK(score_cml(p, q) < score_cml(p, p));
}

TEST_CASE("score_ncf") {
    const int dim = 4;
    BackboneConfig cfg;
    cfg.kind = Kind::Ncf;
    const auto dims = cfg.tower_dims(dim);
    CHECK(dims == std::vector<int>{8, 4, 2});

    NcfParams m;
    Rng rng(3);
    m.init(dim, dims, rng);

    Rng vr(5);
    std::vector<double> p(dim), q(dim);
    for (double& x : p) x = vr.normal();
    for (double& x : q) x = vr.normal();

    SUBCASE("all parameters zero give 0") {
        NcfParams zero;
        Rng r(1);
        zero.init(dim, dims, r);
        for (Tensor* t : zero.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
        CHECK(score_ncf(zero, p, q) == doctest::Approx(0.0));
    }

    SUBCASE("zeroing the tower isolates the GMF branch") {
        NcfParams gmf_only;
        Rng r(3);
        gmf_only.init(dim, dims, r);
        for (size_t l = 0; l < gmf_only.tower_w.size(); ++l) {
            std::fill(gmf_only.tower_w[l].value.begin(),
                      gmf_only.tower_w[l].value.end(), 0.0f);
            std::fill(gmf_only.tower_b[l].value.begin(),
                      gmf_only.tower_b[l].value.end(), 0.0f);
        }
        std::vector<double> had(dim);
        for (int i = 0; i < dim; ++i) had[i] = p[i] * q[i];
        const double gmf = vm::dot_tensor_row(gmf_only.gmf_w, 0, had);
        const double fused =
            static_cast<double>(gmf_only.fusion_w.value[0]) * gmf;
        CHECK(score_ncf(gmf_only, p, q) == doctest::Approx(fused));
    }

    SUBCASE("tape score equals plain score") {
        ad::Tape tape;
        ad::Var s = score(tape, Kind::Ncf, m, tape.constant(p),
                          tape.constant(q));
        CHECK(tape.value(s) == doctest::Approx(score_ncf(m, p, q)).epsilon(1e-12));
    }

    SUBCASE("tape analytic tower gradients match finite differences of the "
            "plain score") {
        ad::Tape tape;
        ad::Var s =
            score(tape, Kind::Ncf, m, tape.constant(p), tape.constant(q));
        tape.backward(s);
        for (Tensor* t : m.tensors()) {
            std::vector<double> saved = t->grad;
            for (int i = 0; i < t->size(); ++i) {
                const float old = t->value[i];
                const double eps = 1e-4;
                t->value[i] =
                    static_cast<float>(static_cast<double>(old) + eps);
                const double hi = static_cast<double>(t->value[i]);
                const double lp = score_ncf(m, p, q);
                t->value[i] =
                    static_cast<float>(static_cast<double>(old) - eps);
                const double lo = static_cast<double>(t->value[i]);
                const double lm = score_ncf(m, p, q);
                t->value[i] = old;
                const double fd = (lp - lm) / (hi - lo);
                CHECK(std::abs(saved[i] - fd) <
                      1e-3 * std::max(1.0, std::abs(fd)));
            }
            t->zero_grad();
        }
    }
}

TEST_CASE("pointwise_loss is binary cross-entropy on the logit") {
    CHECK(pointwise_loss(1.0, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(pointwise_loss(0.0, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(pointwise_loss(1.0, 2.0) ==
          doctest::Approx(std::log1p(std::exp(-2.0))));

    SUBCASE("convexity identity: L(1,s) + L(0,s) >= 2 ln 2") {
        Rng rng(4);
        for (int t = 0; t < 300; ++t) {
            const double s = rng.normal() * 3.0;
            CHECK(pointwise_loss(1.0, s) + pointwise_loss(0.0, s) >=
                  2.0 * std::log(2.0) - 1e-12);
        }
        CHECK(pointwise_loss(1.0, 0.0) + pointwise_loss(0.0, 0.0) ==
              doctest::Approx(2.0 * std::log(2.0)));
    }

    SUBCASE("tape version agrees") {
        ad::Tape tape;
        NcfParams dummy;
        for (double s : {-1.5, 0.0, 2.5}) {
            CHECK(tape.value(pointwise_loss(tape, 1.0,
                                            tape.constant({s}))) ==
                  doctest::Approx(pointwise_loss(1.0, s)));
            CHECK(tape.value(pointwise_loss(tape, 0.0,
                                            tape.constant({s}))) ==
                  doctest::Approx(pointwise_loss(0.0, s)));
        }
    }
}

TEST_CASE("pairwise_loss is a hinge on the score gap") {
    CHECK(pairwise_loss(0.5, -1.0, 1.0) == doctest::Approx(0.0));
    CHECK(pairwise_loss(-0.5, -1.0, 1.0) == doctest::Approx(0.5));
    CHECK(pairwise_loss(2.0, 1.5, 0.5) == doctest::Approx(0.0));

    SUBCASE("non-increasing in s_pos") {
        double prev = 1e18;
        for (double sp = -2.0; sp <= 2.0; sp += 0.1) {
            const double l = pairwise_loss(sp, 0.0, 1.0);
            CHECK(l <= prev + 1e-15);
            prev = l;
        }
    }

    SUBCASE("tape version agrees") {
        ad::Tape tape;
        CHECK(tape.value(pairwise_loss(tape, tape.constant({-0.5}),
                                       tape.constant({-1.0}), 1.0)) ==
              doctest::Approx(0.5));
    }
}

TEST_CASE("regularize sums squared entries over embedding tables") {
    Tensor t("embedding", "x", 1, 2);
    t.value[0] = 3.0f;
    t.value[1] = 4.0f;
    const Tensor* tables[] = {&t};
    CHECK(regularize(tables, 0.0) == doctest::Approx(0.0));
    CHECK(regularize(tables, 0.1) == doctest::Approx(2.5));
}
