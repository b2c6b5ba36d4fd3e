#include <doctest.h>

#include <cmath>
#include <set>

#include "ids4nr/selfsup.hpp"
#include "ids4nr/vecmath.hpp"
#include "test_util.hpp"

using namespace ids4nr;
using namespace ids4nr::selfsup;

namespace {

SelfSupParams random_params(int content, int latent, uint64_t seed) {
    SelfSupParams p;
    Rng rng(seed);
    p.init(content, latent, rng);
    return p;
}

std::vector<double> random_vec(int n, Rng& rng, double s = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal() * s;
    return v;
}

}  // namespace

TEST_CASE("encode_content") {
    SUBCASE("zero parameters give mu=0, sigma=1") {
        SelfSupParams p;
        Rng rng(1);
        p.init(6, 3, rng);
        for (Tensor* t : p.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
        std::vector<double> x{1.0, -2.0, 0.5, 0.0, 3.0, 1.0};
        std::vector<double> mu, sigma;
        encode_content(p, x, mu, sigma);
        REQUIRE(mu.size() == 3);
        REQUIRE(sigma.size() == 3);
        for (double m : mu) CHECK(m == 0.0);
        for (double s : sigma) CHECK(s == 1.0);
    }

    SUBCASE("shapes and determinism") {
        auto p = random_params(8, 4, 7);
        Rng rng(2);
        auto x = random_vec(8, rng);
        std::vector<double> mu1, s1, mu2, s2;
        encode_content(p, x, mu1, s1);
        encode_content(p, x, mu2, s2);
        CHECK(mu1.size() == 4);
        CHECK(s1.size() == 4);
        CHECK(mu1 == mu2);
        CHECK(s1 == s2);
        for (double s : s1) CHECK(s > 0.0);
    }
}

TEST_CASE("reparameterize is mu + eps * sigma") {
    std::vector<double> mu{1.0, 2.0}, sigma{2.0, 1.0};
    SUBCASE("eps = 0 gives mu") {
        CHECK(reparameterize(mu, sigma, std::vector<double>{0.0, 0.0}) == mu);
    }
    SUBCASE("standard normal passthrough") {
        std::vector<double> z = reparameterize(
            std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0},
            std::vector<double>{0.3, -0.7});
        CHECK(z == std::vector<double>{0.3, -0.7});
    }
    SUBCASE("elementwise evaluation") {
        std::vector<double> z =
            reparameterize(mu, sigma, std::vector<double>{1.0, -1.0});
        CHECK(z == std::vector<double>{3.0, 1.0});
    }
}

TEST_CASE("decode_latent") {
    SUBCASE("zero parameters give zero output of dim k*D") {
        SelfSupParams p;
        Rng rng(1);
        p.init(10, 5, rng);
        for (Tensor* t : p.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
        auto xr = decode_latent(p, std::vector<double>{1, 2, 3, 4, 5});
        REQUIRE(xr.size() == 10);
        for (double v : xr) CHECK(v == 0.0);
    }

    SUBCASE("tape analytic gradient w.r.t. z matches finite differences of "
            "the plain decoder") {
        auto p = random_params(6, 3, 11);
        Rng rng(4);
        auto z0 = random_vec(3, rng, 0.8);
        auto w = random_vec(6, rng);  // random probe direction

        Tensor zt("t", "z", 1, 3);
        for (int i = 0; i < 3; ++i) zt.value[i] = static_cast<float>(z0[i]);
        ad::Tape tape;
        ad::Var z = tape.param(zt);
        tape.backward(tape.dot(tape.constant(w), decode_tape(tape, p, z)));

        for (int i = 0; i < 3; ++i) {
            const double eps = 1e-4;
            auto zp = vm::tensor_row(zt, 0);
            zp[i] += eps;
            auto zm = vm::tensor_row(zt, 0);
            zm[i] -= eps;
            const double fp = vm::dot(w, decode_latent(p, zp));
            const double fm = vm::dot(w, decode_latent(p, zm));
            const double fd = (fp - fm) / (2 * eps);
            CHECK(std::abs(zt.grad[i] - fd) <
                  1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("vae_loss") {
    SUBCASE("posterior equals prior with perfect reconstruction") {
        std::vector<double> x{0.4, -0.2}, mu{0.0, 0.0}, sigma{1.0, 1.0};
        CHECK(vae_loss(x, mu, sigma, x) == doctest::Approx(0.0));
    }
    SUBCASE("single dim, mu=1, sigma=1 gives KL = 0.5") {
        std::vector<double> x{0.0}, mu{1.0}, sigma{1.0};
        CHECK(vae_loss(x, mu, sigma, x) == doctest::Approx(0.5));
    }
    SUBCASE("reconstruction 0.5 * squared error") {
        std::vector<double> x{1.0, 0.0}, xr{0.0, 0.0};
        std::vector<double> mu{0.0, 0.0}, sigma{1.0, 1.0};
        CHECK(vae_loss(x, mu, sigma, xr) == doctest::Approx(0.5));
    }
    SUBCASE("KL term is non-negative over 10^4 random (mu, sigma)") {
        Rng rng(12);
        for (int t = 0; t < 10000; ++t) {
            std::vector<double> x{0.0, 0.0, 0.0};
            auto mu = random_vec(3, rng, 2.0);
            std::vector<double> sigma(3);
            for (double& s : sigma) s = std::exp(rng.normal());
            CHECK(vae_loss(x, mu, sigma, x) >= -1e-12);
        }
    }
}

TEST_CASE("mim_loss") {
    std::vector<double> z{1.0, 0.0}, qp{1.0, 0.0}, qn{1.0, 0.0};
    SUBCASE("indifference point is ln 2") {
        CHECK(mim_loss(z, qp, qn) == doctest::Approx(std::log(2.0)));
    }
    SUBCASE("margin 2 evaluates to -ln sigmoid(2)") {
        std::vector<double> qn2{-1.0, 0.0};  // z.qp - z.qn = 2
        CHECK(mim_loss(z, qp, qn2) ==
              doctest::Approx(std::log1p(std::exp(-2.0))));
        CHECK(mim_loss(z, qp, qn2) == doctest::Approx(0.126928).epsilon(1e-4));
    }
    SUBCASE("strictly decreasing in the positive margin") {
        double prev = 1e9;
        for (double m = -3.0; m <= 3.0; m += 0.25) {
            std::vector<double> qpm{m, 0.0};
            const double l = mim_loss(z, qpm, qn);
            CHECK(l < prev);
            CHECK(l > 0.0);
            prev = l;
        }
    }
}

TEST_CASE("sample_mim_negative finds attribute-disjoint items") {
    using testutil::fresh_dir;
    using testutil::make_log;
    using testutil::write_file;

    auto dir = fresh_dir("mim");
    std::vector<std::tuple<int, int, long long>> recs;
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 6; ++v) recs.push_back({u, v, 1});

    SUBCASE("eligible item with disjoint genres") {
        auto ia = write_file(dir, "ia.tsv",
                             "i0\tgenre\tcomedy\n"
                             "i1\tgenre\tdrama\n"
                             "i2\tgenre\tcomedy\n"
                             "i3\tgenre\tdrama\n"
                             "i4\tgenre\tcomedy\n"
                             "i5\tgenre\tdrama\n");
        auto data =
            build_dataset(make_log(recs), "", ia, FileFormat::Tsv, 1);
        Rng rng(3);
        for (int t = 0; t < 200; ++t) {
            const int neg = sample_mim_negative(data, 0, rng);
            // anchor i0 is comedy; negatives must be drama items
            CHECK((neg == 1 || neg == 3 || neg == 5));
        }
    }

    SUBCASE("all items share a value: capped fallback, no infinite loop") {
        auto ia = write_file(dir, "ia2.tsv",
                             "i0\tgenre\tcomedy\n"
                             "i1\tgenre\tcomedy\n"
                             "i2\tgenre\tcomedy\ni2\tgenre\tdrama\n"
                             "i3\tgenre\tcomedy\n"
                             "i4\tgenre\tcomedy\n"
                             "i5\tgenre\tcomedy\n");
        auto data =
            build_dataset(make_log(recs), "", ia, FileFormat::Tsv, 1);
        Rng rng(3);
        const int neg = sample_mim_negative(data, 2, rng);
        // Everything overlaps the anchor; the least-overlapping item with
        // the smallest index wins the fallback.
        CHECK(neg == 0);
    }

    SUBCASE("property: disjoint whenever a disjoint item exists") {
        auto ia = write_file(dir, "ia3.tsv",
                             "i0\tgenre\tcomedy\ni0\tera\te1\n"
                             "i1\tgenre\tdrama\ni1\tera\te1\n"
                             "i2\tgenre\tdrama\ni2\tera\te2\n"
                             "i3\tgenre\tcomedy\ni3\tera\te2\n"
                             "i4\tgenre\taction\ni4\tera\te3\n"
                             "i5\tgenre\tdrama\ni5\tera\te3\n");
        auto data =
            build_dataset(make_log(recs), "", ia, FileFormat::Tsv, 1);
        Rng rng(9);
        for (int t = 0; t < 1000; ++t) {
            const int anchor = rng.uniform_index(6);
            const int neg = sample_mim_negative(data, anchor, rng);
            // Brute-force disjointness oracle.
            std::set<int> av;
            for (const auto& r : data.item_attrs[anchor])
                av.insert(r.value_row);
            bool shared = false;
            for (const auto& r : data.item_attrs[neg])
                shared |= av.count(r.value_row) > 0;
            bool disjoint_exists = false;
            for (int v = 0; v < 6 && !disjoint_exists; ++v) {
                if (v == anchor) continue;
                bool any = false;
                for (const auto& r : data.item_attrs[v])
                    any |= av.count(r.value_row) > 0;
                disjoint_exists = !any;
            }
            if (disjoint_exists) CHECK_FALSE(shared);
        }
    }
}

TEST_CASE("ss_term composes VAE + MIM and differentiates end to end") {
    auto p = random_params(6, 3, 21);
    Rng rng(5);
    Tensor xt("t", "x", 1, 6), qpt("t", "qp", 1, 3), qnt("t", "qn", 1, 3);
    xt.fill_normal(rng, 0.7);
    qpt.fill_normal(rng, 0.7);
    qnt.fill_normal(rng, 0.7);
    const auto eps = random_vec(3, rng, 1.0);

    auto build = [&](ad::Tape& t) {
        return ss_term(t, p, t.param(xt), t.param(qpt), t.param(qnt), eps);
    };

    SUBCASE("total is the sum of the two parts") {
        ad::Tape tape;
        auto ss = build(tape);
        CHECK(tape.value(ss.total) ==
              doctest::Approx(tape.value(ss.vae) + tape.value(ss.mim)));
        CHECK(tape.value(ss.mim) > 0.0);
    }

    SUBCASE("tape values agree with the plain forward functions") {
        ad::Tape tape;
        auto ss = build(tape);
        std::vector<double> mu, sigma;
        auto x = vm::tensor_row(xt, 0);
        encode_content(p, x, mu, sigma);
        auto z = reparameterize(mu, sigma, eps);
        auto xr = decode_latent(p, z);
        const double vae = vae_loss(x, mu, sigma, xr);
        const double mim =
            mim_loss(z, vm::tensor_row(qpt, 0), vm::tensor_row(qnt, 0));
        CHECK(tape.value(ss.vae) == doctest::Approx(vae).epsilon(1e-10));
        CHECK(tape.value(ss.mim) == doctest::Approx(mim).epsilon(1e-10));
    }

    SUBCASE("gradient w.r.t. every parameter group matches central "
            "differences") {
        ad::Tape tape;
        tape.backward(build(tape).total);
        std::vector<Tensor*> all = p.tensors();
        all.push_back(&xt);
        all.push_back(&qpt);
        all.push_back(&qnt);
        for (Tensor* t : all) {
            std::vector<double> saved = t->grad;
            for (int i = 0; i < t->size(); ++i) {
                const float old = t->value[i];
                const double eps_fd = 1e-4;
                t->value[i] =
                    static_cast<float>(static_cast<double>(old) + eps_fd);
                const double hi = static_cast<double>(t->value[i]);
                ad::Tape tp;
                const double lp = tp.value(build(tp).total);
                t->value[i] =
                    static_cast<float>(static_cast<double>(old) - eps_fd);
                const double lo = static_cast<double>(t->value[i]);
                ad::Tape tm;
                const double lm = tm.value(build(tm).total);
                t->value[i] = old;
                const double fd = (lp - lm) / (hi - lo);
                CHECK(std::abs(saved[i] - fd) <
                      1e-3 * std::max({1.0, std::abs(saved[i]),
                                       std::abs(fd)}));
            }
            t->zero_grad();
        }
    }

    SUBCASE("reparameterization with eps fixed at 0 is bit-identical") {
        const std::vector<double> zero_eps(3, 0.0);
        ad::Tape t1, t2;
        auto s1 = ss_term(t1, p, t1.param(xt), t1.param(qpt), t1.param(qnt),
                          zero_eps);
        auto s2 = ss_term(t2, p, t2.param(xt), t2.param(qpt), t2.param(qnt),
                          zero_eps);
        CHECK(t1.value(s1.total) == t2.value(s2.total));
    }
}

TEST_CASE("impute_cold_collaborative returns the latent mean") {
    auto p = random_params(8, 4, 31);
    Rng rng(6);
    auto x = random_vec(8, rng);
    std::vector<double> mu, sigma;
    encode_content(p, x, mu, sigma);
    CHECK(impute_cold_collaborative(p, x) == mu);
}
