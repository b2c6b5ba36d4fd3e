#include "ids4nr/selfsup.hpp"

#include <algorithm>
#include <cmath>

#include "ids4nr/vecmath.hpp"

namespace ids4nr::selfsup {

void SelfSupParams::init(int content, int latent, Rng& rng) {
    content_dim = content;
    latent_dim = latent;
    auto make = [&](Tensor& t, const char* name, int rows, int cols,
                    bool weights) {
        t = Tensor("selfsup", name, rows, cols);
        if (weights) {
            Rng r = rng.fork(fnv1a(name));
            t.fill_normal(r, 1.0 / std::sqrt(static_cast<double>(cols)));
        }
    };
    make(enc_w1, "enc_w1", latent, content, true);
    make(enc_b1, "enc_b1", 1, latent, false);
    make(enc_wmu, "enc_wmu", latent, latent, true);
    make(enc_bmu, "enc_bmu", 1, latent, false);
    make(enc_wlv, "enc_wlv", latent, latent, true);
    make(enc_blv, "enc_blv", 1, latent, false);
    make(dec_w1, "dec_w1", latent, latent, true);
    make(dec_b1, "dec_b1", 1, latent, false);
    make(dec_w2, "dec_w2", content, latent, true);
    make(dec_b2, "dec_b2", 1, content, false);
}

std::vector<Tensor*> SelfSupParams::tensors() {
    if (!enabled()) return {};
    return {&enc_w1, &enc_b1, &enc_wmu, &enc_bmu, &enc_wlv,
            &enc_blv, &dec_w1, &dec_b1, &dec_w2,  &dec_b2};
}

void encode_content(const SelfSupParams& p, std::span<const double> x,
                    std::vector<double>& mu, std::vector<double>& sigma) {
    auto h = vm::affine(p.enc_w1, p.enc_b1, x);
    vm::tanh_inplace(h);
    mu = vm::affine(p.enc_wmu, p.enc_bmu, h);
    sigma = vm::affine(p.enc_wlv, p.enc_blv, h);
    for (double& s : sigma) s = std::exp(0.5 * s);
}

std::vector<double> reparameterize(std::span<const double> mu,
                                   std::span<const double> sigma,
                                   std::span<const double> eps) {
    std::vector<double> z(mu.size());
    for (size_t i = 0; i < mu.size(); ++i) z[i] = mu[i] + eps[i] * sigma[i];
    return z;
}

std::vector<double> decode_latent(const SelfSupParams& p,
                                  std::span<const double> z) {
    auto h = vm::affine(p.dec_w1, p.dec_b1, z);
    vm::tanh_inplace(h);
    return vm::affine(p.dec_w2, p.dec_b2, h);
}

double vae_loss(std::span<const double> x, std::span<const double> mu,
                std::span<const double> sigma, std::span<const double> xr) {
    double kl = 0.0;
    for (size_t d = 0; d < mu.size(); ++d) {
        const double s2 = sigma[d] * sigma[d];
        kl += s2 + mu[d] * mu[d] - 1.0 - std::log(s2);
    }
    kl *= 0.5;
    double rec = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - xr[i];
        rec += d * d;
    }
    return kl + 0.5 * rec;
}

double mim_loss(std::span<const double> z, std::span<const double> q_pos,
                std::span<const double> q_neg) {
    const double margin = vm::dot(z, q_pos) - vm::dot(z, q_neg);
    return vm::softplus(-margin);
}

namespace {

int shared_value_count(const std::vector<AttrRef>& a,
                       const std::vector<AttrRef>& b) {
    int shared = 0;
    for (const AttrRef& x : a)
        for (const AttrRef& y : b)
            if (x.value_row == y.value_row) ++shared;
    return shared;
}

}  // namespace

int sample_mim_negative(const Dataset& data, int anchor_item, Rng& rng) {
    const auto& anchor = data.item_attrs[anchor_item];
    for (int attempt = 0; attempt < 100; ++attempt) {
        const int v = rng.uniform_index(data.num_items);
        if (v == anchor_item) continue;
        if (shared_value_count(anchor, data.item_attrs[v]) == 0) return v;
    }
    // No disjoint item found in time: take the least-overlapping one.
    int best = -1, best_shared = -1;
    for (int v = 0; v < data.num_items; ++v) {
        if (v == anchor_item) continue;
        const int s = shared_value_count(anchor, data.item_attrs[v]);
        if (best < 0 || s < best_shared) {
            best = v;
            best_shared = s;
        }
    }
    return best;
}

std::vector<double> impute_cold_collaborative(const SelfSupParams& p,
                                              std::span<const double> x) {
    std::vector<double> mu, sigma;
    encode_content(p, x, mu, sigma);
    return mu;
}

EncodedVars encode_tape(ad::Tape& tape, SelfSupParams& p, ad::Var x) {
    ad::Var h = tape.tanh(tape.affine(p.enc_w1, x, p.enc_b1));
    EncodedVars out;
    out.mu = tape.affine(p.enc_wmu, h, p.enc_bmu);
    out.logvar = tape.affine(p.enc_wlv, h, p.enc_blv);
    out.sigma = tape.exp(tape.scale(out.logvar, 0.5));
    return out;
}

ad::Var decode_tape(ad::Tape& tape, SelfSupParams& p, ad::Var z) {
    ad::Var h = tape.tanh(tape.affine(p.dec_w1, z, p.dec_b1));
    return tape.affine(p.dec_w2, h, p.dec_b2);
}

SsVars ss_term(ad::Tape& tape, SelfSupParams& p, ad::Var x, ad::Var q_pos,
               ad::Var q_neg, std::span<const double> eps) {
    EncodedVars enc = encode_tape(tape, p, x);
    ad::Var z = tape.add(enc.mu, tape.mul(tape.constant(eps), enc.sigma));
    ad::Var xr = decode_tape(tape, p, z);

    // KL = 0.5 * (sum(sigma^2) + |mu|^2 - D - sum(logvar))
    ad::Var kl = tape.scale(
        tape.sub(tape.add(tape.sum(tape.exp(enc.logvar)),
                          tape.dot(enc.mu, enc.mu)),
                 tape.add_const(tape.sum(enc.logvar),
                                static_cast<double>(p.latent_dim))),
        0.5);
    ad::Var rec = tape.scale(tape.square_norm(tape.sub(x, xr)), 0.5);
    SsVars out;
    out.vae = tape.add(kl, rec);
    out.mim = tape.softplus(
        tape.scale(tape.sub(tape.dot(z, q_pos), tape.dot(z, q_neg)), -1.0));
    out.total = tape.add(out.vae, out.mim);
    return out;
}

}  // namespace ids4nr::selfsup
