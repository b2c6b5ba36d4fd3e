#pragma once

#include <span>
#include <vector>

#include "ids4nr/autodiff.hpp"
#include "ids4nr/dataset.hpp"
#include "ids4nr/rng.hpp"
#include "ids4nr/tensor.hpp"

namespace ids4nr::selfsup {

// Content VAE plus the dot-product discriminator used for mutual-information
// maximization between latent content features and collaborative features.
// Encoder: x (content_dim) -> tanh hidden (latent_dim) -> (mu, logvar).
// Decoder: z (latent_dim) -> tanh hidden (latent_dim) -> x' (content_dim).
struct SelfSupParams {
    int content_dim = 0;  // k * D over all item attribute fields
    int latent_dim = 0;   // D
    Tensor enc_w1, enc_b1;
    Tensor enc_wmu, enc_bmu;
    Tensor enc_wlv, enc_blv;
    Tensor dec_w1, dec_b1;
    Tensor dec_w2, dec_b2;

    bool enabled() const { return content_dim > 0; }
    void init(int content, int latent, Rng& rng);
    std::vector<Tensor*> tensors();
};

// ---- forward on frozen parameters ----

// Returns (mu, sigma) with sigma = exp(0.5 * logvar) > 0.
void encode_content(const SelfSupParams& p, std::span<const double> x,
                    std::vector<double>& mu, std::vector<double>& sigma);

// z = mu + eps (.) sigma
std::vector<double> reparameterize(std::span<const double> mu,
                                   std::span<const double> sigma,
                                   std::span<const double> eps);

std::vector<double> decode_latent(const SelfSupParams& p,
                                  std::span<const double> z);

// KL(N(mu, sigma^2) || N(0, I)) + 0.5 * ||x - xr||^2, the minimization form.
double vae_loss(std::span<const double> x, std::span<const double> mu,
                std::span<const double> sigma, std::span<const double> xr);

// -log sigmoid(z.q_pos - z.q_neg)
double mim_loss(std::span<const double> z, std::span<const double> q_pos,
                std::span<const double> q_neg);

// Uniform item sharing zero attribute values with the anchor. Capped
// rejection sampling (100 tries) falling back to the item with the fewest
// shared values (smaller index on ties). The anchor must have attributes.
int sample_mim_negative(const Dataset& data, int anchor_item, Rng& rng);

// The deterministic latent mean, used as a cold item's collaborative feature
// at inference time.
std::vector<double> impute_cold_collaborative(const SelfSupParams& p,
                                              std::span<const double> x);

// ---- tape building (training path) ----

struct EncodedVars {
    ad::Var mu;
    ad::Var logvar;
    ad::Var sigma;
};

EncodedVars encode_tape(ad::Tape& tape, SelfSupParams& p, ad::Var x);
ad::Var decode_tape(ad::Tape& tape, SelfSupParams& p, ad::Var z);

struct SsVars {
    ad::Var vae;
    ad::Var mim;
    ad::Var total;
};

// VAE + MIM term for one item; x and q_pos/q_neg are existing tape nodes so
// gradients flow into the shared attribute and collaborative embeddings.
SsVars ss_term(ad::Tape& tape, SelfSupParams& p, ad::Var x, ad::Var q_pos,
               ad::Var q_neg, std::span<const double> eps);

}  // namespace ids4nr::selfsup
