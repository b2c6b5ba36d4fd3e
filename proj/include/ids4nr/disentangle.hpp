#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ids4nr/autodiff.hpp"
#include "ids4nr/rng.hpp"
#include "ids4nr/tensor.hpp"

namespace ids4nr::disentangle {

// Popularity/preference prototypes and per-intent aggregation FFNs for one
// side (users or items).
struct IntentParams {
    Tensor proto_pop, proto_pref;    // 1 x D each
    Tensor ffn_pop_w, ffn_pop_b;     // D x D, 1 x D
    Tensor ffn_pref_w, ffn_pref_b;

    void init(int dim, const std::string& side, Rng& rng);
    std::vector<Tensor*> tensors();
};

// Soft assignment of each feature to the two intents:
// w_pop = exp(c_pop.a) / (exp(c_pop.a) + exp(c_pref.a)), w_pref = 1 - w_pop.
struct ClusterWeights {
    std::vector<double> pop;
    std::vector<double> pref;
};

ClusterWeights cluster_weights(const IntentParams& m,
                               std::span<const std::vector<double>> features);

struct DisentangledRepr {
    std::vector<double> pop;
    std::vector<double> pref;
};

// pop = W_pop (sum_i w_pop_i a_i) + b_pop, and likewise for pref.
DisentangledRepr aggregate_intent(const IntentParams& m,
                                  std::span<const std::vector<double>> features,
                                  const ClusterWeights& w);

DisentangledRepr disentangle(const IntentParams& m,
                             std::span<const std::vector<double>> features);

// Tape version used in training: returns (pop, pref) nodes.
std::pair<ad::Var, ad::Var> disentangle(ad::Tape& tape, IntentParams& m,
                                        std::span<const ad::Var> features);

}  // namespace ids4nr::disentangle
