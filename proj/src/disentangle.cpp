#include "ids4nr/disentangle.hpp"

#include <cmath>

#include "ids4nr/vecmath.hpp"

namespace ids4nr::disentangle {

void IntentParams::init(int dim, const std::string& side, Rng& rng) {
    const double std = 1.0 / std::sqrt(static_cast<double>(dim));
    auto make = [&](Tensor& t, const std::string& name, int rows, int cols,
                    bool randomize) {
        t = Tensor("disentangle", side + "." + name, rows, cols);
        if (randomize) {
            Rng r = rng.fork(fnv1a(t.name));
            t.fill_normal(r, std);
        }
    };
    make(proto_pop, "proto_pop", 1, dim, true);
    make(proto_pref, "proto_pref", 1, dim, true);
    make(ffn_pop_w, "ffn_pop_w", dim, dim, true);
    make(ffn_pop_b, "ffn_pop_b", 1, dim, false);
    make(ffn_pref_w, "ffn_pref_w", dim, dim, true);
    make(ffn_pref_b, "ffn_pref_b", 1, dim, false);
}

std::vector<Tensor*> IntentParams::tensors() {
    return {&proto_pop, &proto_pref, &ffn_pop_w,
            &ffn_pop_b, &ffn_pref_w,  &ffn_pref_b};
}

ClusterWeights cluster_weights(const IntentParams& m,
                               std::span<const std::vector<double>> features) {
    ClusterWeights w;
    w.pop.reserve(features.size());
    w.pref.reserve(features.size());
    for (const auto& f : features) {
        const double t_pop = vm::dot_tensor_row(m.proto_pop, 0, f);
        const double t_pref = vm::dot_tensor_row(m.proto_pref, 0, f);
        const double wp = vm::sigmoid(t_pop - t_pref);
        w.pop.push_back(wp);
        w.pref.push_back(1.0 - wp);
    }
    return w;
}

DisentangledRepr aggregate_intent(const IntentParams& m,
                                  std::span<const std::vector<double>> features,
                                  const ClusterWeights& w) {
    const int dim = m.proto_pop.cols;
    std::vector<double> s_pop(dim, 0.0), s_pref(dim, 0.0);
    for (size_t i = 0; i < features.size(); ++i) {
        for (int d = 0; d < dim; ++d) {
            s_pop[d] += w.pop[i] * features[i][d];
            s_pref[d] += w.pref[i] * features[i][d];
        }
    }
    DisentangledRepr out;
    out.pop = vm::affine(m.ffn_pop_w, m.ffn_pop_b, s_pop);
    out.pref = vm::affine(m.ffn_pref_w, m.ffn_pref_b, s_pref);
    return out;
}

DisentangledRepr disentangle(const IntentParams& m,
                             std::span<const std::vector<double>> features) {
    return aggregate_intent(m, features, cluster_weights(m, features));
}

std::pair<ad::Var, ad::Var> disentangle(ad::Tape& tape, IntentParams& m,
                                        std::span<const ad::Var> features) {
    ad::Var c_pop = tape.param(m.proto_pop);
    ad::Var c_pref = tape.param(m.proto_pref);
    std::vector<ad::Var> w_pop, w_pref;
    w_pop.reserve(features.size());
    w_pref.reserve(features.size());
    for (const ad::Var& f : features) {
        ad::Var diff = tape.sub(tape.dot(c_pop, f), tape.dot(c_pref, f));
        ad::Var wp = tape.sigmoid(diff);
        w_pop.push_back(wp);
        w_pref.push_back(tape.add_const(tape.scale(wp, -1.0), 1.0));
    }
    ad::Var s_pop = tape.weighted_sum(features, w_pop);
    ad::Var s_pref = tape.weighted_sum(features, w_pref);
    return {tape.affine(m.ffn_pop_w, s_pop, m.ffn_pop_b),
            tape.affine(m.ffn_pref_w, s_pref, m.ffn_pref_b)};
}

}  // namespace ids4nr::disentangle
