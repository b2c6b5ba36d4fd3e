#pragma once

#include "ids4nr/autodiff.hpp"
#include "ids4nr/vecmath.hpp"

namespace ids4nr::loss {

// alpha * L_pref + (1 - alpha) * L_pop; alpha is the novelty score of the
// example's item (positive or negative alike).
inline double novelty_weighted_pointwise(double l_pref, double l_pop,
                                         double alpha) {
    return alpha * l_pref + (1.0 - alpha) * l_pop;
}

// Pair-wise weight sigmoid(alpha_pos - alpha_neg).
inline double pairwise_intent_weight(double alpha_pos, double alpha_neg) {
    return vm::sigmoid(alpha_pos - alpha_neg);
}

inline double novelty_weighted_pairwise(double l_pref, double l_pop,
                                        double alpha_pos, double alpha_neg) {
    const double w = pairwise_intent_weight(alpha_pos, alpha_neg);
    return w * l_pref + (1.0 - w) * l_pop;
}

inline double joint_loss(double l_rec, double l_ss, double gamma) {
    return l_rec + gamma * l_ss;
}

// Tape version; the weight is data (a constant), not a differentiable input.
inline ad::Var novelty_weighted(ad::Tape& tape, ad::Var l_pref, ad::Var l_pop,
                                double weight) {
    return tape.add(tape.scale(l_pref, weight),
                    tape.scale(l_pop, 1.0 - weight));
}

}  // namespace ids4nr::loss
