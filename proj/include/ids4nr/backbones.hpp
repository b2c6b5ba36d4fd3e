#pragma once

#include <span>
#include <string>
#include <vector>

#include "ids4nr/autodiff.hpp"
#include "ids4nr/rng.hpp"
#include "ids4nr/tensor.hpp"

namespace ids4nr::backbones {

enum class Kind { Lfm, Ncf, Cml };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& s);

struct BackboneConfig {
    Kind kind = Kind::Cml;
    // Layer widths of the NCF perceptron tower including its input width;
    // empty means [2D, D, D/2].
    std::vector<int> ncf_tower_dims;
    double cml_margin = 1.0;

    bool pairwise() const { return kind == Kind::Cml; }
    std::vector<int> tower_dims(int dim) const {
        if (!ncf_tower_dims.empty()) return ncf_tower_dims;
        return {2 * dim, dim, dim / 2};
    }
};

// NCF: a GMF branch (weighted inner product) and a rectified perceptron
// tower over [p; q], fused into a raw logit by a final weight vector.
struct NcfParams {
    std::vector<Tensor> tower_w;
    std::vector<Tensor> tower_b;
    Tensor gmf_w;     // 1 x D
    Tensor fusion_w;  // 1 x (1 + last tower width)

    bool enabled() const { return gmf_w.cols > 0; }
    void init(int dim, const std::vector<int>& dims, Rng& rng);
    std::vector<Tensor*> tensors();
};

// ---- scoring (plain) ----
double score_lfm(std::span<const double> p, std::span<const double> q);
double score_ncf(const NcfParams& m, std::span<const double> p,
                 std::span<const double> q);
// Negated squared euclidean distance, so larger is better for every backbone.
double score_cml(std::span<const double> p, std::span<const double> q);

// ---- losses (plain) ----
double pointwise_loss(double y, double logit);  // binary cross-entropy
double pairwise_loss(double s_pos, double s_neg, double margin);  // hinge

// lambda * sum of squared entries over the given embedding tables.
double regularize(std::span<const Tensor* const> embedding_tables,
                  double lambda);

// ---- tape versions ----
ad::Var score(ad::Tape& tape, Kind kind, NcfParams& ncf, ad::Var p, ad::Var q);
ad::Var pointwise_loss(ad::Tape& tape, double y, ad::Var logit);
ad::Var pairwise_loss(ad::Tape& tape, ad::Var s_pos, ad::Var s_neg,
                      double margin);

}  // namespace ids4nr::backbones
