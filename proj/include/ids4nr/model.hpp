#pragma once

#include <string>
#include <vector>

#include "ids4nr/backbones.hpp"
#include "ids4nr/dataset.hpp"
#include "ids4nr/disentangle.hpp"
#include "ids4nr/selfsup.hpp"
#include "ids4nr/tensor.hpp"

namespace ids4nr {

enum class Ablation { Full, NoSs, NoSsExp, NoSsId };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& s);

// How the two intent scores are combined into the final ranking score.
enum class Fusion { Mean, Pop, Pref };

std::string fusion_name(Fusion f);
Fusion fusion_from_name(const std::string& s);

struct TrainConfig {
    backbones::BackboneConfig backbone;
    int dim = 50;
    int batch_size = 128;
    double lr = 0.001;
    int epochs = -1;       // -1: 40 for lfm/ncf, 30 for cml
    double gamma = 0.01;
    double lambda = -1.0;  // -1: 1e-5 for lfm/ncf, 0 for cml (norm clipping)
    int negatives = 4;
    uint64_t seed = 42;
    Ablation ablation = Ablation::Full;
    Fusion fusion = Fusion::Mean;

    void resolve();  // fill backbone-dependent defaults
    BatchMode batch_mode() const {
        return backbone.pairwise() ? BatchMode::Pairwise
                                   : BatchMode::Pointwise;
    }
};

// All trainable state plus the attribute layout needed to assemble feature
// bundles [a0, a1, ..., ak] per entity.
struct ModelState {
    TrainConfig cfg;
    int num_users = 0;
    int num_items = 0;
    int dim = 0;

    Tensor user_emb;  // M x D collaborative features p_u
    Tensor item_emb;  // N x D collaborative features q_v
    Tensor attr_emb;  // A x D shared attribute value embeddings

    disentangle::IntentParams user_intent, item_intent;
    selfsup::SelfSupParams selfsup;
    backbones::NcfParams ncf;

    // Cold item rows are initialized but never receive gradient.
    std::vector<uint8_t> item_frozen;

    // Per entity, per attribute field: rows of attr_emb. A field's feature is
    // the mean of its value embeddings. user/item_bundle_fields keep only
    // fields with at least one value; item_content_fields covers every item
    // field (empty fields contribute a zero block to x_v).
    std::vector<std::vector<std::vector<int>>> user_bundle_fields;
    std::vector<std::vector<std::vector<int>>> item_bundle_fields;
    std::vector<std::vector<std::vector<int>>> item_content_fields;

    bool intent_enabled() const { return cfg.ablation != Ablation::NoSsId; }
    bool selfsup_active() const {
        return cfg.ablation == Ablation::Full && selfsup.enabled();
    }
    int item_content_dim() const { return selfsup.content_dim; }

    // Every trainable tensor, registered exactly once.
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;

    // ---- forward on frozen parameters (evaluation path) ----

    // Feature bundle as plain vectors; a0 first. If impute_cold is set and
    // the item is flagged cold, a0 comes from the content encoder.
    std::vector<std::vector<double>> user_features(int u) const;
    std::vector<std::vector<double>> item_features(int v, bool impute_cold,
                                                   const std::vector<uint8_t>&
                                                       cold_mask) const;

    // Concatenated attribute features x_v (zero block per empty field).
    std::vector<double> item_content(int v) const;
};

struct EntityRepr {
    // single == true: `pop` holds the lone representation (no_ss_id path).
    bool single = false;
    std::vector<double> pop;
    std::vector<double> pref;
};

EntityRepr user_repr(const ModelState& m, int u);
EntityRepr item_repr(const ModelState& m, int v,
                     const std::vector<uint8_t>& cold_mask);

// Backbone score under the configured fusion rule.
double pair_score(const ModelState& m, const EntityRepr& user,
                  const EntityRepr& item);

// Zeroed tensors of the right shapes; used by init_model and checkpoint load.
ModelState allocate_model(const Dataset& data, const TrainConfig& cfg);

// Embeddings and prototypes drawn from N(0, 1/D) under cfg.seed; cold items'
// rows are flagged frozen.
ModelState init_model(const Dataset& data, const TrainConfig& cfg,
                      const std::vector<int>& cold_items);

long count_parameters(const ModelState& m);

}  // namespace ids4nr
