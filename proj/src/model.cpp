#include "ids4nr/model.hpp"

#include <cmath>

#include "ids4nr/errors.hpp"
#include "ids4nr/vecmath.hpp"

namespace ids4nr {

std::string ablation_name(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::NoSs: return "no_ss";
        case Ablation::NoSsExp: return "no_ss_exp";
        case Ablation::NoSsId: return "no_ss_id";
    }
    return "?";
}

Ablation ablation_from_name(const std::string& s) {
    if (s == "full") return Ablation::Full;
    if (s == "no_ss") return Ablation::NoSs;
    if (s == "no_ss_exp") return Ablation::NoSsExp;
    if (s == "no_ss_id") return Ablation::NoSsId;
    throw ConfigError("unknown ablation '" + s + "'");
}

std::string fusion_name(Fusion f) {
    switch (f) {
        case Fusion::Mean: return "mean";
        case Fusion::Pop: return "pop";
        case Fusion::Pref: return "pref";
    }
    return "?";
}

Fusion fusion_from_name(const std::string& s) {
    if (s == "mean") return Fusion::Mean;
    if (s == "pop") return Fusion::Pop;
    if (s == "pref") return Fusion::Pref;
    throw ConfigError("unknown fusion '" + s + "'");
}

void TrainConfig::resolve() {
    if (epochs < 0) epochs = backbone.kind == backbones::Kind::Cml ? 30 : 40;
    if (lambda < 0.0)
        lambda = backbone.kind == backbones::Kind::Cml ? 0.0 : 1e-5;
}

namespace {

// Group an entity's (field, value_row) list into per-field row lists.
std::vector<std::vector<int>> field_rows(const std::vector<AttrRef>& refs,
                                         int num_fields, bool keep_empty) {
    std::vector<std::vector<int>> by_field(num_fields);
    for (const AttrRef& r : refs) by_field[r.field].push_back(r.value_row);
    if (keep_empty) return by_field;
    std::vector<std::vector<int>> out;
    for (auto& rows : by_field)
        if (!rows.empty()) out.push_back(std::move(rows));
    return out;
}

}  // namespace

ModelState allocate_model(const Dataset& data, const TrainConfig& cfg) {
    ModelState m;
    m.cfg = cfg;
    m.cfg.resolve();
    m.num_users = data.num_users;
    m.num_items = data.num_items;
    m.dim = cfg.dim;

    m.user_emb = Tensor("embedding", "user_emb", data.num_users, cfg.dim);
    m.item_emb = Tensor("embedding", "item_emb", data.num_items, cfg.dim);
    if (data.num_attr_values > 0)
        m.attr_emb =
            Tensor("embedding", "attr_emb", data.num_attr_values, cfg.dim);

    if (m.intent_enabled()) {
        Rng dummy(0);
        m.user_intent.init(cfg.dim, "user", dummy);
        m.item_intent.init(cfg.dim, "item", dummy);
        for (Tensor* t : m.user_intent.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
        for (Tensor* t : m.item_intent.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
    }
    if (data.num_item_fields > 0) {
        Rng dummy(0);
        m.selfsup.init(data.num_item_fields * cfg.dim, cfg.dim, dummy);
        for (Tensor* t : m.selfsup.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
    }
    if (cfg.backbone.kind == backbones::Kind::Ncf) {
        Rng dummy(0);
        m.ncf.init(cfg.dim, m.cfg.backbone.tower_dims(cfg.dim), dummy);
        for (Tensor* t : m.ncf.tensors())
            std::fill(t->value.begin(), t->value.end(), 0.0f);
    }

    m.item_frozen.assign(data.num_items, 0);
    m.user_bundle_fields.resize(data.num_users);
    for (int u = 0; u < data.num_users; ++u)
        m.user_bundle_fields[u] =
            field_rows(data.user_attrs[u], data.num_user_fields, false);
    m.item_bundle_fields.resize(data.num_items);
    m.item_content_fields.resize(data.num_items);
    for (int v = 0; v < data.num_items; ++v) {
        m.item_bundle_fields[v] =
            field_rows(data.item_attrs[v], data.num_item_fields, false);
        m.item_content_fields[v] =
            field_rows(data.item_attrs[v], data.num_item_fields, true);
    }
    return m;
}

ModelState init_model(const Dataset& data, const TrainConfig& cfg,
                      const std::vector<int>& cold_items) {
    ModelState m = allocate_model(data, cfg);
    Rng master(m.cfg.seed);
    const double std = 1.0 / std::sqrt(static_cast<double>(m.dim));

    {
        Rng r = master.fork(fnv1a("user_emb"));
        m.user_emb.fill_normal(r, std);
    }
    {
        Rng r = master.fork(fnv1a("item_emb"));
        m.item_emb.fill_normal(r, std);
    }
    if (m.attr_emb.size() > 0) {
        Rng r = master.fork(fnv1a("attr_emb"));
        m.attr_emb.fill_normal(r, std);
    }
    if (m.intent_enabled()) {
        Rng ru = master.fork(fnv1a("user_intent"));
        m.user_intent.init(m.dim, "user", ru);
        Rng ri = master.fork(fnv1a("item_intent"));
        m.item_intent.init(m.dim, "item", ri);
    }
    if (m.selfsup.enabled()) {
        Rng r = master.fork(fnv1a("selfsup"));
        m.selfsup.init(m.selfsup.content_dim, m.dim, r);
    }
    if (m.ncf.enabled()) {
        Rng r = master.fork(fnv1a("ncf"));
        m.ncf.init(m.dim, m.cfg.backbone.tower_dims(m.dim), r);
    }
    for (int v : cold_items) m.item_frozen[v] = 1;
    return m;
}

std::vector<Tensor*> ModelState::tensors() {
    std::vector<Tensor*> out{&user_emb, &item_emb};
    if (attr_emb.size() > 0) out.push_back(&attr_emb);
    if (intent_enabled()) {
        for (Tensor* t : user_intent.tensors()) out.push_back(t);
        for (Tensor* t : item_intent.tensors()) out.push_back(t);
    }
    for (Tensor* t : selfsup.tensors()) out.push_back(t);
    for (Tensor* t : ncf.tensors()) out.push_back(t);
    return out;
}

std::vector<const Tensor*> ModelState::tensors() const {
    auto list = const_cast<ModelState*>(this)->tensors();
    return {list.begin(), list.end()};
}

namespace {

std::vector<double> mean_rows(const Tensor& t, const std::vector<int>& rows) {
    std::vector<double> out(t.cols, 0.0);
    for (int r : rows) {
        const float* src = t.row_ptr(r);
        for (int i = 0; i < t.cols; ++i) out[i] += static_cast<double>(src[i]);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : out) x *= inv;
    return out;
}

}  // namespace

std::vector<std::vector<double>> ModelState::user_features(int u) const {
    std::vector<std::vector<double>> feats;
    feats.push_back(vm::tensor_row(user_emb, u));
    for (const auto& rows : user_bundle_fields[u])
        feats.push_back(mean_rows(attr_emb, rows));
    return feats;
}

std::vector<double> ModelState::item_content(int v) const {
    std::vector<double> x(item_content_dim(), 0.0);
    int at = 0;
    for (const auto& rows : item_content_fields[v]) {
        if (!rows.empty()) {
            auto f = mean_rows(attr_emb, rows);
            std::copy(f.begin(), f.end(), x.begin() + at);
        }
        at += dim;
    }
    return x;
}

std::vector<std::vector<double>> ModelState::item_features(
    int v, bool impute_cold, const std::vector<uint8_t>& cold_mask) const {
    std::vector<std::vector<double>> feats;
    if (impute_cold && selfsup_active() && v < (int)cold_mask.size() &&
        cold_mask[v]) {
        if (item_bundle_fields[v].empty())
            throw ColdItemWithoutAttributesError(v);
        feats.push_back(
            selfsup::impute_cold_collaborative(selfsup, item_content(v)));
    } else {
        feats.push_back(vm::tensor_row(item_emb, v));
    }
    for (const auto& rows : item_bundle_fields[v])
        feats.push_back(mean_rows(attr_emb, rows));
    return feats;
}

namespace {

EntityRepr repr_from_features(const ModelState& m,
                              const disentangle::IntentParams& intent,
                              std::vector<std::vector<double>> feats) {
    EntityRepr out;
    if (!m.intent_enabled()) {
        out.single = true;
        out.pop.assign(m.dim, 0.0);
        const double inv = 1.0 / static_cast<double>(feats.size());
        for (const auto& f : feats)
            for (int d = 0; d < m.dim; ++d) out.pop[d] += inv * f[d];
        return out;
    }
    auto rep = disentangle::disentangle(
        intent, std::span<const std::vector<double>>(feats));
    out.pop = std::move(rep.pop);
    out.pref = std::move(rep.pref);
    return out;
}

}  // namespace

EntityRepr user_repr(const ModelState& m, int u) {
    return repr_from_features(m, m.user_intent, m.user_features(u));
}

EntityRepr item_repr(const ModelState& m, int v,
                     const std::vector<uint8_t>& cold_mask) {
    return repr_from_features(m, m.item_intent,
                              m.item_features(v, true, cold_mask));
}

double pair_score(const ModelState& m, const EntityRepr& user,
                  const EntityRepr& item) {
    auto one = [&](std::span<const double> p, std::span<const double> q) {
        switch (m.cfg.backbone.kind) {
            case backbones::Kind::Lfm: return backbones::score_lfm(p, q);
            case backbones::Kind::Ncf: return backbones::score_ncf(m.ncf, p, q);
            case backbones::Kind::Cml: return backbones::score_cml(p, q);
        }
        return 0.0;
    };
    if (user.single) return one(user.pop, item.pop);
    switch (m.cfg.fusion) {
        case Fusion::Pop: return one(user.pop, item.pop);
        case Fusion::Pref: return one(user.pref, item.pref);
        case Fusion::Mean:
            return 0.5 * (one(user.pop, item.pop) + one(user.pref, item.pref));
    }
    return 0.0;
}

long count_parameters(const ModelState& m) {
    long total = 0;
    for (const Tensor* t : m.tensors()) total += t->size();
    return total;
}

}  // namespace ids4nr
