#include "ids4nr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "ids4nr/autodiff.hpp"
#include "ids4nr/loss.hpp"
#include "ids4nr/vecmath.hpp"

namespace ids4nr {

Adam::Adam(std::vector<Tensor*> params, double lr) : lr_(lr) {
    for (Tensor* t : params) {
        index_.emplace(t, static_cast<int>(slots_.size()));
        Slot s;
        s.tensor = t;
        s.m.assign(t->size(), 0.0);
        s.v.assign(t->size(), 0.0);
        slots_.push_back(std::move(s));
    }
}

void Adam::step(const std::vector<std::pair<Tensor*, int>>& touched) {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));

    work_ = touched;
    std::sort(work_.begin(), work_.end());
    work_.erase(std::unique(work_.begin(), work_.end()), work_.end());

    Tensor* whole_done = nullptr;
    for (auto [t, row] : work_) {
        if (whole_done == t) continue;  // already updated as a whole
        auto it = index_.find(t);
        if (it == index_.end()) continue;  // not registered (frozen path)
        Slot& s = slots_[it->second];
        int begin = 0, end = t->size();
        if (row < 0) {
            whole_done = t;
        } else {
            begin = row * t->cols;
            end = begin + t->cols;
        }
        for (int i = begin; i < end; ++i) {
            const double g = t->grad[i];
            s.m[i] = kBeta1 * s.m[i] + (1.0 - kBeta1) * g;
            s.v[i] = kBeta2 * s.v[i] + (1.0 - kBeta2) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            t->value[i] = static_cast<float>(
                static_cast<double>(t->value[i]) -
                lr_ * mhat / (std::sqrt(vhat) + kEps));
            t->grad[i] = 0.0;
        }
    }
}

namespace {

// Per self-supervised instance: the reparameterization noise and the
// attribute-disjoint negative item.
struct SsAux {
    std::vector<double> eps;
    int mim_neg = -1;
};

struct BatchAux {
    std::vector<SsAux> ss;  // aligned with ss-flagged examples, in order
};

bool item_has_content(const ModelState& m, int v) {
    return m.selfsup.enabled() && !m.item_bundle_fields[v].empty();
}

BatchAux prepare_aux(const ModelState& m, const Dataset& data,
                     const TrainBatch& batch, Rng& rng) {
    BatchAux aux;
    if (!m.selfsup_active() || m.cfg.gamma == 0.0) return aux;
    auto draw = [&](int item) {
        SsAux a;
        if (item_has_content(m, item)) {
            a.eps.resize(m.dim);
            for (double& e : a.eps) e = rng.normal();
            a.mim_neg = selfsup::sample_mim_negative(data, item, rng);
        }
        aux.ss.push_back(std::move(a));
    };
    if (batch.mode == BatchMode::Pointwise) {
        for (const auto& ex : batch.points)
            if (ex.ss) draw(ex.item);
    } else {
        for (const auto& ex : batch.pairs)
            if (ex.ss) draw(ex.pos);
    }
    return aux;
}

// Tape-side entity forward. `a0` stays exposed for the MIM discriminator and
// for the collaborative-row L2 term.
struct BuiltEntity {
    std::vector<ad::Var> feats;  // a0 first
    ad::Var a0;
    bool a0_trainable = true;
};

BuiltEntity build_user_entity(ad::Tape& tape, ModelState& m, int u) {
    BuiltEntity e;
    e.a0 = tape.param(m.user_emb, u);
    e.feats.push_back(e.a0);
    for (const auto& rows : m.user_bundle_fields[u])
        e.feats.push_back(tape.rows_mean(m.attr_emb, rows));
    return e;
}

BuiltEntity build_item_entity(ad::Tape& tape, ModelState& m, int v) {
    BuiltEntity e;
    if (m.item_frozen[v]) {
        e.a0 = tape.frozen(m.item_emb, v);
        e.a0_trainable = false;
    } else {
        e.a0 = tape.param(m.item_emb, v);
    }
    e.feats.push_back(e.a0);
    for (const auto& rows : m.item_bundle_fields[v])
        e.feats.push_back(tape.rows_mean(m.attr_emb, rows));
    return e;
}

// x_v = concat over all item fields, zero block where a field has no values.
// Field features are shared with the bundle nodes where present.
ad::Var build_item_content(ad::Tape& tape, ModelState& m, int v,
                           const BuiltEntity& e) {
    std::vector<ad::Var> parts;
    size_t next_feat = 1;  // feats[0] is a0
    for (const auto& rows : m.item_content_fields[v]) {
        if (rows.empty())
            parts.push_back(tape.zeros(m.dim));
        else
            parts.push_back(e.feats[next_feat++]);
    }
    return tape.concat(parts);
}

struct BuiltRepr {
    bool single = false;
    ad::Var pop;
    ad::Var pref;
};

BuiltRepr build_repr(ad::Tape& tape, ModelState& m,
                     disentangle::IntentParams& intent,
                     const BuiltEntity& e) {
    BuiltRepr r;
    if (!m.intent_enabled()) {
        r.single = true;
        ad::Var acc = e.feats[0];
        for (size_t i = 1; i < e.feats.size(); ++i)
            acc = tape.add(acc, e.feats[i]);
        r.pop = tape.scale(acc, 1.0 / static_cast<double>(e.feats.size()));
        return r;
    }
    auto [pop, pref] = disentangle::disentangle(
        tape, intent, std::span<const ad::Var>(e.feats));
    r.pop = pop;
    r.pref = pref;
    return r;
}

struct BuiltLoss {
    ad::Var total;
    double rec_sum = 0.0;  // plain values, for history bookkeeping
    double ss_sum = 0.0;
    int rec_count = 0;
    int ss_count = 0;
};

// The per-batch objective: mean weighted backbone loss (plus the L2 term on
// the examples' collaborative rows) + gamma * mean self-supervision term.
BuiltLoss build_batch_loss(ad::Tape& tape, ModelState& m,
                           const TrainBatch& batch, const BatchAux& aux) {
    const auto kind = m.cfg.backbone.kind;
    const double margin = m.cfg.backbone.cml_margin;
    const double lambda = m.cfg.lambda;
    const bool exp_off = m.cfg.ablation == Ablation::NoSsExp;

    ad::Var rec_acc = tape.zeros(1);
    ad::Var ss_acc = tape.zeros(1);
    ad::Var reg_acc = tape.zeros(1);
    BuiltLoss out;

    int cached_user = -1;
    BuiltEntity user_ent;
    BuiltRepr user_rep;
    int cached_item = -1;
    BuiltEntity item_ent;
    BuiltRepr item_rep;

    auto user_of = [&](int u) {
        if (u != cached_user) {
            user_ent = build_user_entity(tape, m, u);
            user_rep = build_repr(tape, m, m.user_intent, user_ent);
            cached_user = u;
            if (lambda > 0.0)
                reg_acc = tape.add(reg_acc, tape.square_norm(user_ent.a0));
        }
    };
    auto item_of = [&](int v) {
        if (v != cached_item) {
            item_ent = build_item_entity(tape, m, v);
            item_rep = build_repr(tape, m, m.item_intent, item_ent);
            cached_item = v;
            if (lambda > 0.0 && item_ent.a0_trainable)
                reg_acc = tape.add(reg_acc, tape.square_norm(item_ent.a0));
        }
    };

    size_t ss_at = 0;
    auto add_ss = [&](int item) {
        if (ss_at >= aux.ss.size()) return;
        const SsAux& a = aux.ss[ss_at++];
        if (a.mim_neg < 0) return;
        // item_ent currently holds this item (built by the caller).
        ad::Var x = build_item_content(tape, m, item, item_ent);
        BuiltEntity neg = build_item_entity(tape, m, a.mim_neg);
        auto ss = selfsup::ss_term(tape, m.selfsup, x, item_ent.a0, neg.a0,
                                   a.eps);
        ss_acc = tape.add(ss_acc, ss.total);
        out.ss_sum += tape.value(ss.total);
        ++out.ss_count;
    };

    const bool want_ss = !aux.ss.empty();

    if (batch.mode == BatchMode::Pointwise) {
        for (const auto& ex : batch.points) {
            user_of(ex.user);
            item_of(ex.item);
            ad::Var l;
            if (user_rep.single) {
                l = backbones::pointwise_loss(
                    tape, ex.label,
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     item_rep.pop));
            } else {
                ad::Var l_pop = backbones::pointwise_loss(
                    tape, ex.label,
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     item_rep.pop));
                ad::Var l_pref = backbones::pointwise_loss(
                    tape, ex.label,
                    backbones::score(tape, kind, m.ncf, user_rep.pref,
                                     item_rep.pref));
                const double w = exp_off ? 0.5 : ex.alpha;
                l = loss::novelty_weighted(tape, l_pref, l_pop, w);
            }
            rec_acc = tape.add(rec_acc, l);
            out.rec_sum += tape.value(l);
            ++out.rec_count;
            if (want_ss && ex.ss) add_ss(ex.item);
        }
    } else {
        for (const auto& ex : batch.pairs) {
            user_of(ex.user);
            item_of(ex.pos);
            BuiltEntity pos_ent = item_ent;
            BuiltRepr pos_rep = item_rep;
            if (want_ss && ex.ss) add_ss(ex.pos);

            BuiltEntity neg_ent = build_item_entity(tape, m, ex.neg);
            BuiltRepr neg_rep = build_repr(tape, m, m.item_intent, neg_ent);
            if (lambda > 0.0 && neg_ent.a0_trainable)
                reg_acc = tape.add(reg_acc, tape.square_norm(neg_ent.a0));

            ad::Var l;
            if (user_rep.single) {
                l = backbones::pairwise_loss(
                    tape,
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     pos_rep.pop),
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     neg_rep.pop),
                    margin);
            } else {
                ad::Var l_pop = backbones::pairwise_loss(
                    tape,
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     pos_rep.pop),
                    backbones::score(tape, kind, m.ncf, user_rep.pop,
                                     neg_rep.pop),
                    margin);
                ad::Var l_pref = backbones::pairwise_loss(
                    tape,
                    backbones::score(tape, kind, m.ncf, user_rep.pref,
                                     pos_rep.pref),
                    backbones::score(tape, kind, m.ncf, user_rep.pref,
                                     neg_rep.pref),
                    margin);
                const double w =
                    exp_off ? 0.5
                            : loss::pairwise_intent_weight(ex.alpha_pos,
                                                           ex.alpha_neg);
                l = loss::novelty_weighted(tape, l_pref, l_pop, w);
            }
            rec_acc = tape.add(rec_acc, l);
            out.rec_sum += tape.value(l);
            ++out.rec_count;
        }
    }

    ad::Var total =
        tape.scale(rec_acc, 1.0 / std::max(1, out.rec_count));
    if (lambda > 0.0)
        total = tape.add(
            total,
            tape.scale(reg_acc, lambda / std::max(1, out.rec_count)));
    if (out.ss_count > 0)
        total = tape.add(
            total, tape.scale(ss_acc, m.cfg.gamma / out.ss_count));
    out.total = total;
    return out;
}

void project_row_to_unit_ball(Tensor& t, int row) {
    float* v = t.row_ptr(row);
    double n2 = 0.0;
    for (int i = 0; i < t.cols; ++i)
        n2 += static_cast<double>(v[i]) * v[i];
    if (n2 <= 1.0) return;
    const double inv = 1.0 / std::sqrt(n2);
    for (int i = 0; i < t.cols; ++i)
        v[i] = static_cast<float>(static_cast<double>(v[i]) * inv);
}

}  // namespace

TrainHistory train(ModelState& model, const Split& split, const Dataset& data,
                   const std::function<void(int, const TrainHistory::Epoch&)>&
                       on_epoch) {
    const TrainConfig& cfg = model.cfg;
    Adam opt(model.tensors(), cfg.lr);
    Rng master(cfg.seed);

    const bool cml = cfg.backbone.kind == backbones::Kind::Cml;
    Tensor* const tables[] = {&model.user_emb, &model.item_emb,
                              &model.attr_emb};
    if (cml) {
        for (Tensor* t : tables)
            for (int r = 0; r < t->rows; ++r) project_row_to_unit_ball(*t, r);
    }

    ad::Tape tape;
    TrainHistory history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng batch_rng = master.fork(0x10000u + epoch);
        Rng aux_rng = master.fork(0x20000u + epoch);
        auto batches = make_batches(split, cfg.batch_mode(), cfg.batch_size,
                                    cfg.negatives, batch_rng);

        double rec_sum = 0.0, ss_sum = 0.0;
        long rec_n = 0, ss_n = 0;
        long step = 0;
        for (const TrainBatch& batch : batches) {
            BatchAux aux = prepare_aux(model, data, batch, aux_rng);
            tape.clear();
            BuiltLoss built = build_batch_loss(tape, model, batch, aux);
            if (!std::isfinite(tape.value(built.total)))
                throw DivergenceError(epoch, step);
            tape.backward(built.total);
            opt.step(tape.touched());
            if (cml) {
                for (auto [t, row] : tape.touched())
                    if (row >= 0 &&
                        (t == tables[0] || t == tables[1] || t == tables[2]))
                        project_row_to_unit_ball(*t, row);
            }
            rec_sum += built.rec_sum;
            rec_n += built.rec_count;
            ss_sum += built.ss_sum;
            ss_n += built.ss_count;
            ++step;
        }

        TrainHistory::Epoch e;
        e.l_rec = rec_n > 0 ? rec_sum / rec_n : 0.0;
        e.l_ss = ss_n > 0 ? ss_sum / ss_n : 0.0;
        e.loss = e.l_rec + (ss_n > 0 ? cfg.gamma * e.l_ss : 0.0);
        e.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
        history.epochs.push_back(e);
        if (on_epoch) on_epoch(epoch, e);
    }
    return history;
}

double gradient_check(ModelState& model, const Dataset& data,
                      const TrainBatch& batch, double eps) {
    Rng aux_rng(model.cfg.seed ^ 0x5eedULL);
    BatchAux aux = prepare_aux(model, data, batch, aux_rng);

    for (Tensor* t : model.tensors()) t->zero_grad();
    ad::Tape tape;
    BuiltLoss built = build_batch_loss(tape, model, batch, aux);
    tape.backward(built.total);

    std::vector<std::pair<Tensor*, std::vector<double>>> analytic;
    for (Tensor* t : model.tensors()) {
        analytic.emplace_back(t, t->grad);
        t->zero_grad();
    }

    auto loss_value = [&]() {
        tape.clear();
        BuiltLoss b = build_batch_loss(tape, model, batch, aux);
        const double v = tape.value(b.total);
        // Forward-only probes must not leave gradients behind.
        return v;
    };

    double max_rel = 0.0;
    for (auto& [t, grads] : analytic) {
        for (int i = 0; i < t->size(); ++i) {
            if (t == &model.item_emb && model.item_frozen[i / t->cols])
                continue;  // frozen rows are not trainable
            const float old = t->value[i];
            t->value[i] = static_cast<float>(static_cast<double>(old) + eps);
            const double hi = static_cast<double>(t->value[i]);
            const double lp = loss_value();
            t->value[i] = static_cast<float>(static_cast<double>(old) - eps);
            const double lo = static_cast<double>(t->value[i]);
            const double lm = loss_value();
            t->value[i] = old;
            const double fd = (lp - lm) / (hi - lo);
            const double a = grads[i];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
            max_rel = std::max(max_rel, std::abs(a - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace ids4nr
