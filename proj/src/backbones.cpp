#include "ids4nr/backbones.hpp"

#include <cmath>

#include "ids4nr/errors.hpp"
#include "ids4nr/vecmath.hpp"

namespace ids4nr::backbones {

std::string kind_name(Kind k) {
    switch (k) {
        case Kind::Lfm: return "lfm";
        case Kind::Ncf: return "ncf";
        case Kind::Cml: return "cml";
    }
    return "?";
}

Kind kind_from_name(const std::string& s) {
    if (s == "lfm") return Kind::Lfm;
    if (s == "ncf") return Kind::Ncf;
    if (s == "cml") return Kind::Cml;
    throw ConfigError("unknown backbone '" + s + "'");
}

void NcfParams::init(int dim, const std::vector<int>& dims, Rng& rng) {
    gmf_w = Tensor("backbone", "gmf_w", 1, dim);
    {
        Rng r = rng.fork(fnv1a("gmf_w"));
        gmf_w.fill_normal(r, 1.0 / std::sqrt(static_cast<double>(dim)));
    }
    tower_w.clear();
    tower_b.clear();
    for (size_t i = 1; i < dims.size(); ++i) {
        const std::string wname = "tower_w" + std::to_string(i);
        Tensor w("backbone", wname, dims[i], dims[i - 1]);
        Rng r = rng.fork(fnv1a(wname));
        w.fill_normal(r, 1.0 / std::sqrt(static_cast<double>(dims[i - 1])));
        tower_w.push_back(std::move(w));
        tower_b.emplace_back("backbone", "tower_b" + std::to_string(i), 1,
                             dims[i]);
    }
    const int fused = 1 + dims.back();
    fusion_w = Tensor("backbone", "fusion_w", 1, fused);
    Rng r = rng.fork(fnv1a("fusion_w"));
    fusion_w.fill_normal(r, 1.0 / std::sqrt(static_cast<double>(fused)));
}

std::vector<Tensor*> NcfParams::tensors() {
    if (!enabled()) return {};
    std::vector<Tensor*> out{&gmf_w};
    for (size_t i = 0; i < tower_w.size(); ++i) {
        out.push_back(&tower_w[i]);
        out.push_back(&tower_b[i]);
    }
    out.push_back(&fusion_w);
    return out;
}

double score_lfm(std::span<const double> p, std::span<const double> q) {
    return vm::dot(p, q);
}

double score_ncf(const NcfParams& m, std::span<const double> p,
                 std::span<const double> q) {
    std::vector<double> had(p.size());
    for (size_t i = 0; i < p.size(); ++i) had[i] = p[i] * q[i];
    const double gmf = vm::dot_tensor_row(m.gmf_w, 0, had);

    std::vector<double> h(p.size() + q.size());
    std::copy(p.begin(), p.end(), h.begin());
    std::copy(q.begin(), q.end(), h.begin() + p.size());
    for (size_t l = 0; l < m.tower_w.size(); ++l) {
        h = vm::affine(m.tower_w[l], m.tower_b[l], h);
        vm::relu_inplace(h);
    }
    double out = static_cast<double>(m.fusion_w.value[0]) * gmf;
    for (size_t i = 0; i < h.size(); ++i)
        out += static_cast<double>(m.fusion_w.value[i + 1]) * h[i];
    return out;
}

double score_cml(std::span<const double> p, std::span<const double> q) {
    double d2 = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        d2 += d * d;
    }
    return -d2;
}

double pointwise_loss(double y, double logit) {
    // -[y log s(x) + (1-y) log(1-s(x))] in softplus form.
    return y > 0.5 ? vm::softplus(-logit) : vm::softplus(logit);
}

double pairwise_loss(double s_pos, double s_neg, double margin) {
    const double h = margin - (s_pos - s_neg);
    return h > 0.0 ? h : 0.0;
}

double regularize(std::span<const Tensor* const> embedding_tables,
                  double lambda) {
    if (lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const Tensor* t : embedding_tables)
        for (float v : t->value) acc += static_cast<double>(v) * v;
    return lambda * acc;
}

ad::Var score(ad::Tape& tape, Kind kind, NcfParams& ncf, ad::Var p, ad::Var q) {
    switch (kind) {
        case Kind::Lfm:
            return tape.dot(p, q);
        case Kind::Cml:
            return tape.scale(tape.square_norm(tape.sub(p, q)), -1.0);
        case Kind::Ncf: {
            ad::Var gmf = tape.dot(tape.param(ncf.gmf_w), tape.mul(p, q));
            std::vector<ad::Var> pq{p, q};
            ad::Var h = tape.concat(pq);
            for (size_t l = 0; l < ncf.tower_w.size(); ++l)
                h = tape.relu(tape.affine(ncf.tower_w[l], h, ncf.tower_b[l]));
            std::vector<ad::Var> fused{gmf, h};
            return tape.dot(tape.param(ncf.fusion_w), tape.concat(fused));
        }
    }
    return ad::Var{};
}

ad::Var pointwise_loss(ad::Tape& tape, double y, ad::Var logit) {
    return y > 0.5 ? tape.softplus(tape.scale(logit, -1.0))
                   : tape.softplus(logit);
}

ad::Var pairwise_loss(ad::Tape& tape, ad::Var s_pos, ad::Var s_neg,
                      double margin) {
    return tape.relu(
        tape.add_const(tape.scale(tape.sub(s_pos, s_neg), -1.0), margin));
}

}  // namespace ids4nr::backbones
