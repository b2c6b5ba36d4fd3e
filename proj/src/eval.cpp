#include "ids4nr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "ids4nr/errors.hpp"

namespace ids4nr {

double MetricsReport::at(const std::string& metric, int n) const {
    for (size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] != n) continue;
        if (metric == "rec") return rec[i];
        if (metric == "cov") return cov[i];
        if (metric == "nov") return nov[i];
        if (metric == "f1") return f1[i];
    }
    throw ConfigError("no metric " + metric + "@" + std::to_string(n));
}

EvalContext build_eval_context(const ModelState& model, const Split& split) {
    EvalContext ctx;
    ctx.users.resize(model.num_users);
    ctx.items.resize(model.num_items);
    for (int u = 0; u < model.num_users; ++u) ctx.users[u] = user_repr(model, u);
    for (int v = 0; v < model.num_items; ++v)
        ctx.items[v] = item_repr(model, v, split.cold_mask);
    return ctx;
}

namespace {

RankingList rank_one(const ModelState& model, const EvalContext& ctx,
                     const Split& split, int u, int n,
                     std::vector<std::pair<double, int>>& scratch) {
    scratch.clear();
    const auto& train = split.user_train[u];
    size_t ti = 0;
    for (int v = 0; v < model.num_items; ++v) {
        if (ti < train.size() && train[ti] == v) {
            ++ti;
            continue;
        }
        scratch.emplace_back(pair_score(model, ctx.users[u], ctx.items[v]), v);
    }
    const int k = std::min<int>(n, static_cast<int>(scratch.size()));
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
    RankingList out;
    out.user = u;
    out.items.reserve(k);
    out.scores.reserve(k);
    for (int i = 0; i < k; ++i) {
        out.scores.push_back(scratch[i].first);
        out.items.push_back(scratch[i].second);
    }
    return out;
}

}  // namespace

RankingList rank_items(const ModelState& model, const Split& split, int u,
                       int n) {
    EvalContext ctx = build_eval_context(model, split);
    std::vector<std::pair<double, int>> scratch;
    return rank_one(model, ctx, split, u, n, scratch);
}

std::vector<RankingList> rank_all(const ModelState& model, const Split& split,
                                  int n, int nthreads) {
    const EvalContext ctx = build_eval_context(model, split);
    std::vector<int> users;
    for (int u = 0; u < model.num_users; ++u)
        if (!split.user_test[u].empty()) users.push_back(u);

    std::vector<RankingList> lists(users.size());
    auto work = [&](int tid, int stride) {
        std::vector<std::pair<double, int>> scratch;
        scratch.reserve(model.num_items);
        for (size_t i = tid; i < users.size(); i += stride)
            lists[i] = rank_one(model, ctx, split, users[i], n, scratch);
    };
    if (nthreads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(work, t, nthreads);
        for (auto& th : pool) th.join();
    }
    return lists;
}

std::vector<uint8_t> novel_item_mask(const Split& split) {
    std::vector<int> with_train;
    for (int v = 0; v < split.num_items; ++v)
        if (split.item_train_degree[v] > 0) with_train.push_back(v);
    std::sort(with_train.begin(), with_train.end(), [&](int a, int b) {
        if (split.item_train_degree[a] != split.item_train_degree[b])
            return split.item_train_degree[a] > split.item_train_degree[b];
        return a < b;
    });
    const int head = static_cast<int>(
        std::ceil(0.2 * static_cast<double>(with_train.size())));
    std::vector<uint8_t> novel(split.num_items, 1);
    for (int i = 0; i < head && i < (int)with_train.size(); ++i)
        novel[with_train[i]] = 0;
    return novel;
}

double recall_at_n(const std::vector<RankingList>& lists, int n,
                   const Split& split) {
    if (lists.empty()) return 0.0;
    double acc = 0.0;
    for (const RankingList& l : lists) {
        const auto& test = split.user_test[l.user];
        int hits = 0;
        const int k = std::min<int>(n, static_cast<int>(l.items.size()));
        for (int i = 0; i < k; ++i)
            if (std::binary_search(test.begin(), test.end(), l.items[i]))
                ++hits;
        acc += static_cast<double>(hits) / static_cast<double>(test.size());
    }
    return acc / static_cast<double>(lists.size());
}

double coverage_at_n(const std::vector<RankingList>& lists, int n,
                     int num_items) {
    std::vector<uint8_t> seen(num_items, 0);
    int distinct = 0;
    for (const RankingList& l : lists) {
        const int k = std::min<int>(n, static_cast<int>(l.items.size()));
        for (int i = 0; i < k; ++i)
            if (!seen[l.items[i]]) {
                seen[l.items[i]] = 1;
                ++distinct;
            }
    }
    return static_cast<double>(distinct) / static_cast<double>(num_items);
}

double novelty_at_n(const std::vector<RankingList>& lists, int n,
                    const std::vector<uint8_t>& novel_mask) {
    if (lists.empty()) return 0.0;
    long novel = 0;
    for (const RankingList& l : lists) {
        const int k = std::min<int>(n, static_cast<int>(l.items.size()));
        for (int i = 0; i < k; ++i)
            if (novel_mask[l.items[i]]) ++novel;
    }
    return static_cast<double>(novel) /
           (static_cast<double>(n) * static_cast<double>(lists.size()));
}

double f1_at_n(double rec, double nov, double cov) {
    const double denom = rec + nov + cov;
    if (denom == 0.0) return 0.0;
    return 3.0 * rec * nov * cov / denom;
}

MetricsReport evaluate(const ModelState& model, const Split& split,
                       std::vector<int> ns, int nthreads) {
    std::sort(ns.begin(), ns.end());
    MetricsReport report;
    report.ns = ns;
    const int max_n = ns.back();
    const auto lists = rank_all(model, split, max_n, nthreads);
    const auto novel = novel_item_mask(split);
    for (int n : ns) {
        const double r = recall_at_n(lists, n, split);
        const double c = coverage_at_n(lists, n, split.num_items);
        const double v = novelty_at_n(lists, n, novel);
        report.rec.push_back(r);
        report.cov.push_back(c);
        report.nov.push_back(v);
        report.f1.push_back(f1_at_n(r, v, c));
    }
    report.meta.backbone = backbones::kind_name(model.cfg.backbone.kind);
    report.meta.ablation = ablation_name(model.cfg.ablation);
    report.meta.fusion = fusion_name(model.cfg.fusion);
    report.meta.seed = model.cfg.seed;
    report.meta.gamma = model.cfg.gamma;
    report.meta.dim = model.cfg.dim;
    report.meta.epochs = model.cfg.epochs;
    return report;
}

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string metrics_to_text(const MetricsReport& r) {
    std::ostringstream out;
    out << "dataset " << (r.meta.dataset.empty() ? "-" : r.meta.dataset)
        << "\n";
    out << "backbone " << r.meta.backbone << "\n";
    out << "ablation " << r.meta.ablation << "\n";
    out << "fusion " << r.meta.fusion << "\n";
    out << "seed " << r.meta.seed << "\n";
    out << "gamma " << fmt6(r.meta.gamma) << "\n";
    out << "dim " << r.meta.dim << "\n";
    out << "epochs " << r.meta.epochs << "\n";
    for (size_t i = 0; i < r.ns.size(); ++i) {
        const int n = r.ns[i];
        out << "rec@" << n << " " << fmt6(r.rec[i]) << "\n";
        out << "cov@" << n << " " << fmt6(r.cov[i]) << "\n";
        out << "nov@" << n << " " << fmt6(r.nov[i]) << "\n";
        out << "f1@" << n << " " << fmt6(r.f1[i]) << "\n";
    }
    return out.str();
}

MetricsReport parse_metrics_text(const std::string& text) {
    MetricsReport r;
    std::istringstream in(text);
    std::string key, value;
    while (in >> key >> value) {
        auto at = key.find('@');
        if (at == std::string::npos) {
            if (key == "dataset")
                r.meta.dataset = value == "-" ? "" : value;
            else if (key == "backbone")
                r.meta.backbone = value;
            else if (key == "ablation")
                r.meta.ablation = value;
            else if (key == "fusion")
                r.meta.fusion = value;
            else if (key == "seed")
                r.meta.seed = std::stoull(value);
            else if (key == "gamma")
                r.meta.gamma = std::stod(value);
            else if (key == "dim")
                r.meta.dim = std::stoi(value);
            else if (key == "epochs")
                r.meta.epochs = std::stoi(value);
            else
                throw ParseError("metrics", 0, "unknown key " + key);
            continue;
        }
        const std::string metric = key.substr(0, at);
        const int n = std::stoi(key.substr(at + 1));
        size_t i = 0;
        for (; i < r.ns.size(); ++i)
            if (r.ns[i] == n) break;
        if (i == r.ns.size()) {
            r.ns.push_back(n);
            r.rec.push_back(0.0);
            r.cov.push_back(0.0);
            r.nov.push_back(0.0);
            r.f1.push_back(0.0);
        }
        const double x = std::stod(value);
        if (metric == "rec")
            r.rec[i] = x;
        else if (metric == "cov")
            r.cov[i] = x;
        else if (metric == "nov")
            r.nov[i] = x;
        else if (metric == "f1")
            r.f1[i] = x;
        else
            throw ParseError("metrics", 0, "unknown metric " + metric);
    }
    return r;
}

std::string metrics_row_header(const std::vector<int>& ns) {
    std::ostringstream out;
    const char* names[] = {"Rec", "Cov", "Nov", "F1"};
    bool first = true;
    for (const char* m : names)
        for (int n : ns) {
            if (!first) out << "\t";
            first = false;
            out << m << "@" << n;
        }
    return out.str();
}

std::string metrics_row(const MetricsReport& r) {
    std::ostringstream out;
    bool first = true;
    auto emit = [&](const std::vector<double>& vals) {
        for (double v : vals) {
            if (!first) out << "\t";
            first = false;
            out << fmt6(v);
        }
    };
    emit(r.rec);
    emit(r.cov);
    emit(r.nov);
    emit(r.f1);
    return out.str();
}

}  // namespace ids4nr
