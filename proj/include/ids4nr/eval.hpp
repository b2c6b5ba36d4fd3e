#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ids4nr/dataset.hpp"
#include "ids4nr/model.hpp"

namespace ids4nr {

struct RankingList {
    int user = 0;
    std::vector<int> items;     // top-N, best first
    std::vector<double> scores; // non-increasing
};

struct ReportMeta {
    std::string dataset;
    std::string backbone;
    std::string ablation;
    std::string fusion;
    uint64_t seed = 0;
    double gamma = 0.0;
    int dim = 0;
    int epochs = 0;
};

struct MetricsReport {
    std::vector<int> ns;
    std::vector<double> rec, cov, nov, f1;  // parallel to ns
    ReportMeta meta;

    double at(const std::string& metric, int n) const;
};

// Precomputed per-entity representations; items use content imputation for
// cold rows when the model's self-supervision module is active.
struct EvalContext {
    std::vector<EntityRepr> users;
    std::vector<EntityRepr> items;
};

EvalContext build_eval_context(const ModelState& model, const Split& split);

// Top-N over all items with (u, v) not in train; ties go to the smaller
// item index.
RankingList rank_items(const ModelState& model, const Split& split, int u,
                       int n);

// Lists for every user with at least one test interaction, in user order.
std::vector<RankingList> rank_all(const ModelState& model, const Split& split,
                                  int n, int nthreads = 1);

// Head items are the top ceil(20%) of items with training interactions by
// train degree (ties to the lower index); everything else, cold items
// included, is novel.
std::vector<uint8_t> novel_item_mask(const Split& split);

double recall_at_n(const std::vector<RankingList>& lists, int n,
                   const Split& split);
double coverage_at_n(const std::vector<RankingList>& lists, int n,
                     int num_items);
double novelty_at_n(const std::vector<RankingList>& lists, int n,
                    const std::vector<uint8_t>& novel_mask);
// 3 r n c / (r + n + c), 0 when the denominator is 0.
double f1_at_n(double rec, double nov, double cov);

MetricsReport evaluate(const ModelState& model, const Split& split,
                       std::vector<int> ns = {5, 10}, int nthreads = 1);

// Key-value report document; excludes wall-clock so identical runs emit
// identical bytes. parse_metrics round-trips it.
std::string metrics_to_text(const MetricsReport& report);
MetricsReport parse_metrics_text(const std::string& text);

// Table row mirroring the standard column order:
// Rec@5 Rec@10 Cov@5 Cov@10 Nov@5 Nov@10 F1@5 F1@10 (for ns = {5, 10}).
std::string metrics_row_header(const std::vector<int>& ns);
std::string metrics_row(const MetricsReport& report);

}  // namespace ids4nr
