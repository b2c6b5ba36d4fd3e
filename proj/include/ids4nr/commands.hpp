#pragma once

#include <string>
#include <vector>

#include "ids4nr/config.hpp"
#include "ids4nr/eval.hpp"
#include "ids4nr/trainer.hpp"

namespace ids4nr::cli {

struct LoadedData {
    InteractionLog log;
    Dataset data;
};

LoadedData load_dataset(const ExperimentConfig& cfg);

// prepare: writes <out>/summary.txt and the split manifest <out>/split.txt.
void cmd_prepare(const ExperimentConfig& cfg, bool quiet = false);

// train: requires the prepared split; writes <out>/model.ckpt,
// <out>/history.tsv and <out>/run.txt.
void cmd_train(const ExperimentConfig& cfg, bool quiet = false);

// evaluate: writes <out>/metrics.txt, <out>/metrics_row.tsv and
// <out>/popularity_hist.tsv. Empty checkpoint path means <out>/model.ckpt.
MetricsReport cmd_evaluate(const ExperimentConfig& cfg,
                           const std::string& checkpoint = "",
                           bool quiet = false);

// sweep: one train+evaluate per value over a shared split; failures of a
// single run are recorded and do not stop the sweep. Writes
// <out>/sweep_table.tsv plus one subdirectory per value.
void cmd_sweep(const ExperimentConfig& cfg, bool quiet = false);

// report: combined table from metrics files (or directories that contain
// metrics.txt), printed to stdout and returned.
std::string cmd_report(const std::vector<std::string>& paths);

}  // namespace ids4nr::cli
