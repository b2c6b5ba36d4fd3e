#pragma once

#include <string>
#include <vector>

#include "ids4nr/dataset.hpp"
#include "ids4nr/model.hpp"

namespace ids4nr {

// Flat key=value experiment description; CLI flags override file values.
struct ExperimentConfig {
    // dataset
    std::string name = "dataset";
    std::string interactions_path;
    std::string user_attrs_path;
    std::string item_attrs_path;
    FileFormat format = FileFormat::Tsv;
    int k_core = 5;
    double cold_fraction = 0.2;
    double holdout = 0.1;

    TrainConfig train;

    // evaluation / execution
    std::vector<int> eval_ns = {5, 10};
    int threads = 1;
    bool deterministic = false;

    std::string out_dir = "out";

    // sweep (exactly one parameter)
    std::string sweep_param;
    std::vector<double> sweep_values;
    bool sweep_parallel = false;

    // Resolves relative dataset paths against IDS4NR_DATA_DIR when set.
    std::string resolve_path(const std::string& p) const;
};

ExperimentConfig load_config(const std::string& path);

// Applies one key=value pair (same keys as the config file).
void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value);

}  // namespace ids4nr
