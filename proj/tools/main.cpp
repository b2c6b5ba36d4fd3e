#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ids4nr/commands.hpp"

namespace {

struct FlagOverrides {
    std::vector<std::pair<std::string, std::string>> kv;

    void add_if(CLI::App& app, const char* flag, const char* key) {
        auto* opt = app.get_option_no_throw(flag);
        if (opt != nullptr && opt->count() > 0)
            kv.emplace_back(key, opt->as<std::string>());
    }
};

ids4nr::ExperimentConfig make_config(CLI::App& sub) {
    ids4nr::ExperimentConfig cfg;
    auto* copt = sub.get_option_no_throw("--config");
    if (copt != nullptr && copt->count() > 0)
        cfg = ids4nr::load_config(copt->as<std::string>());

    FlagOverrides fl;
    fl.add_if(sub, "--seed", "seed");
    fl.add_if(sub, "--backbone", "backbone");
    fl.add_if(sub, "--ablation", "ablation");
    fl.add_if(sub, "--gamma", "gamma");
    fl.add_if(sub, "--dim", "dim");
    fl.add_if(sub, "--out", "out");
    fl.add_if(sub, "--epochs", "epochs");
    fl.add_if(sub, "--lr", "lr");
    fl.add_if(sub, "--fusion", "fusion");
    fl.add_if(sub, "--threads", "threads");
    fl.add_if(sub, "--interactions", "interactions");
    fl.add_if(sub, "--user-attrs", "user_attrs");
    fl.add_if(sub, "--item-attrs", "item_attrs");
    fl.add_if(sub, "--name", "name");
    fl.add_if(sub, "--format", "format");
    fl.add_if(sub, "--sweep-param", "sweep_param");
    fl.add_if(sub, "--sweep-values", "sweep_values");
    for (const auto& [k, v] : fl.kv) ids4nr::apply_setting(cfg, k, v);

    auto* det = sub.get_option_no_throw("--deterministic");
    if (det != nullptr && det->count() > 0)
        ids4nr::apply_setting(cfg, "deterministic", "true");
    return cfg;
}

void add_common_flags(CLI::App& sub) {
    sub.add_option("--config", "experiment config file (key = value lines)");
    sub.add_option("--seed", "RNG seed");
    sub.add_option("--backbone",
                   "backbone layer: lfm, ncf or cml");
    sub.add_option("--ablation", "full, no_ss, no_ss_exp or no_ss_id");
    sub.add_option("--gamma", "self-supervision loss weight");
    sub.add_option("--dim", "latent dimension D");
    sub.add_option("--out", "output directory");
    sub.add_option("--epochs", "training epochs");
    sub.add_option("--lr", "learning rate");
    sub.add_option("--fusion", "intent fusion at inference: mean, pop, pref");
    sub.add_option("--threads", "evaluation threads");
    sub.add_option("--interactions", "interaction file path");
    sub.add_option("--user-attrs", "user attribute file path");
    sub.add_option("--item-attrs", "item attribute file path");
    sub.add_option("--name", "dataset name for reports");
    sub.add_option("--format", "interaction file format: tsv or csv");
    sub.add_flag("--deterministic",
                 "single-threaded evaluation with fixed reduction order");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trainable novelty-aware recommender"};
    app.require_subcommand(1);

    CLI::App* prepare = app.add_subcommand(
        "prepare", "build the dataset and write the split manifest");
    add_common_flags(*prepare);

    CLI::App* train =
        app.add_subcommand("train", "train a model on a prepared split");
    add_common_flags(*train);

    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "rank and score a trained checkpoint");
    add_common_flags(*evaluate);
    std::string ckpt;
    evaluate->add_option("--checkpoint", ckpt,
                         "checkpoint path (default <out>/model.ckpt)");

    CLI::App* sweep = app.add_subcommand(
        "sweep", "train+evaluate across one parameter's values");
    add_common_flags(*sweep);
    sweep->add_option("--sweep-param", "parameter to vary (e.g. gamma, dim)");
    sweep->add_option("--sweep-values", "comma-separated values");
    sweep->add_flag("--parallel", "run sweep points in parallel");

    CLI::App* report = app.add_subcommand(
        "report", "combine metrics files into one table");
    std::vector<std::string> report_paths;
    report->add_option("paths", report_paths,
                       "metrics files or run directories")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            ids4nr::cli::cmd_prepare(make_config(*prepare));
        } else if (train->parsed()) {
            ids4nr::cli::cmd_train(make_config(*train));
        } else if (evaluate->parsed()) {
            ids4nr::cli::cmd_evaluate(make_config(*evaluate), ckpt);
        } else if (sweep->parsed()) {
            auto cfg = make_config(*sweep);
            if (sweep->get_option("--parallel")->count() > 0)
                cfg.sweep_parallel = true;
            ids4nr::cli::cmd_sweep(cfg);
        } else if (report->parsed()) {
            ids4nr::cli::cmd_report(report_paths);
        }
    } catch (const ids4nr::Error& e) {
        std::cerr << "ERROR " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR Internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
