#include "ids4nr/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ids4nr/checkpoint.hpp"

namespace ids4nr::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw MissingFileError(path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Split prepared_split(const ExperimentConfig& cfg, const LoadedData& loaded) {
    const fs::path manifest = fs::path(cfg.out_dir) / "split.txt";
    if (!fs::exists(manifest))
        throw MissingFileError(manifest.string() +
                               " (run `prepare` first)");
    return load_split_manifest(loaded.data, manifest.string());
}

std::string config_echo(const ExperimentConfig& cfg, const TrainConfig& t) {
    std::ostringstream out;
    out << "name " << cfg.name << "\n";
    out << "backbone " << backbones::kind_name(t.backbone.kind) << "\n";
    out << "ablation " << ablation_name(t.ablation) << "\n";
    out << "fusion " << fusion_name(t.fusion) << "\n";
    out << "dim " << t.dim << "\n";
    out << "batch_size " << t.batch_size << "\n";
    out << "lr " << fmt(t.lr) << "\n";
    out << "epochs " << t.epochs << "\n";
    out << "gamma " << fmt(t.gamma) << "\n";
    out << "lambda " << fmt(t.lambda, "%.8f") << "\n";
    out << "negatives " << t.negatives << "\n";
    out << "seed " << t.seed << "\n";
    out << "margin " << fmt(t.backbone.cml_margin) << "\n";
    return out.str();
}

}  // namespace

LoadedData load_dataset(const ExperimentConfig& cfg) {
    if (cfg.interactions_path.empty())
        throw ConfigError("config is missing `interactions`");
    LoadedData loaded;
    loaded.log = load_interactions(cfg.resolve_path(cfg.interactions_path),
                                   cfg.format);
    loaded.data = build_dataset(
        loaded.log,
        cfg.user_attrs_path.empty() ? ""
                                    : cfg.resolve_path(cfg.user_attrs_path),
        cfg.item_attrs_path.empty() ? ""
                                    : cfg.resolve_path(cfg.item_attrs_path),
        cfg.format, cfg.k_core);
    return loaded;
}

void cmd_prepare(const ExperimentConfig& cfg, bool quiet) {
    LoadedData loaded = load_dataset(cfg);
    const Dataset& data = loaded.data;
    const auto cold = select_cold_items(data, loaded.log, cfg.cold_fraction);
    Split split =
        split_train_test(data, cold, cfg.holdout, cfg.train.seed);

    fs::create_directories(cfg.out_dir);
    save_split_manifest(split, data, (fs::path(cfg.out_dir) / "split.txt").string());

    const double total_cells =
        static_cast<double>(data.num_users) * data.num_items;
    const double sparsity =
        100.0 * (1.0 - static_cast<double>(data.interactions.size()) /
                           total_cells);
    std::ostringstream s;
    s << "name " << cfg.name << "\n";
    s << "users " << data.num_users << "\n";
    s << "items " << data.num_items << "\n";
    s << "interactions " << data.interactions.size() << "\n";
    s << "sparsity " << fmt(sparsity, "%.2f") << "%\n";
    s << "user_fields " << data.num_user_fields << "\n";
    s << "item_fields " << data.num_item_fields << "\n";
    s << "attr_values " << data.num_attr_values << "\n";
    s << "cold_items " << split.cold_items.size() << "\n";
    s << "train " << split.train.size() << "\n";
    s << "test " << split.test.size() << "\n";
    s << "seed " << split.rng_seed << "\n";
    write_file(fs::path(cfg.out_dir) / "summary.txt", s.str());
    if (!quiet) std::cout << s.str();
}

void cmd_train(const ExperimentConfig& cfg, bool quiet) {
    LoadedData loaded = load_dataset(cfg);
    Split split = prepared_split(cfg, loaded);

    TrainConfig tc = cfg.train;
    tc.resolve();
    ModelState model = init_model(loaded.data, tc, split.cold_items);

    const auto t0 = std::chrono::steady_clock::now();
    TrainHistory history =
        train(model, split, loaded.data,
              [&](int epoch, const TrainHistory::Epoch& e) {
                  if (!quiet)
                      std::cout << "epoch " << epoch + 1 << "/" << tc.epochs
                                << " loss " << fmt(e.loss) << " rec "
                                << fmt(e.l_rec) << " ss " << fmt(e.l_ss)
                                << " (" << fmt(e.seconds, "%.1f") << "s)\n";
              });
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    fs::create_directories(cfg.out_dir);
    save_checkpoint(model, (fs::path(cfg.out_dir) / "model.ckpt").string());

    std::ostringstream h;
    h << "epoch\tloss\tl_rec\tl_ss\tseconds\n";
    for (size_t i = 0; i < history.epochs.size(); ++i) {
        const auto& e = history.epochs[i];
        h << (i + 1) << "\t" << fmt(e.loss) << "\t" << fmt(e.l_rec) << "\t"
          << fmt(e.l_ss) << "\t" << fmt(e.seconds, "%.3f") << "\n";
    }
    write_file(fs::path(cfg.out_dir) / "history.tsv", h.str());

    std::ostringstream r;
    r << config_echo(cfg, tc);
    r << "parameters " << count_parameters(model) << "\n";
    r << "train_seconds " << fmt(wall, "%.3f") << "\n";
    write_file(fs::path(cfg.out_dir) / "run.txt", r.str());
}

MetricsReport cmd_evaluate(const ExperimentConfig& cfg,
                           const std::string& checkpoint, bool quiet) {
    LoadedData loaded = load_dataset(cfg);
    Split split = prepared_split(cfg, loaded);

    const std::string ckpt_path =
        checkpoint.empty() ? (fs::path(cfg.out_dir) / "model.ckpt").string()
                           : checkpoint;
    ModelState model = load_checkpoint(ckpt_path, loaded.data);

    const int threads = cfg.deterministic ? 1 : std::max(1, cfg.threads);
    MetricsReport report = evaluate(model, split, cfg.eval_ns, threads);
    report.meta.dataset = cfg.name;

    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "metrics.txt", metrics_to_text(report));
    write_file(fs::path(cfg.out_dir) / "metrics_row.tsv",
               metrics_row_header(report.ns) + "\n" + metrics_row(report) +
                   "\n");

    // Item popularity histogram (training degree, descending).
    std::vector<int> order(split.num_items);
    for (int v = 0; v < split.num_items; ++v) order[v] = v;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (split.item_train_degree[a] != split.item_train_degree[b])
            return split.item_train_degree[a] > split.item_train_degree[b];
        return a < b;
    });
    std::ostringstream hist;
    hist << "rank\titem\ttrain_degree\n";
    for (int r = 0; r < split.num_items; ++r)
        hist << (r + 1) << "\t" << loaded.data.item_ids[order[r]] << "\t"
             << split.item_train_degree[order[r]] << "\n";
    write_file(fs::path(cfg.out_dir) / "popularity_hist.tsv", hist.str());

    if (!quiet) {
        std::cout << metrics_row_header(report.ns) << "\n"
                  << metrics_row(report) << "\n";
    }
    return report;
}

void cmd_sweep(const ExperimentConfig& cfg, bool quiet) {
    if (cfg.sweep_param.empty() || cfg.sweep_values.empty())
        throw ConfigError("sweep requires sweep_param and sweep_values");

    // One shared split for every run.
    cmd_prepare(cfg, true);

    std::vector<double> values = cfg.sweep_values;
    std::sort(values.begin(), values.end());

    struct Row {
        double value;
        bool ok = false;
        std::string error;
        MetricsReport report;
    };
    std::vector<Row> rows(values.size());

    auto run_one = [&](size_t i) {
        rows[i].value = values[i];
        ExperimentConfig sub = cfg;
        std::ostringstream tag;
        tag << cfg.sweep_param << "_" << fmt(values[i], "%g");
        sub.out_dir =
            (fs::path(cfg.out_dir) / ("sweep_" + tag.str())).string();
        try {
            apply_setting(sub, cfg.sweep_param, fmt(values[i], "%.10g"));
            fs::create_directories(sub.out_dir);
            // Reuse the shared manifest.
            fs::copy_file(fs::path(cfg.out_dir) / "split.txt",
                          fs::path(sub.out_dir) / "split.txt",
                          fs::copy_options::overwrite_existing);
            cmd_train(sub, true);
            rows[i].report = cmd_evaluate(sub, "", true);
            rows[i].ok = true;
        } catch (const Error& e) {
            rows[i].error = e.category() + ": " + e.what();
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    };

    if (cfg.sweep_parallel) {
        std::vector<std::thread> pool;
        for (size_t i = 0; i < values.size(); ++i)
            pool.emplace_back(run_one, i);
        for (auto& t : pool) t.join();
    } else {
        for (size_t i = 0; i < values.size(); ++i) run_one(i);
    }

    std::ostringstream table;
    table << cfg.sweep_param << "\t" << metrics_row_header(cfg.eval_ns)
          << "\n";
    for (const Row& row : rows) {
        table << fmt(row.value, "%g") << "\t";
        if (row.ok)
            table << metrics_row(row.report) << "\n";
        else
            table << "failed: " << row.error << "\n";
    }
    write_file(fs::path(cfg.out_dir) / "sweep_table.tsv", table.str());
    if (!quiet) std::cout << table.str();
}

std::string cmd_report(const std::vector<std::string>& paths) {
    std::ostringstream out;
    bool header_done = false;
    for (const std::string& p : paths) {
        fs::path path(p);
        if (fs::is_directory(path)) path /= "metrics.txt";
        MetricsReport r = parse_metrics_text(read_file(path));
        if (!header_done) {
            out << "run\t" << metrics_row_header(r.ns) << "\n";
            header_done = true;
        }
        out << path.parent_path().filename().string() << "\t"
            << metrics_row(r) << "\n";
    }
    std::cout << out.str();
    return out.str();
}

}  // namespace ids4nr::cli
