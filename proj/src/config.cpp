#include "ids4nr/config.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace ids4nr {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean value '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (...) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (...) {
        throw ConfigError("bad integer value for " + key + ": '" + v + "'");
    }
}

}  // namespace

std::string ExperimentConfig::resolve_path(const std::string& p) const {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    const char* root = std::getenv("IDS4NR_DATA_DIR");
    if (root == nullptr || *root == '\0') return p;
    return (std::filesystem::path(root) / path).string();
}

void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
    if (key == "name") {
        cfg.name = value;
    } else if (key == "interactions") {
        cfg.interactions_path = value;
    } else if (key == "user_attrs") {
        cfg.user_attrs_path = value;
    } else if (key == "item_attrs") {
        cfg.item_attrs_path = value;
    } else if (key == "format") {
        if (value == "csv")
            cfg.format = FileFormat::Csv;
        else if (value == "tsv")
            cfg.format = FileFormat::Tsv;
        else
            throw ConfigError("bad format '" + value + "'");
    } else if (key == "k_core") {
        cfg.k_core = parse_int(key, value);
    } else if (key == "cold_fraction") {
        cfg.cold_fraction = parse_real(key, value);
    } else if (key == "holdout") {
        cfg.holdout = parse_real(key, value);
    } else if (key == "backbone") {
        cfg.train.backbone.kind = backbones::kind_from_name(value);
    } else if (key == "margin") {
        cfg.train.backbone.cml_margin = parse_real(key, value);
    } else if (key == "tower") {
        cfg.train.backbone.ncf_tower_dims.clear();
        for (const auto& t : split_list(value))
            cfg.train.backbone.ncf_tower_dims.push_back(parse_int(key, t));
    } else if (key == "dim") {
        cfg.train.dim = parse_int(key, value);
    } else if (key == "batch_size") {
        cfg.train.batch_size = parse_int(key, value);
    } else if (key == "lr") {
        cfg.train.lr = parse_real(key, value);
    } else if (key == "epochs") {
        cfg.train.epochs = parse_int(key, value);
    } else if (key == "gamma") {
        cfg.train.gamma = parse_real(key, value);
    } else if (key == "lambda") {
        cfg.train.lambda = parse_real(key, value);
    } else if (key == "negatives") {
        cfg.train.negatives = parse_int(key, value);
    } else if (key == "seed") {
        cfg.train.seed = static_cast<uint64_t>(parse_int(key, value));
    } else if (key == "ablation") {
        cfg.train.ablation = ablation_from_name(value);
    } else if (key == "fusion") {
        cfg.train.fusion = fusion_from_name(value);
    } else if (key == "eval_ns") {
        cfg.eval_ns.clear();
        for (const auto& t : split_list(value))
            cfg.eval_ns.push_back(parse_int(key, t));
        if (cfg.eval_ns.empty()) throw ConfigError("eval_ns must be non-empty");
    } else if (key == "threads") {
        cfg.threads = parse_int(key, value);
    } else if (key == "deterministic") {
        cfg.deterministic = parse_bool(value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "sweep_param") {
        cfg.sweep_param = value;
    } else if (key == "sweep_values") {
        cfg.sweep_values.clear();
        for (const auto& t : split_list(value))
            cfg.sweep_values.push_back(parse_real(key, t));
    } else if (key == "sweep_parallel") {
        cfg.sweep_parallel = parse_bool(value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    ExperimentConfig cfg;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError(path, lineno, "expected key = value");
        apply_setting(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

}  // namespace ids4nr
