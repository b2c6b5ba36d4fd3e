#include "ids4nr/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ids4nr/errors.hpp"

namespace ids4nr {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFileError(path);

    const TrainConfig& c = model.cfg;
    out << "IDS4NRCKPT 1\n";
    out << "meta backbone " << backbones::kind_name(c.backbone.kind) << "\n";
    out << "meta dim " << c.dim << "\n";
    out << "meta ablation " << ablation_name(c.ablation) << "\n";
    out << "meta fusion " << fusion_name(c.fusion) << "\n";
    out << "meta margin " << fmt_double(c.backbone.cml_margin) << "\n";
    out << "meta gamma " << fmt_double(c.gamma) << "\n";
    out << "meta lambda " << fmt_double(c.lambda) << "\n";
    out << "meta lr " << fmt_double(c.lr) << "\n";
    out << "meta epochs " << c.epochs << "\n";
    out << "meta batch_size " << c.batch_size << "\n";
    out << "meta negatives " << c.negatives << "\n";
    out << "meta seed " << c.seed << "\n";
    if (c.backbone.kind == backbones::Kind::Ncf) {
        out << "meta tower";
        for (int d : c.backbone.tower_dims(c.dim)) out << " " << d;
        out << "\n";
    }
    for (const Tensor* t : model.tensors())
        out << "tensor " << t->section << " " << t->name << " f32 " << t->rows
            << " " << t->cols << "\n";
    out << "data\n";
    for (const Tensor* t : model.tensors())
        out.write(reinterpret_cast<const char*>(t->value.data()),
                  static_cast<std::streamsize>(sizeof(float) * t->value.size()));
    if (!out) throw CorruptCheckpointError("failed writing " + path);
}

ModelState load_checkpoint(const std::string& path, const Dataset& data) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError(path);

    std::string line;
    if (!std::getline(in, line) || line != "IDS4NRCKPT 1")
        throw CorruptCheckpointError("bad checkpoint magic in " + path);

    TrainConfig cfg;
    struct TensorDecl {
        std::string section, name;
        int rows, cols;
    };
    std::vector<TensorDecl> decls;
    bool saw_data = false;
    while (std::getline(in, line)) {
        if (line == "data") {
            saw_data = true;
            break;
        }
        auto tok = tokens(line);
        if (tok.empty()) throw CorruptCheckpointError("empty manifest line");
        if (tok[0] == "meta" && tok.size() >= 3) {
            const std::string& k = tok[1];
            const std::string& v = tok[2];
            try {
                if (k == "backbone")
                    cfg.backbone.kind = backbones::kind_from_name(v);
                else if (k == "dim")
                    cfg.dim = std::stoi(v);
                else if (k == "ablation")
                    cfg.ablation = ablation_from_name(v);
                else if (k == "fusion")
                    cfg.fusion = fusion_from_name(v);
                else if (k == "margin")
                    cfg.backbone.cml_margin = std::stod(v);
                else if (k == "gamma")
                    cfg.gamma = std::stod(v);
                else if (k == "lambda")
                    cfg.lambda = std::stod(v);
                else if (k == "lr")
                    cfg.lr = std::stod(v);
                else if (k == "epochs")
                    cfg.epochs = std::stoi(v);
                else if (k == "batch_size")
                    cfg.batch_size = std::stoi(v);
                else if (k == "negatives")
                    cfg.negatives = std::stoi(v);
                else if (k == "seed")
                    cfg.seed = std::stoull(v);
                else if (k == "tower") {
                    cfg.backbone.ncf_tower_dims.clear();
                    for (size_t i = 2; i < tok.size(); ++i)
                        cfg.backbone.ncf_tower_dims.push_back(
                            std::stoi(tok[i]));
                }
            } catch (const Error&) {
                throw;
            } catch (...) {
                throw CorruptCheckpointError("bad meta value for " + k);
            }
        } else if (tok[0] == "tensor" && tok.size() == 6 && tok[3] == "f32") {
            try {
                decls.push_back(TensorDecl{tok[1], tok[2], std::stoi(tok[4]),
                                           std::stoi(tok[5])});
            } catch (...) {
                throw CorruptCheckpointError("bad tensor declaration");
            }
        } else {
            throw CorruptCheckpointError("unrecognized manifest line: " + line);
        }
    }
    if (!saw_data)
        throw CorruptCheckpointError("checkpoint manifest has no data section");

    ModelState model = allocate_model(data, cfg);
    auto tensors = model.tensors();
    if (tensors.size() != decls.size())
        throw CorruptCheckpointError(
            "checkpoint tensor count does not match dataset/config "
            "(expected " +
            std::to_string(tensors.size()) + ", manifest has " +
            std::to_string(decls.size()) + ")");
    for (size_t i = 0; i < tensors.size(); ++i) {
        const Tensor* t = tensors[i];
        const TensorDecl& d = decls[i];
        if (t->section != d.section || t->name != d.name ||
            t->rows != d.rows || t->cols != d.cols)
            throw CorruptCheckpointError("tensor mismatch at '" + d.name +
                                         "'");
    }
    for (Tensor* t : tensors) {
        in.read(reinterpret_cast<char*>(t->value.data()),
                static_cast<std::streamsize>(sizeof(float) * t->value.size()));
        if (in.gcount() !=
            static_cast<std::streamsize>(sizeof(float) * t->value.size()))
            throw CorruptCheckpointError("truncated payload at '" + t->name +
                                         "'");
    }
    char extra;
    if (in.read(&extra, 1))
        throw CorruptCheckpointError("trailing bytes after payload");
    return model;
}

}  // namespace ids4nr
