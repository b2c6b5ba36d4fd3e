#include "ids4nr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ids4nr {

namespace {

// Splits a line on `sep`, trimming a trailing '\r'.
std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    out.push_back(cur);
    return out;
}

bool is_blank(const std::string& s) {
    for (char c : s)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_i64(const std::string& s, int64_t& out) {
    try {
        size_t pos = 0;
        out = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

InteractionLog load_interactions(const std::string& path, FileFormat format) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    const char sep = separator(format);

    InteractionLog log;
    std::unordered_map<std::string, size_t> seen;  // "user\x1fitem" -> index
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        auto fields = split_fields(line, sep);
        if (fields.size() != 4)
            throw ParseError(path, lineno,
                             "expected 4 fields, got " +
                                 std::to_string(fields.size()));
        InteractionRecord rec;
        rec.user = fields[0];
        rec.item = fields[1];
        if (rec.user.empty() || rec.item.empty())
            throw ParseError(path, lineno, "empty user or item id");
        if (!parse_double(fields[2], rec.rating))
            throw ParseError(path, lineno, "bad rating '" + fields[2] + "'");
        if (!parse_i64(fields[3], rec.timestamp) || rec.timestamp < 0)
            throw ParseError(path, lineno,
                             "bad timestamp '" + fields[3] + "'");

        std::string key = rec.user;
        key.push_back('\x1f');
        key += rec.item;
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(std::move(key), log.records.size());
            log.records.push_back(std::move(rec));
        } else if (rec.timestamp >= log.records[it->second].timestamp) {
            log.records[it->second] = std::move(rec);
        }
    }
    return log;
}

bool Dataset::has_interaction(int u, int v) const {
    const auto& items = user_items[u];
    return std::binary_search(items.begin(), items.end(), v);
}

namespace {

// Attribute vocabulary shared between sides; rows are created on demand.
struct AttrVocab {
    std::unordered_map<std::string, int> value_rows;
    std::vector<std::string> value_names;

    int row_for(const std::string& side_field_value) {
        auto it = value_rows.find(side_field_value);
        if (it != value_rows.end()) return it->second;
        const int row = static_cast<int>(value_names.size());
        value_rows.emplace(side_field_value, row);
        value_names.push_back(side_field_value);
        return row;
    }
};

void load_attributes(const std::string& path, FileFormat format,
                     const std::unordered_map<std::string, int>& entity_index,
                     const std::string& side_prefix, AttrVocab& vocab,
                     std::vector<std::string>& field_names,
                     std::vector<std::vector<AttrRef>>& out) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    const char sep = separator(format);

    std::unordered_map<std::string, int> field_index;
    std::set<std::pair<int, std::pair<int, int>>> dedup;  // (entity,(field,row))
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        auto fields = split_fields(line, sep);
        if (fields.size() != 3)
            throw ParseError(path, lineno,
                             "expected 3 fields, got " +
                                 std::to_string(fields.size()));
        auto ent = entity_index.find(fields[0]);
        if (ent == entity_index.end()) continue;  // filtered out or unknown

        int fid;
        auto fit = field_index.find(fields[1]);
        if (fit == field_index.end()) {
            fid = static_cast<int>(field_names.size());
            field_index.emplace(fields[1], fid);
            field_names.push_back(fields[1]);
        } else {
            fid = fit->second;
        }
        const int row =
            vocab.row_for(side_prefix + fields[1] + "=" + fields[2]);
        if (dedup.insert({ent->second, {fid, row}}).second)
            out[ent->second].push_back(AttrRef{fid, row});
    }
    // Deterministic order inside each entity: by (field, value row).
    for (auto& refs : out)
        std::sort(refs.begin(), refs.end(), [](const AttrRef& a, const AttrRef& b) {
            return a.field != b.field ? a.field < b.field
                                      : a.value_row < b.value_row;
        });
}

}  // namespace

Dataset build_dataset(const InteractionLog& log,
                      const std::string& user_attr_path,
                      const std::string& item_attr_path, FileFormat format,
                      int k_core) {
    // Provisional indices in first-appearance order.
    std::unordered_map<std::string, int> umap, imap;
    std::vector<std::string> unames, inames;
    std::vector<std::pair<int, int>> edges;
    edges.reserve(log.records.size());
    for (const auto& rec : log.records) {
        auto [uit, unew] = umap.try_emplace(rec.user, (int)unames.size());
        if (unew) unames.push_back(rec.user);
        auto [iit, inew] = imap.try_emplace(rec.item, (int)inames.size());
        if (inew) inames.push_back(rec.item);
        edges.emplace_back(uit->second, iit->second);
    }

    // Iterative k-core peeling.
    std::vector<int> udeg(unames.size(), 0), ideg(inames.size(), 0);
    for (auto [u, v] : edges) {
        ++udeg[u];
        ++ideg[v];
    }
    std::vector<uint8_t> ukeep(unames.size(), 1), ikeep(inames.size(), 1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t u = 0; u < ukeep.size(); ++u)
            if (ukeep[u] && udeg[u] < k_core) {
                ukeep[u] = 0;
                changed = true;
            }
        for (size_t v = 0; v < ikeep.size(); ++v)
            if (ikeep[v] && ideg[v] < k_core) {
                ikeep[v] = 0;
                changed = true;
            }
        if (!changed) break;
        std::fill(udeg.begin(), udeg.end(), 0);
        std::fill(ideg.begin(), ideg.end(), 0);
        for (auto [u, v] : edges)
            if (ukeep[u] && ikeep[v]) {
                ++udeg[u];
                ++ideg[v];
            }
    }

    Dataset data;
    std::vector<int> unew(unames.size(), -1), inew(inames.size(), -1);
    for (size_t u = 0; u < unames.size(); ++u)
        if (ukeep[u]) {
            unew[u] = data.num_users++;
            data.user_ids.push_back(unames[u]);
            data.user_index.emplace(unames[u], unew[u]);
        }
    for (size_t v = 0; v < inames.size(); ++v)
        if (ikeep[v]) {
            inew[v] = data.num_items++;
            data.item_ids.push_back(inames[v]);
            data.item_index.emplace(inames[v], inew[v]);
        }
    if (data.num_users == 0 || data.num_items == 0)
        throw EmptyAfterFilteringError(k_core);

    for (auto [u, v] : edges)
        if (ukeep[u] && ikeep[v])
            data.interactions.emplace_back(unew[u], inew[v]);
    std::sort(data.interactions.begin(), data.interactions.end());

    data.user_items.resize(data.num_users);
    data.item_users.resize(data.num_items);
    for (auto [u, v] : data.interactions) {
        data.user_items[u].push_back(v);
        data.item_users[v].push_back(u);
    }
    for (auto& vec : data.item_users) std::sort(vec.begin(), vec.end());

    data.user_attrs.resize(data.num_users);
    data.item_attrs.resize(data.num_items);
    AttrVocab vocab;
    if (!user_attr_path.empty())
        load_attributes(user_attr_path, format, data.user_index, "u:", vocab,
                        data.user_field_names, data.user_attrs);
    if (!item_attr_path.empty())
        load_attributes(item_attr_path, format, data.item_index, "i:", vocab,
                        data.item_field_names, data.item_attrs);
    data.num_user_fields = static_cast<int>(data.user_field_names.size());
    data.num_item_fields = static_cast<int>(data.item_field_names.size());
    data.num_attr_values = static_cast<int>(vocab.value_names.size());
    data.attr_value_names = std::move(vocab.value_names);
    return data;
}

std::vector<int> select_cold_items(const Dataset& data,
                                   const InteractionLog& log,
                                   double fraction) {
    std::vector<int64_t> ts_sum(data.num_items, 0);
    std::vector<int64_t> ts_cnt(data.num_items, 0);
    for (const auto& rec : log.records) {
        auto uit = data.user_index.find(rec.user);
        auto iit = data.item_index.find(rec.item);
        if (uit == data.user_index.end() || iit == data.item_index.end())
            continue;
        ts_sum[iit->second] += rec.timestamp;
        ts_cnt[iit->second] += 1;
    }

    std::vector<int> order(data.num_items);
    for (int v = 0; v < data.num_items; ++v) order[v] = v;
    // Mean-timestamp comparison done exactly via cross multiplication.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto lhs = ts_sum[a] * ts_cnt[b];
        const auto rhs = ts_sum[b] * ts_cnt[a];
        if (lhs != rhs) return lhs > rhs;
        return a > b;
    });

    const int want = static_cast<int>(
        std::ceil(fraction * static_cast<double>(data.num_items)));
    std::vector<int> cold(order.begin(), order.begin() + want);
    std::sort(cold.begin(), cold.end());
    return cold;
}

bool Split::in_train(int u, int v) const {
    const auto& items = user_train[u];
    return std::binary_search(items.begin(), items.end(), v);
}

Split split_train_test(const Dataset& data, const std::vector<int>& cold_items,
                       double holdout, uint64_t seed) {
    Split split;
    split.num_users = data.num_users;
    split.num_items = data.num_items;
    split.rng_seed = seed;
    split.cold_items = cold_items;
    std::sort(split.cold_items.begin(), split.cold_items.end());
    split.cold_mask.assign(data.num_items, 0);
    for (int v : split.cold_items) split.cold_mask[v] = 1;

    Rng rng(seed);
    split.user_train.resize(data.num_users);
    split.user_test.resize(data.num_users);
    for (int u = 0; u < data.num_users; ++u) {
        std::vector<int> warm;
        for (int v : data.user_items[u]) {
            if (split.cold_mask[v])
                split.user_test[u].push_back(v);
            else
                warm.push_back(v);
        }
        const int n = static_cast<int>(warm.size());
        int k = static_cast<int>(std::floor(holdout * n));
        if (k == 0 && n >= 2 && holdout > 0.0) k = 1;
        // Partial Fisher-Yates: the first k entries become the holdout.
        for (int i = 0; i < k; ++i) {
            const int j = i + rng.uniform_index(n - i);
            std::swap(warm[i], warm[j]);
        }
        for (int i = 0; i < n; ++i) {
            if (i < k)
                split.user_test[u].push_back(warm[i]);
            else
                split.user_train[u].push_back(warm[i]);
        }
        std::sort(split.user_train[u].begin(), split.user_train[u].end());
        std::sort(split.user_test[u].begin(), split.user_test[u].end());
    }

    split.item_train_degree.assign(data.num_items, 0);
    for (int u = 0; u < data.num_users; ++u) {
        for (int v : split.user_train[u]) {
            split.train.emplace_back(u, v);
            ++split.item_train_degree[v];
        }
        for (int v : split.user_test[u]) split.test.emplace_back(u, v);
    }
    split.novelty_alpha = compute_novelty_scores(split, data.num_users);
    return split;
}

std::vector<double> compute_novelty_scores(const Split& split, int num_users) {
    std::vector<double> alpha(split.num_items, 1.0);
    double lo = 0.0, hi = 0.0;
    bool first = true;
    std::vector<double> raw(split.num_items, 0.0);
    for (int v = 0; v < split.num_items; ++v) {
        const int deg = split.item_train_degree[v];
        if (deg <= 0) continue;  // cold or fully held out: alpha stays 1
        raw[v] = std::log(static_cast<double>(num_users) /
                          static_cast<double>(deg));
        if (first) {
            lo = hi = raw[v];
            first = false;
        } else {
            lo = std::min(lo, raw[v]);
            hi = std::max(hi, raw[v]);
        }
    }
    for (int v = 0; v < split.num_items; ++v) {
        if (split.item_train_degree[v] <= 0) continue;
        alpha[v] = hi > lo ? (raw[v] - lo) / (hi - lo) : 0.5;
    }
    return alpha;
}

std::vector<int> sample_negatives(const Split& split, int user, int count,
                                  Rng& rng) {
    const auto& train = split.user_train[user];
    const int candidates = split.num_items - static_cast<int>(train.size());
    if (candidates < count)
        throw InsufficientCandidatesError(user, count, candidates);

    std::vector<int> out;
    out.reserve(count);
    if (candidates <= 4 * count) {
        // Tight pool: materialize the complement and draw without replacement.
        std::vector<int> pool;
        pool.reserve(candidates);
        for (int v = 0; v < split.num_items; ++v)
            if (!std::binary_search(train.begin(), train.end(), v))
                pool.push_back(v);
        for (int i = 0; i < count; ++i) {
            const int j = i + rng.uniform_index((int)pool.size() - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }
    while (static_cast<int>(out.size()) < count) {
        const int v = rng.uniform_index(split.num_items);
        if (std::binary_search(train.begin(), train.end(), v)) continue;
        if (std::find(out.begin(), out.end(), v) != out.end()) continue;
        out.push_back(v);
    }
    return out;
}

std::vector<TrainBatch> make_batches(const Split& split, BatchMode mode,
                                     int batch_size, int negatives, Rng& rng) {
    std::vector<std::pair<int, int>> positives = split.train;
    for (size_t i = 0; i + 1 < positives.size(); ++i) {
        const size_t j =
            i + rng.uniform_index(static_cast<int>(positives.size() - i));
        std::swap(positives[i], positives[j]);
    }

    std::vector<TrainBatch> batches;
    TrainBatch cur;
    cur.mode = mode;
    auto flush_if_full = [&] {
        if (cur.size() == static_cast<size_t>(batch_size)) {
            batches.push_back(std::move(cur));
            cur = TrainBatch{};
            cur.mode = mode;
        }
    };

    for (auto [u, v] : positives) {
        const auto negs = sample_negatives(split, u, negatives, rng);
        const float alpha_pos = static_cast<float>(split.novelty_alpha[v]);
        if (mode == BatchMode::Pointwise) {
            cur.points.push_back({u, v, 1.0f, alpha_pos, 1});
            flush_if_full();
            for (int n : negs) {
                cur.points.push_back(
                    {u, n, 0.0f, static_cast<float>(split.novelty_alpha[n]),
                     0});
                flush_if_full();
            }
        } else {
            for (size_t j = 0; j < negs.size(); ++j) {
                cur.pairs.push_back(
                    {u, v, negs[j], alpha_pos,
                     static_cast<float>(split.novelty_alpha[negs[j]]),
                     static_cast<uint8_t>(j == 0 ? 1 : 0)});
                flush_if_full();
            }
        }
    }
    if (cur.size() > 0) batches.push_back(std::move(cur));
    return batches;
}

void save_split_manifest(const Split& split, const Dataset& data,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MissingFileError(path);
    out << "# ids4nr split manifest v1\n";
    out << "seed\t" << split.rng_seed << "\n";
    out << "users\t" << split.num_users << "\n";
    out << "items\t" << split.num_items << "\n";
    out << "cold\t" << split.cold_items.size() << "\n";
    for (int v : split.cold_items) out << data.item_ids[v] << "\n";
    out << "test\t" << split.test.size() << "\n";
    for (auto [u, v] : split.test)
        out << data.user_ids[u] << "\t" << data.item_ids[v] << "\n";
}

Split load_split_manifest(const Dataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFileError(path);
    std::string line;
    long lineno = 0;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line))
            throw ParseError(path, lineno, "unexpected end of manifest");
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    if (next_line() != "# ids4nr split manifest v1")
        throw ParseError(path, lineno, "bad manifest header");
    auto expect_kv = [&](const std::string& key) -> std::string {
        auto fields = split_fields(next_line(), '\t');
        if (fields.size() != 2 || fields[0] != key)
            throw ParseError(path, lineno, "expected '" + key + "' line");
        return fields[1];
    };

    auto expect_num = [&](const std::string& key) -> int64_t {
        int64_t v = 0;
        if (!parse_i64(expect_kv(key), v) || v < 0)
            throw ParseError(path, lineno, "bad numeric value for " + key);
        return v;
    };

    const uint64_t seed = static_cast<uint64_t>(expect_num("seed"));
    const int users = static_cast<int>(expect_num("users"));
    const int items = static_cast<int>(expect_num("items"));
    if (users != data.num_users || items != data.num_items)
        throw ParseError(path, lineno, "manifest does not match dataset");

    const long ncold = static_cast<long>(expect_num("cold"));
    std::vector<int> cold;
    for (long i = 0; i < ncold; ++i) {
        const std::string id = next_line();
        auto it = data.item_index.find(id);
        if (it == data.item_index.end())
            throw ParseError(path, lineno, "unknown cold item '" + id + "'");
        cold.push_back(it->second);
    }

    const long ntest = static_cast<long>(expect_num("test"));
    std::vector<std::pair<int, int>> test;
    for (long i = 0; i < ntest; ++i) {
        auto fields = split_fields(next_line(), '\t');
        if (fields.size() != 2)
            throw ParseError(path, lineno, "bad test pair");
        auto uit = data.user_index.find(fields[0]);
        auto iit = data.item_index.find(fields[1]);
        if (uit == data.user_index.end() || iit == data.item_index.end())
            throw ParseError(path, lineno, "unknown test pair entity");
        if (!data.has_interaction(uit->second, iit->second))
            throw ParseError(path, lineno,
                             "test pair not present in dataset");
        test.emplace_back(uit->second, iit->second);
    }

    Split split;
    split.num_users = data.num_users;
    split.num_items = data.num_items;
    split.rng_seed = seed;
    split.cold_items = std::move(cold);
    std::sort(split.cold_items.begin(), split.cold_items.end());
    split.cold_mask.assign(data.num_items, 0);
    for (int v : split.cold_items) split.cold_mask[v] = 1;

    std::sort(test.begin(), test.end());
    split.user_train.resize(data.num_users);
    split.user_test.resize(data.num_users);
    split.item_train_degree.assign(data.num_items, 0);
    size_t ti = 0;
    for (auto [u, v] : data.interactions) {
        const bool is_test =
            ti < test.size() && test[ti] == std::make_pair(u, v);
        if (is_test) {
            ++ti;
            split.user_test[u].push_back(v);
            split.test.emplace_back(u, v);
        } else {
            split.user_train[u].push_back(v);
            split.train.emplace_back(u, v);
            ++split.item_train_degree[v];
        }
    }
    if (ti != test.size())
        throw ParseError(path, lineno, "duplicate test pairs in manifest");
    for (int v : split.cold_items)
        if (split.item_train_degree[v] != 0)
            throw ParseError(path, lineno,
                             "cold item " + data.item_ids[v] +
                                 " has training interactions");
    split.novelty_alpha = compute_novelty_scores(split, data.num_users);
    return split;
}

}  // namespace ids4nr
