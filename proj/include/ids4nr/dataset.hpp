#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ids4nr/errors.hpp"
#include "ids4nr/rng.hpp"

namespace ids4nr {

enum class FileFormat { Csv, Tsv };

inline char separator(FileFormat f) { return f == FileFormat::Csv ? ',' : '\t'; }

struct InteractionRecord {
    std::string user;
    std::string item;
    double rating = 0.0;
    int64_t timestamp = 0;
};

// Parsed interaction file. Duplicate (user, item) pairs are collapsed at load
// time, keeping the record with the latest timestamp.
struct InteractionLog {
    std::vector<InteractionRecord> records;
};

InteractionLog load_interactions(const std::string& path, FileFormat format);

// One attribute assignment: field index (per side) and a row in the shared
// attribute embedding table.
struct AttrRef {
    int field = 0;
    int value_row = 0;
};

struct Dataset {
    int num_users = 0;  // M
    int num_items = 0;  // N
    // All observed pairs after binarization and k-core filtering, sorted by
    // (user, item). Membership means R_uv = 1.
    std::vector<std::pair<int, int>> interactions;
    std::vector<std::vector<int>> user_items;  // per user, sorted
    std::vector<std::vector<int>> item_users;  // per item, sorted

    std::vector<std::vector<AttrRef>> user_attrs;
    std::vector<std::vector<AttrRef>> item_attrs;
    int num_user_fields = 0;
    int num_item_fields = 0;
    int num_attr_values = 0;  // rows of the attribute embedding table
    std::vector<std::string> user_field_names;
    std::vector<std::string> item_field_names;
    std::vector<std::string> attr_value_names;

    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, int> user_index;
    std::unordered_map<std::string, int> item_index;

    bool has_interaction(int u, int v) const;
};

// Binarizes the log, applies k-core peeling to a fixpoint and re-indexes
// densely. Attribute paths may be empty (that side then has no content
// features). Throws EmptyAfterFilteringError when nothing survives.
Dataset build_dataset(const InteractionLog& log,
                      const std::string& user_attr_path,
                      const std::string& item_attr_path, FileFormat format,
                      int k_core = 5);

// The ceil(fraction * N) items with the latest mean interaction timestamp,
// ties broken toward the larger item index. Returned sorted ascending.
std::vector<int> select_cold_items(const Dataset& data,
                                   const InteractionLog& log,
                                   double fraction = 0.2);

struct Split {
    int num_users = 0;
    int num_items = 0;
    std::vector<std::pair<int, int>> train;  // sorted by (user, item)
    std::vector<std::pair<int, int>> test;   // sorted by (user, item)
    std::vector<std::vector<int>> user_train;  // per user, sorted
    std::vector<std::vector<int>> user_test;   // per user, sorted
    std::vector<int> item_train_degree;
    std::vector<uint8_t> cold_mask;
    std::vector<int> cold_items;  // sorted ascending
    std::vector<double> novelty_alpha;
    uint64_t rng_seed = 0;

    bool in_train(int u, int v) const;
    // Evaluation candidates for u are all items not in u's training set.
    int candidate_count(int u) const {
        return num_items - static_cast<int>(user_train[u].size());
    }
};

// Every interaction of a cold item goes to test; then 10% of each user's
// remaining interactions (at least 1 when the user has >= 2) move to test,
// uniformly at random under `seed`. Fills novelty_alpha.
Split split_train_test(const Dataset& data, const std::vector<int>& cold_items,
                       double holdout, uint64_t seed);

// alpha'_v = ln(M / |U_v|) over training users, min-max normalized to [0,1]
// across items that have at least one training user; items with none
// (cold items in particular) get alpha = 1.
std::vector<double> compute_novelty_scores(const Split& split, int num_users);

// `count` distinct items with (u, v) not in train, drawn uniformly.
std::vector<int> sample_negatives(const Split& split, int user, int count,
                                  Rng& rng);

enum class BatchMode { Pointwise, Pairwise };

struct PointExample {
    int user = 0;
    int item = 0;
    float label = 0.0f;
    float alpha = 0.0f;
    uint8_t ss = 0;  // self-supervision is evaluated once per positive
};

struct PairExample {
    int user = 0;
    int pos = 0;
    int neg = 0;
    float alpha_pos = 0.0f;
    float alpha_neg = 0.0f;
    uint8_t ss = 0;
};

struct TrainBatch {
    BatchMode mode = BatchMode::Pointwise;
    std::vector<PointExample> points;
    std::vector<PairExample> pairs;

    size_t size() const {
        return mode == BatchMode::Pointwise ? points.size() : pairs.size();
    }
};

// One epoch worth of batches: positives shuffled, each paired with
// `negatives` fresh samples, the example stream chunked into `batch_size`
// pieces (only the last batch may be smaller).
std::vector<TrainBatch> make_batches(const Split& split, BatchMode mode,
                                     int batch_size, int negatives, Rng& rng);

// Text manifest recording seed, cold item ids and test pairs, sufficient to
// replay a split exactly.
void save_split_manifest(const Split& split, const Dataset& data,
                         const std::string& path);
Split load_split_manifest(const Dataset& data, const std::string& path);

}  // namespace ids4nr
