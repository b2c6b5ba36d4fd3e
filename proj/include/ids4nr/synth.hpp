#pragma once

#include <cstdint>
#include <string>

namespace ids4nr {

// Deterministic generator for a MovieLens-100K-shaped benchmark dataset:
// exact user/item/interaction counts, >= 20 interactions per user and >= 5
// per item (so 5-core filtering is a no-op), a long-tail popularity curve,
// release-time structure (the latest items become the cold set), and
// genre-driven user preferences mixed with per-user conformity so that both
// collaborative and content signal are learnable.
struct SynthSpec {
    int users = 943;
    int items = 1682;
    long interactions = 100000;
    uint64_t seed = 7;
    int genres = 18;
    double zipf = 1.0;        // popularity skew exponent
    double conformity = 1.0;  // scales the popularity-driven share of picks
};

// Writes interactions.tsv, user_attrs.tsv and item_attrs.tsv under dir.
void write_synthetic_dataset(const SynthSpec& spec, const std::string& dir);

}  // namespace ids4nr
