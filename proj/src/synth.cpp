#include "ids4nr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>
#include <vector>

#include "ids4nr/errors.hpp"
#include "ids4nr/rng.hpp"

namespace ids4nr {

namespace {

constexpr int kEras = 8;
constexpr int kAgeGroups = 7;
constexpr int kOccupations = 21;

const char* kOccupationNames[kOccupations] = {
    "administrator", "artist",     "doctor",     "educator",  "engineer",
    "entertainment", "executive",  "healthcare", "homemaker", "lawyer",
    "librarian",     "marketing",  "musician",   "none",      "other",
    "programmer",    "retired",    "salesman",   "scientist", "student",
    "technician"};

// Cumulative-weight sampler.
struct WeightedPicker {
    std::vector<double> cum;
    std::vector<int> ids;

    void build(const std::vector<int>& candidates,
               const std::vector<double>& weights) {
        ids = candidates;
        cum.resize(ids.size());
        double acc = 0.0;
        for (size_t i = 0; i < ids.size(); ++i) {
            acc += weights[ids[i]];
            cum[i] = acc;
        }
    }

    int pick(Rng& rng) const {
        const double x = rng.uniform() * cum.back();
        const auto it = std::lower_bound(cum.begin(), cum.end(), x);
        return ids[it - cum.begin()];
    }
};

}  // namespace

void write_synthetic_dataset(const SynthSpec& spec, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int M = spec.users;
    const int N = spec.items;
    const long T = spec.interactions;
    Rng master(spec.seed);

    // ---- items: genres, release order, popularity ----
    Rng item_rng = master.fork(1);
    std::vector<double> genre_weight(spec.genres);
    for (int g = 0; g < spec.genres; ++g)
        genre_weight[g] = std::pow(static_cast<double>(g + 1), -0.6);

    auto pick_genre = [&](Rng& rng) {
        double total = 0.0;
        for (double w : genre_weight) total += w;
        double x = rng.uniform() * total;
        for (int g = 0; g < spec.genres; ++g) {
            x -= genre_weight[g];
            if (x <= 0.0) return g;
        }
        return spec.genres - 1;
    };

    std::vector<int> primary(N), secondary(N, -1);
    for (int v = 0; v < N; ++v) {
        primary[v] = pick_genre(item_rng);
        if (item_rng.uniform() < 0.35) {
            int g = pick_genre(item_rng);
            while (g == primary[v]) g = pick_genre(item_rng);
            secondary[v] = g;
        }
    }

    std::vector<int> release_rank(N);
    for (int v = 0; v < N; ++v) release_rank[v] = v;
    for (int i = N - 1; i > 0; --i) {
        const int j = item_rng.uniform_index(i + 1);
        std::swap(release_rank[i], release_rank[j]);
    }
    std::vector<double> release(N);
    std::vector<int> era(N);
    for (int v = 0; v < N; ++v) {
        release[release_rank[v]] = (v + 0.5) / N;
    }
    for (int v = 0; v < N; ++v)
        era[v] = std::min(kEras - 1, static_cast<int>(release[v] * kEras));

    // Older items had more exposure; popularity rank mostly follows release.
    std::vector<double> expose(N);
    for (int v = 0; v < N; ++v)
        expose[v] = 0.75 * release[v] + 0.25 * item_rng.uniform();
    std::vector<int> pop_order(N);
    for (int v = 0; v < N; ++v) pop_order[v] = v;
    std::sort(pop_order.begin(), pop_order.end(),
              [&](int a, int b) { return expose[a] < expose[b]; });
    std::vector<double> pop_weight(N);
    for (int r = 0; r < N; ++r)
        pop_weight[pop_order[r]] =
            std::pow(static_cast<double>(r + 8), -spec.zipf);

    std::vector<int> all_items(N);
    for (int v = 0; v < N; ++v) all_items[v] = v;
    WeightedPicker global_picker;
    global_picker.build(all_items, pop_weight);

    // Per-genre pickers with a flatter weight so niche picks reach the tail.
    std::vector<double> tail_weight(N);
    for (int v = 0; v < N; ++v) tail_weight[v] = std::pow(pop_weight[v], 0.55);
    std::vector<WeightedPicker> genre_picker(spec.genres);
    {
        std::vector<std::vector<int>> by_genre(spec.genres);
        for (int v = 0; v < N; ++v) {
            by_genre[primary[v]].push_back(v);
            if (secondary[v] >= 0) by_genre[secondary[v]].push_back(v);
        }
        for (int g = 0; g < spec.genres; ++g)
            genre_picker[g].build(by_genre[g], tail_weight);
    }

    // ---- users: archetypes, preferences, conformity, activity ----
    Rng user_rng = master.fork(2);
    std::vector<std::array<int, 3>> occ_core(kOccupations);
    for (auto& core : occ_core) {
        core[0] = pick_genre(user_rng);
        do core[1] = pick_genre(user_rng); while (core[1] == core[0]);
        do core[2] = pick_genre(user_rng);
        while (core[2] == core[0] || core[2] == core[1]);
    }

    std::vector<int> occupation(M), age_group(M);
    std::vector<char> gender(M);
    std::vector<std::array<int, 3>> pref(M);
    std::vector<double> conformity(M);
    std::vector<long> activity(M);
    std::vector<std::vector<int>> genre_fans(spec.genres);
    for (int u = 0; u < M; ++u) {
        occupation[u] = user_rng.uniform_index(kOccupations);
        gender[u] = user_rng.uniform() < 0.71 ? 'M' : 'F';
        age_group[u] = std::min(
            kAgeGroups - 1,
            static_cast<int>(std::floor(std::abs(user_rng.normal()) * 1.9)));
        const auto& core = occ_core[occupation[u]];
        pref[u][0] = core[user_rng.uniform_index(3)];
        do pref[u][1] = core[user_rng.uniform_index(3)];
        while (pref[u][1] == pref[u][0]);
        pref[u][2] = pick_genre(user_rng);
        for (int g : {pref[u][0], pref[u][1]}) genre_fans[g].push_back(u);

        const double tier = user_rng.uniform();
        double chi = tier < 0.3 ? 0.72 : (tier < 0.7 ? 0.5 : 0.28);
        chi += user_rng.uniform(-0.08, 0.08);
        conformity[u] =
            std::clamp(chi * spec.conformity, 0.05, 0.95);

        const double raw = std::exp(user_rng.normal() * 1.0 + 4.1);
        activity[u] = static_cast<long>(std::clamp(raw, 4.0, 520.0));
    }
    // Scale activities so they sum exactly to T.
    {
        long sum = 0;
        for (long a : activity) sum += a;
        std::vector<long> scaled(M);
        long acc = 0;
        for (int u = 0; u < M; ++u) {
            scaled[u] = std::clamp<long>(
                std::lround(static_cast<double>(activity[u]) * T / sum), 20,
                600);
            acc += scaled[u];
        }
        // Distribute the rounding drift over the most active users.
        std::vector<int> by_activity(M);
        for (int u = 0; u < M; ++u) by_activity[u] = u;
        std::sort(by_activity.begin(), by_activity.end(),
                  [&](int a, int b) { return scaled[a] > scaled[b]; });
        long drift = T - acc;
        size_t at = 0;
        while (drift != 0) {
            const int u = by_activity[at % M];
            if (drift > 0) {
                ++scaled[u];
                --drift;
            } else if (scaled[u] > 20) {
                --scaled[u];
                ++drift;
            }
            ++at;
        }
        activity = std::move(scaled);
    }

    // ---- assemble interactions ----
    Rng draw_rng = master.fork(3);
    auto key = [N](int u, int v) {
        return static_cast<int64_t>(u) * N + v;
    };
    std::unordered_set<int64_t> seen;
    seen.reserve(static_cast<size_t>(T) * 2);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(T);
    std::vector<int> user_deg(M, 0), item_deg(N, 0);

    auto add_pair = [&](int u, int v) {
        if (!seen.insert(key(u, v)).second) return false;
        pairs.emplace_back(u, v);
        ++user_deg[u];
        ++item_deg[v];
        return true;
    };

    for (int u = 0; u < M; ++u) {
        const auto& p = pref[u];
        for (long k = 0; k < activity[u]; ++k) {
            bool placed = false;
            for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
                int v;
                if (draw_rng.uniform() < conformity[u]) {
                    v = global_picker.pick(draw_rng);
                } else {
                    const double x = draw_rng.uniform();
                    const int g = x < 0.5 ? p[0] : (x < 0.8 ? p[1] : p[2]);
                    v = genre_picker[g].pick(draw_rng);
                }
                placed = add_pair(u, v);
            }
            if (!placed) {
                // Dense user: linear probe from a random start.
                const int start = draw_rng.uniform_index(N);
                for (int d = 0; d < N && !placed; ++d)
                    placed = add_pair(u, (start + d) % N);
            }
        }
    }

    // ---- enforce the per-item minimum of 5 ----
    Rng fill_rng = master.fork(4);
    for (int v = 0; v < N; ++v) {
        while (item_deg[v] < 5) {
            int u = -1;
            const auto& fans = genre_fans[primary[v]];
            for (int attempt = 0; attempt < 40 && u < 0; ++attempt) {
                const int cand = fans.empty()
                                     ? fill_rng.uniform_index(M)
                                     : fans[fill_rng.uniform_index(
                                           (int)fans.size())];
                if (!seen.count(key(cand, v))) u = cand;
            }
            if (u < 0) {
                for (int cand = 0; cand < M && u < 0; ++cand)
                    if (!seen.count(key(cand, v))) u = cand;
            }
            if (u < 0) throw ConfigError("synthetic item cannot reach 5-core");
            add_pair(u, v);
        }
    }

    // ---- trim back to exactly T, keeping the minimums ----
    if (static_cast<long>(pairs.size()) > T) {
        std::vector<size_t> order(pairs.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            const int da = item_deg[pairs[a].second];
            const int db = item_deg[pairs[b].second];
            if (da != db) return da > db;
            return a < b;
        });
        std::vector<uint8_t> removed(pairs.size(), 0);
        long excess = static_cast<long>(pairs.size()) - T;
        for (size_t idx : order) {
            if (excess == 0) break;
            auto [u, v] = pairs[idx];
            if (user_deg[u] > 20 && item_deg[v] > 5) {
                removed[idx] = 1;
                --user_deg[u];
                --item_deg[v];
                --excess;
            }
        }
        if (excess != 0)
            throw ConfigError("synthetic trim could not reach target count");
        std::vector<std::pair<int, int>> kept;
        kept.reserve(T);
        for (size_t i = 0; i < pairs.size(); ++i)
            if (!removed[i]) kept.push_back(pairs[i]);
        pairs = std::move(kept);
    }

    // ---- timestamps and output ----
    Rng ts_rng = master.fork(5);
    std::sort(pairs.begin(), pairs.end());
    std::ofstream inter(fs::path(dir) / "interactions.tsv");
    if (!inter) throw MissingFileError(dir + "/interactions.tsv");
    for (auto [u, v] : pairs) {
        const double t =
            release[v] + (1.0 - release[v]) * 0.3 * ts_rng.uniform();
        const long long ts =
            100000000LL + static_cast<long long>(t * 80000000.0);
        const int rating = 1 + ts_rng.uniform_index(5);
        inter << (u + 1) << "\t" << (v + 1) << "\t" << rating << "\t" << ts
              << "\n";
    }

    std::ofstream uattr(fs::path(dir) / "user_attrs.tsv");
    if (!uattr) throw MissingFileError(dir + "/user_attrs.tsv");
    for (int u = 0; u < M; ++u) {
        uattr << (u + 1) << "\tgender\t" << gender[u] << "\n";
        uattr << (u + 1) << "\tage\ta" << age_group[u] << "\n";
        uattr << (u + 1) << "\toccupation\t"
              << kOccupationNames[occupation[u]] << "\n";
    }

    std::ofstream iattr(fs::path(dir) / "item_attrs.tsv");
    if (!iattr) throw MissingFileError(dir + "/item_attrs.tsv");
    for (int v = 0; v < N; ++v) {
        iattr << (v + 1) << "\tgenre\tg" << primary[v] << "\n";
        if (secondary[v] >= 0)
            iattr << (v + 1) << "\tgenre\tg" << secondary[v] << "\n";
        iattr << (v + 1) << "\tera\te" << era[v] << "\n";
    }
}

}  // namespace ids4nr
