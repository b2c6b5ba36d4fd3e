#include <doctest.h>

#include <algorithm>
#include <set>

#include "ids4nr/dataset.hpp"
#include "test_util.hpp"

using namespace ids4nr;
using testutil::fresh_dir;
using testutil::make_log;
using testutil::write_file;

TEST_CASE("load_interactions parses and de-duplicates") {
    auto dir = fresh_dir("load");

    SUBCASE("well-formed tsv") {
        auto p = write_file(dir, "a.tsv",
                            "u1\ti1\t4\t100\n"
                            "u1\ti2\t3\t200\n"
                            "u2\ti1\t5\t300\n");
        auto log = load_interactions(p, FileFormat::Tsv);
        REQUIRE(log.records.size() == 3);
        CHECK(log.records[1].item == "i2");
        CHECK(log.records[2].timestamp == 300);
    }

    SUBCASE("well-formed csv") {
        auto p = write_file(dir, "a.csv", "u1,i1,4,100\nu2,i1,2,50\n");
        auto log = load_interactions(p, FileFormat::Csv);
        CHECK(log.records.size() == 2);
        CHECK(log.records[1].rating == doctest::Approx(2.0));
    }

    SUBCASE("duplicate pair keeps the latest timestamp") {
        auto p = write_file(dir, "dup.tsv",
                            "u1\ti1\t4\t5\n"
                            "u1\ti2\t4\t7\n"
                            "u1\ti1\t2\t9\n");
        auto log = load_interactions(p, FileFormat::Tsv);
        REQUIRE(log.records.size() == 2);
        CHECK(log.records[0].timestamp == 9);
        CHECK(log.records[0].rating == doctest::Approx(2.0));
    }

    SUBCASE("malformed line reports its number") {
        auto p = write_file(dir, "bad.tsv",
                            "u1\ti1\t4\t100\n"
                            "u1\ti2\t4\n"
                            "u2\ti1\t5\t300\n");
        try {
            load_interactions(p, FileFormat::Tsv);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_interactions((dir / "nope.tsv").string(),
                                          FileFormat::Tsv),
                        MissingFileError);
    }

    SUBCASE("negative timestamp rejected") {
        auto p = write_file(dir, "neg.tsv", "u1\ti1\t4\t-3\n");
        CHECK_THROWS_AS(load_interactions(p, FileFormat::Tsv), ParseError);
    }
}

namespace {

// 5-user/5-item toy used for the hand-run peeling check.
InteractionLog peeling_toy() {
    return make_log({
        {0, 0, 1}, {0, 1, 1}, {0, 2, 1}, {0, 3, 1},
        {1, 0, 1}, {1, 1, 1}, {1, 2, 1}, {1, 4, 1},
        {2, 0, 1}, {2, 1, 1}, {2, 3, 1}, {2, 4, 1},
        {3, 2, 1}, {3, 3, 1},
        {4, 0, 1}, {4, 1, 1}, {4, 4, 1},
    });
}

}  // namespace

TEST_CASE("build_dataset applies k-core peeling to a fixpoint") {
    SUBCASE("hand-run toy at k=3") {
        // Removing u3 (degree 2) drops i2 and i3 below 3, which drops u0;
        // the fixpoint keeps {u1,u2,u4} x {i0,i1,i4} fully connected.
        auto data = build_dataset(peeling_toy(), "", "", FileFormat::Tsv, 3);
        CHECK(data.num_users == 3);
        CHECK(data.num_items == 3);
        CHECK(data.interactions.size() == 9);
        CHECK(data.user_ids == std::vector<std::string>{"u1", "u2", "u4"});
        CHECK(data.item_ids == std::vector<std::string>{"i0", "i1", "i4"});
        for (int u = 0; u < 3; ++u) CHECK(data.user_items[u].size() == 3);
    }

    SUBCASE("k=1 keeps everything") {
        auto data = build_dataset(peeling_toy(), "", "", FileFormat::Tsv, 1);
        CHECK(data.num_users == 5);
        CHECK(data.num_items == 5);
        CHECK(data.interactions.size() == 17);
    }

    SUBCASE("boundary: all degrees exactly 5 at k=5") {
        std::vector<std::tuple<int, int, long long>> recs;
        for (int u = 0; u < 5; ++u)
            for (int v = 0; v < 5; ++v) recs.push_back({u, v, 1});
        auto data = build_dataset(make_log(recs), "", "", FileFormat::Tsv, 5);
        CHECK(data.num_users == 5);
        CHECK(data.num_items == 5);
        CHECK(data.interactions.size() == 25);
    }

    SUBCASE("everything removed") {
        CHECK_THROWS_AS(
            build_dataset(peeling_toy(), "", "", FileFormat::Tsv, 10),
            EmptyAfterFilteringError);
    }

    SUBCASE("k-core invariant on a random instance") {
        Rng rng(5);
        std::vector<std::tuple<int, int, long long>> recs;
        std::set<std::pair<int, int>> seen;
        for (int t = 0; t < 900; ++t) {
            const int u = rng.uniform_index(40);
            const int v = rng.uniform_index(60);
            if (seen.insert({u, v}).second) recs.push_back({u, v, t});
        }
        auto data = build_dataset(make_log(recs), "", "", FileFormat::Tsv, 5);
        for (int u = 0; u < data.num_users; ++u)
            CHECK(data.user_items[u].size() >= 5);
        for (int v = 0; v < data.num_items; ++v)
            CHECK(data.item_users[v].size() >= 5);
    }
}

TEST_CASE("build_dataset loads attributes for retained entities") {
    auto dir = fresh_dir("attrs");
    auto ua = write_file(dir, "ua.tsv",
                         "u0\tgender\tF\n"
                         "u1\tgender\tM\n"
                         "u1\tage\ta3\n"
                         "zzz\tgender\tF\n");
    auto ia = write_file(dir, "ia.tsv",
                         "i0\tgenre\tcomedy\n"
                         "i0\tgenre\tdrama\n"
                         "i1\tgenre\tdrama\n");
    auto data = build_dataset(peeling_toy(), ua, ia, FileFormat::Tsv, 1);
    CHECK(data.num_user_fields == 2);
    CHECK(data.num_item_fields == 1);
    // u0: gender only; u1: gender + age; unknown entity line ignored.
    CHECK(data.user_attrs[0].size() == 1);
    CHECK(data.user_attrs[1].size() == 2);
    // i0 has a multi-valued genre field.
    CHECK(data.item_attrs[0].size() == 2);
    CHECK(data.item_attrs[1].size() == 1);
    // Values are shared: F, M, a3, comedy, drama.
    CHECK(data.num_attr_values == 5);
}

TEST_CASE("select_cold_items takes the latest mean timestamps") {
    SUBCASE("five items, one selected") {
        // Mean timestamps 10, 20, 30, 40, 50.
        std::vector<std::tuple<int, int, long long>> recs;
        for (int v = 0; v < 5; ++v)
            for (int u = 0; u < 3; ++u)
                recs.push_back({u, v, (v + 1) * 10 + (u - 1)});
        auto log = make_log(recs);
        auto data = build_dataset(log, "", "", FileFormat::Tsv, 1);
        auto cold = select_cold_items(data, log, 0.2);
        REQUIRE(cold.size() == 1);
        CHECK(data.item_ids[cold[0]] == "i4");
    }

    SUBCASE("fraction 0.2 of 1682 items selects 337") {
        std::vector<std::tuple<int, int, long long>> recs;
        for (int v = 0; v < 1682; ++v)
            for (int u = 0; u < 5; ++u) recs.push_back({u, v, v});
        auto log = make_log(recs);
        auto data = build_dataset(log, "", "", FileFormat::Tsv, 5);
        REQUIRE(data.num_items == 1682);
        CHECK(select_cold_items(data, log, 0.2).size() == 337);
    }

    SUBCASE("tie at the max mean goes to the larger index") {
        std::vector<std::tuple<int, int, long long>> recs;
        for (int u = 0; u < 3; ++u) {
            recs.push_back({u, 0, 10});
            recs.push_back({u, 1, 50});
            recs.push_back({u, 2, 50});
        }
        auto log = make_log(recs);
        auto data = build_dataset(log, "", "", FileFormat::Tsv, 1);
        auto cold = select_cold_items(data, log, 0.2);
        REQUIRE(cold.size() == 1);
        CHECK(data.item_ids[cold[0]] == "i2");
    }
}

TEST_CASE("split_train_test honors the cold and holdout rules") {
    std::vector<std::tuple<int, int, long long>> recs;
    // u0 interacts with 10 warm items.
    for (int v = 0; v < 10; ++v) recs.push_back({0, v, v});
    // i10 gets the latest timestamps and 7 interactions; it will be cold.
    for (int u = 0; u < 7; ++u) recs.push_back({u, 10, 1000 + u});
    // Some warm history for the other users.
    for (int u = 1; u < 7; ++u)
        for (int v = 0; v < 4; ++v) recs.push_back({u, v, 10 + u + v});
    auto log = make_log(recs);
    auto data = build_dataset(log, "", "", FileFormat::Tsv, 1);
    auto cold = select_cold_items(data, log, 0.05);  // ceil(0.55) = 1 item
    REQUIRE(cold.size() == 1);
    REQUIRE(data.item_ids[cold[0]] == "i10");

    Split split = split_train_test(data, cold, 0.1, 77);

    SUBCASE("cold interactions are all in test") {
        const int cv = cold[0];
        CHECK(split.item_train_degree[cv] == 0);
        int in_test = 0;
        for (auto [u, v] : split.test)
            if (v == cv) ++in_test;
        CHECK(in_test == 7);
    }

    SUBCASE("user with 10 warm interactions holds out exactly 1") {
        const int u0 = data.user_index.at("u0");
        CHECK(split.user_train[u0].size() == 9);  // 10 warm - 1 held out
        CHECK(split.user_test[u0].size() == 2);   // 1 held out + 1 cold
    }

    SUBCASE("train and test partition the interactions") {
        CHECK(split.train.size() + split.test.size() ==
              data.interactions.size());
        std::set<std::pair<int, int>> tr(split.train.begin(),
                                         split.train.end());
        for (auto& p : split.test) CHECK(tr.count(p) == 0);
    }

    SUBCASE("same seed gives byte-identical manifests") {
        auto dir = fresh_dir("manifest");
        Split again = split_train_test(data, cold, 0.1, 77);
        save_split_manifest(split, data, (dir / "a.txt").string());
        save_split_manifest(again, data, (dir / "b.txt").string());
        CHECK(testutil::read_file((dir / "a.txt").string()) ==
              testutil::read_file((dir / "b.txt").string()));
        Split different = split_train_test(data, cold, 0.1, 78);
        save_split_manifest(different, data, (dir / "c.txt").string());
        CHECK(testutil::read_file((dir / "a.txt").string()) !=
              testutil::read_file((dir / "c.txt").string()));
    }

    SUBCASE("manifest round-trips") {
        auto dir = fresh_dir("manifest_rt");
        save_split_manifest(split, data, (dir / "m.txt").string());
        Split loaded = load_split_manifest(data, (dir / "m.txt").string());
        CHECK(loaded.train == split.train);
        CHECK(loaded.test == split.test);
        CHECK(loaded.cold_items == split.cold_items);
        CHECK(loaded.rng_seed == split.rng_seed);
        CHECK(loaded.novelty_alpha == split.novelty_alpha);
    }

    SUBCASE("user with a single warm interaction keeps it in train") {
        std::vector<std::tuple<int, int, long long>> r2;
        r2.push_back({0, 0, 1});
        for (int u = 1; u < 4; ++u)
            for (int v = 0; v < 4; ++v) r2.push_back({u, v, 2});
        auto log2 = make_log(r2);
        auto d2 = build_dataset(log2, "", "", FileFormat::Tsv, 1);
        Split s2 = split_train_test(d2, {}, 0.1, 1);
        const int u0 = d2.user_index.at("u0");
        CHECK(s2.user_train[u0].size() == 1);
        CHECK(s2.user_test[u0].empty());
    }
}

TEST_CASE("compute_novelty_scores normalizes log inverse popularity") {
    Split split;
    split.num_users = 3;
    split.num_items = 4;
    split.item_train_degree = {100, 10, 1, 0};
    // alpha' = ln(100/deg): 0, ln10, ln100; zero-degree items stay at 1.
    auto alpha = compute_novelty_scores(split, 100);
    CHECK(alpha[0] == doctest::Approx(0.0));
    CHECK(alpha[1] == doctest::Approx(0.5));  // ln10 / ln100
    CHECK(alpha[2] == doctest::Approx(1.0));
    CHECK(alpha[3] == doctest::Approx(1.0));

    SUBCASE("monotonicity and range on random degrees") {
        Rng rng(3);
        Split s;
        s.num_users = 50;
        s.num_items = 30;
        s.item_train_degree.resize(30);
        for (auto& d : s.item_train_degree) d = rng.uniform_index(50);
        auto a = compute_novelty_scores(s, 50);
        for (int i = 0; i < 30; ++i) {
            CHECK(a[i] >= 0.0);
            CHECK(a[i] <= 1.0);
            for (int j = 0; j < 30; ++j) {
                if (s.item_train_degree[i] == 0 ||
                    s.item_train_degree[j] == 0)
                    continue;
                if (s.item_train_degree[i] < s.item_train_degree[j])
                    CHECK(a[i] >= a[j]);
            }
        }
    }

    SUBCASE("degenerate equal popularity maps to 0.5") {
        Split s;
        s.num_users = 10;
        s.num_items = 2;
        s.item_train_degree = {4, 4};
        auto a = compute_novelty_scores(s, 10);
        CHECK(a[0] == doctest::Approx(0.5));
        CHECK(a[1] == doctest::Approx(0.5));
    }
}

TEST_CASE("sample_negatives draws unseen items without replacement") {
    Split split;
    split.num_users = 1;
    split.num_items = 6;
    split.user_train = {{0, 1}};
    split.user_test = {{}};
    split.item_train_degree = {1, 1, 0, 0, 0, 0};

    SUBCASE("exhaustion draws the full complement") {
        Rng rng(9);
        auto negs = sample_negatives(split, 0, 4, rng);
        std::sort(negs.begin(), negs.end());
        CHECK(negs == std::vector<int>{2, 3, 4, 5});
    }

    SUBCASE("insufficient candidates") {
        Rng rng(9);
        CHECK_THROWS_AS(sample_negatives(split, 0, 5, rng),
                        InsufficientCandidatesError);
    }

    SUBCASE("determinism under the same rng state") {
        Rng a(123), b(123);
        CHECK(sample_negatives(split, 0, 3, a) ==
              sample_negatives(split, 0, 3, b));
    }

    SUBCASE("negatives never come from train, over many seeds") {
        Split s;
        s.num_users = 1;
        s.num_items = 50;
        s.user_train = {{3, 7, 11, 12, 30, 41}};
        s.user_test = {{}};
        s.item_train_degree.assign(50, 0);
        for (uint64_t seed = 0; seed < 60; ++seed) {
            Rng rng(seed);
            auto negs = sample_negatives(s, 0, 4, rng);
            std::set<int> uniq(negs.begin(), negs.end());
            CHECK(uniq.size() == 4);
            for (int v : negs) CHECK_FALSE(s.in_train(0, v));
        }
    }
}

TEST_CASE("make_batches shapes the epoch stream") {
    // 20 users x 5 train items each = 100 positives.
    std::vector<std::tuple<int, int, long long>> recs;
    for (int u = 0; u < 20; ++u)
        for (int v = 0; v < 5; ++v) recs.push_back({u, (u + v) % 30, v});
    auto log = make_log(recs);
    auto data = build_dataset(log, "", "", FileFormat::Tsv, 1);
    Split split = split_train_test(data, {}, 0.0, 5);
    REQUIRE(split.train.size() == 100);

    SUBCASE("pointwise: 1 positive + 4 negatives per positive") {
        Rng rng(1);
        auto batches = make_batches(split, BatchMode::Pointwise, 128, 4, rng);
        size_t total = 0, positives = 0, ss = 0;
        for (const auto& b : batches) {
            total += b.points.size();
            for (const auto& ex : b.points) {
                if (ex.label > 0.5f) {
                    ++positives;
                    CHECK(split.in_train(ex.user, ex.item));
                } else {
                    CHECK_FALSE(split.in_train(ex.user, ex.item));
                }
                if (ex.ss) ++ss;
            }
        }
        CHECK(total == 500);
        CHECK(positives == 100);
        CHECK(ss == 100);
        for (size_t i = 0; i + 1 < batches.size(); ++i)
            CHECK(batches[i].points.size() == 128);
        CHECK(batches.back().points.size() == 500 - 128 * 3);
    }

    SUBCASE("pairwise: 4 triples per positive") {
        Rng rng(1);
        auto batches = make_batches(split, BatchMode::Pairwise, 128, 4, rng);
        size_t total = 0, ss = 0;
        for (const auto& b : batches) {
            total += b.pairs.size();
            for (const auto& ex : b.pairs) {
                CHECK(split.in_train(ex.user, ex.pos));
                CHECK_FALSE(split.in_train(ex.user, ex.neg));
                if (ex.ss) ++ss;
            }
        }
        CHECK(total == 400);
        CHECK(ss == 100);
        for (size_t i = 0; i + 1 < batches.size(); ++i)
            CHECK(batches[i].pairs.size() == 128);
    }

    SUBCASE("same rng seed reproduces the stream") {
        Rng a(7), b(7);
        auto ba = make_batches(split, BatchMode::Pairwise, 32, 4, a);
        auto bb = make_batches(split, BatchMode::Pairwise, 32, 4, b);
        REQUIRE(ba.size() == bb.size());
        for (size_t i = 0; i < ba.size(); ++i) {
            REQUIRE(ba[i].pairs.size() == bb[i].pairs.size());
            for (size_t j = 0; j < ba[i].pairs.size(); ++j) {
                CHECK(ba[i].pairs[j].user == bb[i].pairs[j].user);
                CHECK(ba[i].pairs[j].pos == bb[i].pairs[j].pos);
                CHECK(ba[i].pairs[j].neg == bb[i].pairs[j].neg);
            }
        }
    }
}
