#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedphish/dataset.hpp"
#include "fedphish/errors.hpp"
#include "fedphish/rng.hpp"
#include "fedphish/synth.hpp"

using namespace fedphish;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/" + name;
    std::ofstream os(path);
    os << content;
    return path;
}

std::size_t feature_index(const std::string& name) {
    const auto& names = canonical_feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    REQUIRE(false);
    return 0;
}

Dataset toy_dataset(const std::vector<std::pair<std::vector<double>, int>>& rows) {
    Dataset ds;
    ds.feature_names = {"a", "b"};
    ds.source = "toy";
    for (const auto& [f, l] : rows) ds.records.push_back({f, l});
    return ds;
}

} // namespace

TEST_CASE("url feature oracles") {
    const auto& names = canonical_feature_names();
    REQUIRE(names.size() == 19);
    CHECK(names.front() == "url_length");
    CHECK(names.back() == "count_redirection");

    SUBCASE("typical url") {
        auto f = extract_features("http://a.b/c?d=e");
        REQUIRE(f.size() == 19);
        CHECK(f[feature_index("url_length")] == 16.0);
        CHECK(f[feature_index("count_dot")] == 1.0);
        CHECK(f[feature_index("count_slash")] == 3.0);
        CHECK(f[feature_index("count_question")] == 1.0);
        CHECK(f[feature_index("count_equal")] == 1.0);
        CHECK(f[feature_index("count_redirection")] == 0.0);
        CHECK(f[feature_index("count_hyphen")] == 0.0);
    }
    SUBCASE("single dot") {
        auto f = extract_features(".");
        CHECK(f[feature_index("url_length")] == 1.0);
        CHECK(f[feature_index("count_dot")] == 1.0);
        double rest = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (i != feature_index("url_length") && i != feature_index("count_dot")) rest += f[i];
        CHECK(rest == 0.0);
    }
    SUBCASE("redirections counted from offset 8, non-overlapping") {
        auto f = extract_features("http://x//y//z");
        CHECK(f[feature_index("url_length")] == 14.0);
        CHECK(f[feature_index("count_slash")] == 6.0);
        CHECK(f[feature_index("count_redirection")] == 2.0);

        // the protocol separator itself never counts
        CHECK(extract_features("http://ok.com")[feature_index("count_redirection")] == 0.0);
        // a run of three slashes is one redirection, not two
        CHECK(extract_features("http://a.b///c")[feature_index("count_redirection")] == 1.0);
    }
    SUBCASE("every counted character") {
        auto f = extract_features("http://a.b-c_d/e?f=g@h&i!j k~l,m+n*o#p$q%r");
        for (const std::string& name :
             {"count_dot", "count_hyphen", "count_underscore", "count_question", "count_equal",
              "count_at", "count_ampersand", "count_exclamation", "count_space", "count_tilde",
              "count_comma", "count_plus", "count_asterisk", "count_hashtag", "count_dollar",
              "count_percent"})
            CHECK(f[feature_index(name)] == 1.0);
        CHECK(f[feature_index("count_slash")] == 3.0);
    }
    SUBCASE("empty url is rejected") {
        CHECK_THROWS_AS(extract_features(""), DataError);
    }
}

TEST_CASE("numeric csv loading") {
    SUBCASE("well-formed file") {
        const std::string path = write_temp("fp_ok.csv", "x,y,label\r\n1,2,1\n\n3.5,-4,0\n");
        Dataset ds = load_csv(path);
        CHECK(ds.feature_names == std::vector<std::string>{"x", "y"});
        REQUIRE(ds.size() == 2);
        CHECK(ds.records[0].features == std::vector<double>{1.0, 2.0});
        CHECK(ds.records[0].label == 1);
        CHECK(ds.records[1].features == std::vector<double>{3.5, -4.0});
        CHECK(ds.records[1].label == 0);
        CHECK(ds.width() == 2);
        std::remove(path.c_str());
    }
    SUBCASE("header must end in label") {
        const std::string path = write_temp("fp_nolabel.csv", "x,y,target\n1,2,1\n");
        CHECK_THROWS_AS(load_csv(path), DataError);
        std::remove(path.c_str());
    }
    SUBCASE("non-numeric cell names line and column") {
        const std::string path = write_temp("fp_badcell.csv", "x,label\n1,1\nfoo,0\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 3"), DataError);
        std::remove(path.c_str());
    }
    SUBCASE("labels restricted to 0 and 1") {
        const std::string path = write_temp("fp_badlabel.csv", "x,label\n1,2\n");
        CHECK_THROWS_AS(load_csv(path), DataError);
        const std::string path2 = write_temp("fp_fraclabel.csv", "x,label\n1,0.5\n");
        CHECK_THROWS_AS(load_csv(path2), DataError);
        std::remove(path.c_str());
        std::remove(path2.c_str());
    }
    SUBCASE("ragged rows are rejected") {
        const std::string path = write_temp("fp_ragged.csv", "x,y,label\n1,2,1\n3,0\n");
        CHECK_THROWS_AS(load_csv(path), DataError);
        std::remove(path.c_str());
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_csv("/nonexistent/data.csv"), IoError);
    }
}

TEST_CASE("raw url csv loading") {
    const std::string path = write_temp(
        "fp_urls.csv", "url,label\nhttp://a.b/c?d=e,1\nhttp://x,y=z.com,0\n");
    CHECK(csv_has_url_header(path));
    Dataset ds = load_url_csv(path);
    REQUIRE(ds.size() == 2);
    CHECK(ds.feature_names == canonical_feature_names());
    CHECK(ds.records[0].features == extract_features("http://a.b/c?d=e"));
    CHECK(ds.records[0].label == 1);
    // the split is at the last comma, so the url keeps its own comma
    CHECK(ds.records[1].features == extract_features("http://x,y=z.com"));
    CHECK(ds.records[1].label == 0);
    std::remove(path.c_str());

    const std::string numeric = write_temp("fp_numeric.csv", "x,label\n1,0\n");
    CHECK_FALSE(csv_has_url_header(numeric));
    std::remove(numeric.c_str());
}

TEST_CASE("undersampling balances to the minority count") {
    SUBCASE("already balanced data is returned untouched") {
        Dataset ds = toy_dataset({{{1, 0}, 0}, {{2, 0}, 1}, {{3, 0}, 0}, {{4, 0}, 1}});
        Dataset out = undersample_balance(ds, 9);
        REQUIRE(out.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(out.records[i].features == ds.records[i].features);
            CHECK(out.records[i].label == ds.records[i].label);
        }
    }
    SUBCASE("majority is sampled down, survivors keep their order") {
        std::vector<std::pair<std::vector<double>, int>> rows;
        for (int i = 0; i < 40; ++i) rows.push_back({{static_cast<double>(i), 0}, 0});
        for (int i = 0; i < 10; ++i) rows.push_back({{100.0 + i, 0}, 1});
        Dataset ds = toy_dataset(rows);
        Dataset out = undersample_balance(ds, 3);

        int c0 = 0, c1 = 0;
        double prev = -1.0;
        for (const auto& r : out.records) {
            if (r.label == 0) {
                ++c0;
                CHECK(r.features[0] > prev); // original order preserved
                prev = r.features[0];
            } else {
                ++c1;
            }
        }
        CHECK(c0 == 10);
        CHECK(c1 == 10);

        Dataset again = undersample_balance(ds, 3);
        REQUIRE(again.size() == out.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            CHECK(again.records[i].features == out.records[i].features);

        Dataset other = undersample_balance(ds, 4);
        bool differs = other.size() != out.size();
        for (std::size_t i = 0; !differs && i < out.size(); ++i)
            differs = other.records[i].features != out.records[i].features;
        CHECK(differs); // different seed picks a different majority subset
    }
}

TEST_CASE("standardization oracle") {
    Dataset ds = toy_dataset({{{1, 5}, 0}, {{3, 5}, 1}});
    auto [scaled, stats] = standardize(ds);
    CHECK(stats.mean[0] == 2.0);
    CHECK(stats.stddev[0] == 1.0); // population std of {1,3}
    CHECK(scaled.records[0].features[0] == -1.0);
    CHECK(scaled.records[1].features[0] == 1.0);

    // constant feature: flagged and mapped to zero
    CHECK(stats.constant[1]);
    CHECK_FALSE(stats.constant[0]);
    CHECK(scaled.records[0].features[1] == 0.0);
    CHECK(scaled.records[1].features[1] == 0.0);

    // frozen stats applied to unseen data use the original mean/std
    Dataset fresh = toy_dataset({{{5, 7}, 0}});
    Dataset mapped = standardize(fresh, stats);
    CHECK(mapped.records[0].features[0] == 3.0); // (5-2)/1
    CHECK(mapped.records[0].features[1] == 0.0); // constant stays pinned

    Dataset wrong;
    wrong.feature_names = {"only"};
    wrong.records.push_back({{1.0}, 0});
    CHECK_THROWS_AS(standardize(wrong, stats), UsageError);
}

TEST_CASE("label correlation") {
    SUBCASE("perfect and inverse correlation") {
        Dataset ds = toy_dataset({{{0, 1}, 0}, {{1, 0}, 1}, {{0, 1}, 0}, {{1, 0}, 1}});
        auto report = correlation_report(ds);
        REQUIRE(report.size() == 2);
        CHECK(report[0].r == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(report[1].r == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK_FALSE(report[0].constant);
    }
    SUBCASE("independent feature has near-zero correlation") {
        RngStream rng(77);
        std::vector<std::pair<std::vector<double>, int>> rows;
        for (int i = 0; i < 10000; ++i) rows.push_back({{rng.uniform(), 0.0}, i % 2});
        auto report = correlation_report(toy_dataset(rows));
        CHECK(std::abs(report[0].r) < 0.05);
        CHECK(report[1].constant); // second feature never varies
        CHECK(report[1].r == 0.0);
    }
    SUBCASE("needs at least two records") {
        Dataset one = toy_dataset({{{1, 2}, 0}});
        CHECK_THROWS_AS(correlation_report(one), DataError);
    }
}

TEST_CASE("stream partitioning") {
    Dataset ds = synth_dataset(103, 5);
    REQUIRE(ds.size() > 0);

    SUBCASE("shuffled streams cover the data disjointly with near-equal sizes") {
        StreamPartition part = partition_streams(ds, 4, PartitionMode::Shuffled, 11);
        REQUIRE(part.streams.size() == 4);
        std::size_t total = 0;
        std::size_t mx = 0, mn = ds.size();
        std::multiset<double> seen, expect;
        for (const auto& s : part.streams) {
            total += s.size();
            mx = std::max(mx, s.size());
            mn = std::min(mn, s.size());
            for (const auto& r : s.records) seen.insert(r.features[0] * 1000 + r.label);
        }
        for (const auto& r : ds.records) expect.insert(r.features[0] * 1000 + r.label);
        CHECK(total == ds.size());
        CHECK(mx - mn <= 1);
        CHECK(seen == expect); // same multiset of records

        StreamPartition again = partition_streams(ds, 4, PartitionMode::Shuffled, 11);
        for (std::size_t s = 0; s < 4; ++s) {
            REQUIRE(again.streams[s].size() == part.streams[s].size());
            for (std::size_t i = 0; i < part.streams[s].size(); ++i)
                CHECK(again.streams[s].records[i].features ==
                      part.streams[s].records[i].features);
        }
    }
    SUBCASE("drift orders streams by url length") {
        StreamPartition part = partition_streams(ds, 4, PartitionMode::Drift, 11);
        const std::size_t len_idx = feature_index("url_length");
        for (std::size_t s = 0; s + 1 < part.streams.size(); ++s) {
            double max_here = 0.0, min_next = 1e18;
            for (const auto& r : part.streams[s].records)
                max_here = std::max(max_here, r.features[len_idx]);
            for (const auto& r : part.streams[s + 1].records)
                min_next = std::min(min_next, r.features[len_idx]);
            CHECK(max_here <= min_next);
        }
    }
    SUBCASE("bad stream counts") {
        CHECK_THROWS_AS(partition_streams(ds, 0, PartitionMode::Shuffled, 1), ConfigError);
        CHECK_THROWS_AS(partition_streams(ds, static_cast<int>(ds.size()) + 1,
                                          PartitionMode::Shuffled, 1),
                        ConfigError);
    }
    SUBCASE("mode parsing") {
        CHECK(parse_partition_mode("shuffled") == PartitionMode::Shuffled);
        CHECK(parse_partition_mode("drift") == PartitionMode::Drift);
        CHECK_THROWS_AS(parse_partition_mode("iid"), ConfigError);
        CHECK(partition_mode_name(PartitionMode::Drift) == "drift");
    }
}

TEST_CASE("node sharding covers each stream") {
    Dataset ds = synth_dataset(50, 7);
    std::vector<Dataset> shards = shard_for_nodes(ds, 3, 21);
    REQUIRE(shards.size() == 3);
    std::size_t total = 0;
    for (const auto& s : shards) total += s.size();
    CHECK(total == ds.size());
    CHECK(shards[0].size() - shards[2].size() <= 1);

    CHECK_THROWS_AS(shard_for_nodes(ds, 0, 1), ConfigError);
    CHECK_THROWS_AS(shard_for_nodes(ds, 51, 1), ConfigError);
}

TEST_CASE("train/test split sizes") {
    Dataset ds = synth_dataset(10, 9);
    TrainTestSplit split = train_test_split(ds, 1);
    CHECK(split.train.size() == 8);
    CHECK(split.test.size() == 2);

    // multiset union equals the input
    std::multiset<double> seen, expect;
    for (const auto& r : split.train.records) seen.insert(r.features[0] * 1000 + r.label);
    for (const auto& r : split.test.records) seen.insert(r.features[0] * 1000 + r.label);
    for (const auto& r : ds.records) expect.insert(r.features[0] * 1000 + r.label);
    CHECK(seen == expect);

    Dataset four = synth_dataset(4, 9);
    TrainTestSplit s4 = train_test_split(four, 1);
    CHECK(s4.train.size() == 3);
    CHECK(s4.test.size() == 1);

    Dataset two = synth_dataset(2, 9);
    TrainTestSplit s2 = train_test_split(two, 1);
    CHECK(s2.train.size() == 1); // never empty
    CHECK(s2.test.size() == 1);

    Dataset empty;
    CHECK_THROWS_AS(train_test_split(empty, 1), DataError);
}

TEST_CASE("synthetic corpus contract") {
    auto urls = synth_urls(101, 13);
    REQUIRE(urls.size() == 101);
    int phish = 0;
    for (const auto& [url, label] : urls) {
        CHECK(url.rfind("http://", 0) == 0);
        phish += label;
        // generator never emits accidental redirections
        CHECK(extract_features(url)[feature_index("count_redirection")] == 0.0);
    }
    CHECK(phish == 50); // odd count: extra record goes to the legitimate class

    auto again = synth_urls(101, 13);
    CHECK(urls == again);
    CHECK(synth_urls(101, 14) != urls);

    Dataset ds = synth_dataset(101, 13);
    REQUIRE(ds.size() == 101);
    CHECK(ds.feature_names == canonical_feature_names());
    for (std::size_t i = 0; i < urls.size(); ++i) {
        CHECK(ds.records[i].features == extract_features(urls[i].first));
        CHECK(ds.records[i].label == urls[i].second);
    }

    CHECK_THROWS_AS(synth_urls(1, 1), ConfigError);
}

TEST_CASE("synthetic csv round-trips through the url loader") {
    const std::string path = "/tmp/fp_synth_roundtrip.csv";
    write_synth_csv(path, 60, 17);
    Dataset loaded = load_url_csv(path);
    Dataset direct = synth_dataset(60, 17);
    REQUIRE(loaded.size() == direct.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded.records[i].features == direct.records[i].features);
        CHECK(loaded.records[i].label == direct.records[i].label);
    }
    std::remove(path.c_str());
}

TEST_CASE("feature matrix and labels mirror the records") {
    Dataset ds = synth_dataset(12, 19);
    Tensor m = ds.feature_matrix();
    std::vector<int> labels = ds.labels();
    REQUIRE(m.rows() == 12);
    REQUIRE(m.cols() == ds.width());
    REQUIRE(labels.size() == 12);
    for (std::int64_t r = 0; r < 12; ++r) {
        for (std::int64_t c = 0; c < m.cols(); ++c)
            CHECK(m.at(r, c) ==
                  ds.records[static_cast<std::size_t>(r)].features[static_cast<std::size_t>(c)]);
        CHECK(labels[static_cast<std::size_t>(r)] == ds.records[static_cast<std::size_t>(r)].label);
    }
}
