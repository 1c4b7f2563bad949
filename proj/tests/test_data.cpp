#include "erank/data.hpp"

#include "erank/errors.hpp"
#include "erank/rng.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cmath>
#include <filesystem>

using namespace erank;

TEST_CASE("load_scores parses a small csv and computes the grand mean") {
    const auto dir = test::temp_dir("data");
    const auto path = dir / "scores.csv";
    test::write_file(path,
                     "proposal,assessor,score\n"
                     "p1,a1,4\np1,a2,5\np2,a1,3\np2,a2,3\n");
    const ScoreDataset ds = load_scores(path);
    CHECK(ds.n_proposals() == 2);
    CHECK(ds.n_assessors() == 2);
    CHECK(ds.grand_mean() == doctest::Approx(3.75));
    CHECK(grand_mean(ds) == doctest::Approx(3.75));
    CHECK(ds.n_panels() == 0);
    CHECK_FALSE(ds.has_panels());
}

TEST_CASE("score outside 1..K is rejected") {
    const auto dir = test::temp_dir("data_bounds");
    const auto path = dir / "bad.csv";
    test::write_file(path, "proposal,assessor,score\np1,a1,7\n");
    CHECK_THROWS_AS(load_scores(path), ValidationError);
}

TEST_CASE("duplicate (proposal, assessor) pair is rejected and named") {
    std::vector<ScoreRecord> records{{"p1", "a1", "", 4}, {"p1", "a1", "", 5}};
    try {
        ScoreDataset::from_records(records);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("p1") != std::string::npos);
        CHECK(msg.find("a1") != std::string::npos);
    }
}

TEST_CASE("empty inputs are rejected") {
    CHECK_THROWS_AS(ScoreDataset::from_records({}), ValidationError);
    const auto dir = test::temp_dir("data_empty");
    const auto path = dir / "empty.csv";
    test::write_file(path, "proposal,assessor,score\n");
    CHECK_THROWS_AS(load_scores(path), ValidationError);
    CHECK_THROWS_AS(load_scores(dir / "missing.csv"), IoError);
}

TEST_CASE("panel column must be all-or-none") {
    std::vector<ScoreRecord> records{{"p1", "a1", "stem", 4}, {"p2", "a1", "", 3}};
    CHECK_THROWS_AS(ScoreDataset::from_records(records), ValidationError);
}

TEST_CASE("non-integer scores need the real-score mode") {
    std::vector<ScoreRecord> records{{"p1", "a1", "", 4.5}, {"p2", "a1", "", 3}};
    CHECK_THROWS_AS(ScoreDataset::from_records(records), ValidationError);
    LoadOptions options;
    options.allow_real_scores = true;
    const ScoreDataset ds = ScoreDataset::from_records(records, options);
    CHECK_FALSE(ds.integer_scores());
}

TEST_CASE("grand mean on constant and two-point data") {
    std::vector<ScoreRecord> all4{{"p1", "a1", "", 4}, {"p2", "a1", "", 4}};
    CHECK(grand_mean(ScoreDataset::from_records(all4)) == doctest::Approx(4.0));
    std::vector<ScoreRecord> two{{"p1", "a1", "", 1}, {"p2", "a1", "", 6}};
    CHECK(grand_mean(ScoreDataset::from_records(two)) == doctest::Approx(3.5));
}

TEST_CASE("grand mean matches a naive single-pass oracle on random data") {
    Rng rng(42);
    std::vector<ScoreRecord> records;
    double oracle_sum = 0.0;
    int oracle_count = 0;
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 10; ++j) {
            if (runif(rng) < 0.15) continue;  // conflicts of interest
            const int score = runif_int(rng, 1, 6);
            records.push_back(
                {"p" + std::to_string(i), "a" + std::to_string(j), "", double(score)});
            oracle_sum += score;
            ++oracle_count;
        }
    }
    const ScoreDataset ds = ScoreDataset::from_records(records);
    CHECK(ds.grand_mean() == doctest::Approx(oracle_sum / oracle_count).epsilon(1e-12));
    CHECK(ds.grand_mean() >= 1.0);
    CHECK(ds.grand_mean() <= 6.0);
}

TEST_CASE("load -> serialize -> load is the identity on records") {
    const auto dir = test::temp_dir("data_roundtrip");
    const auto path = dir / "in.csv";
    test::write_file(path,
                     "proposal,assessor,panel,score\n"
                     "p1,a1,med,4\np1,a2,med,5\np2,a1,stem,3\np2,a3,stem,6\n");
    const ScoreDataset first = load_scores(path);
    const auto out = dir / "out.csv";
    write_scores(first, out);
    const ScoreDataset second = load_scores(out);
    REQUIRE(first.n_observations() == second.n_observations());
    const auto a = first.to_records();
    const auto b = second.to_records();
    for (std::size_t r = 0; r < a.size(); ++r) {
        CHECK(a[r].proposal == b[r].proposal);
        CHECK(a[r].assessor == b[r].assessor);
        CHECK(a[r].panel == b[r].panel);
        CHECK(a[r].score == b[r].score);
    }
    CHECK(second.has_panels());
    CHECK(second.n_panels() == 2);
}

TEST_CASE("panel subset re-indexes and drops the panel column") {
    std::vector<ScoreRecord> records{{"p1", "a1", "med", 4},
                                     {"p2", "a1", "med", 5},
                                     {"p3", "a2", "stem", 2},
                                     {"p4", "a2", "stem", 6}};
    const ScoreDataset ds = ScoreDataset::from_records(records);
    REQUIRE(ds.n_panels() == 2);
    const ScoreDataset stem = ds.panel_subset(1);
    CHECK(stem.n_proposals() == 2);
    CHECK(stem.n_assessors() == 1);
    CHECK_FALSE(stem.has_panels());
    CHECK(stem.grand_mean() == doctest::Approx(4.0));
}

TEST_CASE("per-proposal means and index tables are consistent") {
    const ScoreDataset ds = test::generate_panel({}, 7);
    for (int i = 0; i < ds.n_proposals(); ++i) {
        double sum = 0.0;
        for (int c : ds.obs_of_proposal(i))
            sum += ds.observations()[static_cast<std::size_t>(c)].score;
        CHECK(ds.proposal_mean(i) ==
              doctest::Approx(sum / ds.proposal_count(i)).epsilon(1e-12));
    }
}
