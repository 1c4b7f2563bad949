#include "erank/decision.hpp"

#include "erank/errors.hpp"
#include "erank/rng.hpp"
#include "erank/stats.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

using namespace erank;

namespace {

RankingSummary make_summary(const std::vector<double>& er,
                            const std::vector<std::pair<int, int>>& cri) {
    RankingSummary s;
    s.n = static_cast<int>(er.size());
    s.er = er;
    for (int i = 0; i < s.n; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "p%02d", i);
        s.labels.emplace_back(buf);
        s.cri_lower.push_back(cri[static_cast<std::size_t>(i)].first);
        s.cri_upper.push_back(cri[static_cast<std::size_t>(i)].second);
        s.pcer.push_back(0);
        s.sucra.push_back(0);
        s.posterior_mean_theta.push_back(0);
        s.average_score.push_back(0);
        s.tie_order.push_back(i);
    }
    return s;
}

// Geometry of the junior-fellowship Medicine panel: 14 proposals, budget 7,
// positions 6..9 hug the funding line.
RankingSummary medicine_like() {
    return make_summary(
        {1.3, 2.1, 3.0, 3.9, 4.8, 6.2, 6.9, 7.4, 7.9, 10.5, 11.4, 12.2, 13.0, 13.8},
        {{1, 2}, {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 9}, {5, 10}, {6, 9}, {6, 10},
         {8, 12}, {9, 13}, {10, 14}, {11, 14}, {12, 14}});
}

}  // namespace

TEST_CASE("funding line selection") {
    const auto s = make_summary({1.2, 2.5, 2.6}, {{1, 2}, {1, 3}, {2, 3}});
    CHECK(provisional_funding_line(s, 2) == doctest::Approx(2.5));
    CHECK(provisional_funding_line(s, 3) == doctest::Approx(2.6));  // x = n -> worst ER
    CHECK_THROWS_AS(provisional_funding_line(s, 0), ValidationError);
    CHECK_THROWS_AS(provisional_funding_line(s, 4), ValidationError);
}

TEST_CASE("medicine-like panel: five funded, lottery of four for two slots") {
    const auto s = medicine_like();
    const int budget = 7;
    const double fl = provisional_funding_line(s, budget);
    CHECK(fl == doctest::Approx(6.9));
    const FundingDecision d = partition(s, fl, budget);
    CHECK(d.lottery_held);
    CHECK(d.funded.size() == 5);
    CHECK(d.lottery_group == std::vector<int>{5, 6, 7, 8});  // ranked sixth to ninth
    CHECK(d.rejected.size() == 5);
    const FundingDecision full = decide(s, budget, 99);
    CHECK(full.lottery_winners.size() == 2);
    CHECK(full.funded.size() + full.lottery_winners.size() == 7);
}

TEST_CASE("no lottery when every overlap sits inside the funded set") {
    // Only the budget-th proposal's own interval touches the line.
    const auto s = make_summary({1.0, 2.0, 3.0, 4.0, 9.0, 10.0},
                                {{1, 1}, {2, 2}, {3, 3}, {3, 4}, {5, 6}, {5, 6}});
    const int budget = 4;
    const double fl = provisional_funding_line(s, budget);
    CHECK(fl == doctest::Approx(4.0));
    const FundingDecision d = partition(s, fl, budget);
    CHECK_FALSE(d.lottery_held);
    CHECK(d.funded.size() == 4);
    CHECK(d.lottery_group.empty());
    CHECK(d.rejected.size() == 2);
}

TEST_CASE("lottery draw boundaries and determinism") {
    const std::vector<int> group{10, 11, 12, 13};
    CHECK(lottery_draw(group, 4, 7).size() == 4);
    CHECK(lottery_draw(group, 0, 7).empty());
    CHECK_THROWS_AS(lottery_draw(group, 5, 7), ValidationError);
    const auto a = lottery_draw(group, 2, 1234);
    const auto b = lottery_draw(group, 2, 1234);
    CHECK(a == b);
    const auto winners = lottery_draw(group, 2, 1);
    for (int w : winners) CHECK(std::count(group.begin(), group.end(), w) == 1);
}

TEST_CASE("lottery win frequencies are uniform") {
    const std::vector<int> group{0, 1, 2, 3};
    const int trials = 100000;
    std::map<int, int> wins;
    for (int t = 0; t < trials; ++t)
        for (int w : lottery_draw(group, 2, derive_seed(5150, t))) ++wins[w];
    for (const auto& [who, count] : wins) {
        const double p = 0.5;
        const double se = std::sqrt(p * (1 - p) * trials);
        CHECK(std::abs(count - trials * p) <= 3 * se);
    }
}

TEST_CASE("total funded equals min(budget, n) over random summaries") {
    Rng rng(2718);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = runif_int(rng, 1, 25);
        std::vector<double> er;
        std::vector<std::pair<int, int>> cri;
        for (int i = 0; i < n; ++i) {
            er.push_back(runif(rng, 1.0, n));
            const int lo = runif_int(rng, 1, n);
            cri.emplace_back(lo, runif_int(rng, lo, n));
        }
        const auto s = make_summary(er, cri);
        const int budget = runif_int(rng, 1, n);
        const FundingDecision d = decide(s, budget, derive_seed(1, trial));
        CHECK(static_cast<int>(d.funded.size() + d.lottery_winners.size()) == budget);
        CHECK(d.funded.size() + d.lottery_group.size() + d.rejected.size() ==
              static_cast<std::size_t>(n));
        // every funded proposal beats every rejected one on ER
        for (int f : d.funded)
            for (int r : d.rejected)
                CHECK(s.er[static_cast<std::size_t>(f)] <=
                      s.er[static_cast<std::size_t>(r)]);
    }
}

TEST_CASE("raising the budget never demotes a funded-outright proposal to rejected") {
    Rng rng(31415);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = runif_int(rng, 3, 20);
        std::vector<double> er;
        std::vector<std::pair<int, int>> cri;
        for (int i = 0; i < n; ++i) {
            er.push_back(runif(rng, 1.0, n));
            const int lo = runif_int(rng, 1, n);
            cri.emplace_back(lo, runif_int(rng, lo, n));
        }
        const auto s = make_summary(er, cri);
        const int x1 = runif_int(rng, 1, n - 1);
        const int x2 = runif_int(rng, x1 + 1, n);
        const FundingDecision d1 = decide(s, x1, 7);
        const FundingDecision d2 = decide(s, x2, 7);
        const std::set<int> rejected2(d2.rejected.begin(), d2.rejected.end());
        for (int f : d1.funded) CHECK(rejected2.count(f) == 0);
    }
}

TEST_CASE("decision artifacts carry the group labels") {
    const auto s = medicine_like();
    const FundingDecision d = decide(s, 7, 42);
    const auto dir = test::temp_dir("decision");
    write_decision_csv(s, d, dir / "decision.csv");
    write_decision_json(s, d, dir / "decision.json");
    CHECK(std::filesystem::exists(dir / "decision.csv"));
    CHECK(std::filesystem::exists(dir / "decision.json"));
    int won = 0, lost = 0;
    for (int g : d.lottery_group) {
        const std::string label = group_of(d, g);
        if (label == "lottery_won") ++won;
        if (label == "lottery_lost") ++lost;
    }
    CHECK(won == 2);
    CHECK(lost == 2);
}
