#include "erank/ranking.hpp"

#include "erank/errors.hpp"
#include "erank/rng.hpp"
#include "erank/stats.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cmath>
#include <numeric>

using namespace erank;

TEST_CASE("expected rank of a single proposal is 1") {
    const auto draws = test::make_draws({{0.2}, {0.4}, {-1.0}});
    const auto er = expected_ranks(draws);
    CHECK(er[0] == doctest::Approx(1.0));
    CHECK(sucra(rankogram(draws))[0] == doctest::Approx(1.0));
}

TEST_CASE("perfectly symmetric pair has ER 1.5 each") {
    const auto draws = test::make_draws({{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}});
    const auto er = expected_ranks(draws);
    CHECK(er[0] == doctest::Approx(1.5));
    CHECK(er[1] == doctest::Approx(1.5));
}

TEST_CASE("ER equals the hand-computed mean of per-draw ranks") {
    // draws (theta):      ranks (1 = largest)
    //  (0.1, 0.5, 0.3) -> (3, 1, 2)
    //  (0.9, 0.2, 0.4) -> (1, 3, 2)
    //  (0.2, 0.8, 0.6) -> (3, 1, 2)
    //  (0.5, 0.1, 0.9) -> (2, 3, 1)
    const auto draws = test::make_draws(
        {{0.1, 0.5, 0.3}, {0.9, 0.2, 0.4}, {0.2, 0.8, 0.6}, {0.5, 0.1, 0.9}});
    const auto er = expected_ranks(draws);
    CHECK(er[0] == doctest::Approx((3 + 1 + 3 + 2) / 4.0));
    CHECK(er[1] == doctest::Approx((1 + 3 + 1 + 3) / 4.0));
    CHECK(er[2] == doctest::Approx((2 + 2 + 2 + 1) / 4.0));
}

TEST_CASE("pcer arithmetic") {
    CHECK(pcer(1.0, 100) == doctest::Approx(0.5));
    for (int n : {3, 10, 57}) CHECK(pcer((n + 1) / 2.0, n) == doctest::Approx(50.0));
    CHECK(pcer(10.0, 10) == doctest::Approx(95.0));
}

TEST_CASE("sucra boundaries") {
    // proposal 0 always first, proposal 2 always last
    const auto draws = test::make_draws({{3.0, 2.0, 1.0}, {5.0, 4.0, 3.0}, {9.0, 8.0, 7.0}});
    const auto s = sucra(rankogram(draws));
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[2] == doctest::Approx(0.0));
}

TEST_CASE("ER and SUCRA satisfy the linear identity on random draws") {
    Rng rng(2024);
    for (int n : {2, 3, 17, 60}) {
        std::vector<std::vector<double>> theta_draws;
        for (int d = 0; d < 400; ++d) {
            std::vector<double> theta(static_cast<std::size_t>(n));
            for (double& t : theta) t = rnorm(rng);
            theta_draws.push_back(std::move(theta));
        }
        const auto draws = test::make_draws(theta_draws);
        const auto er = expected_ranks(draws);
        const auto s = sucra(rankogram(draws));
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(er[static_cast<std::size_t>(i)] -
                           (n - (n - 1) * s[static_cast<std::size_t>(i)])) < 1e-10);
        // conservation: ranks are permutations draw by draw
        CHECK(std::accumulate(er.begin(), er.end(), 0.0) ==
              doctest::Approx(n * (n + 1) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("rankogram rows are distributions with nondecreasing cumulative") {
    Rng rng(7);
    std::vector<std::vector<double>> theta_draws;
    for (int d = 0; d < 200; ++d) {
        std::vector<double> theta(5);
        for (double& t : theta) t = rnorm(rng);
        theta_draws.push_back(std::move(theta));
    }
    const auto draws = test::make_draws(theta_draws);
    const auto probs = rankogram(draws);
    for (const auto& row : probs) {
        CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
        for (double p : row) CHECK(p >= 0.0);
    }
}

TEST_CASE("rank credible intervals: point mass and enumerated uniform") {
    {
        // always rank 3 of 4
        const auto draws = test::make_draws(
            {{4, 3, 2, 1}, {4, 3, 2, 1}, {4, 3, 2, 1}, {4, 3, 2, 1}});
        const auto cri = rank_credible_interval(draws, 0.5);
        CHECK(cri[2].first == 3);
        CHECK(cri[2].second == 3);
    }
    {
        // proposal 0 cycles through every rank of 1..4 uniformly
        std::vector<std::vector<double>> theta_draws;
        for (int d = 0; d < 4; ++d) {
            std::vector<double> theta{0.0, 0.0, 0.0, 0.0};
            // place proposal 0 at rank d+1
            theta[0] = 4.0 - d;
            double fill = 10.0;
            for (int k = 1; k < 4; ++k) theta[static_cast<std::size_t>(k)] = (k <= d) ? fill-- : -fill--;
            theta_draws.push_back(theta);
        }
        const auto draws = test::make_draws(theta_draws);
        const auto cri = rank_credible_interval(draws, 0.5);
        CHECK(cri[0].first == 2);
        CHECK(cri[0].second == 3);
        const auto wide = rank_credible_interval(draws, 0.9);
        CHECK(wide[0].first <= cri[0].first);
        CHECK(wide[0].second >= cri[0].second);
    }
}

TEST_CASE("quantile nesting holds on random draws") {
    Rng rng(99);
    std::vector<std::vector<double>> theta_draws;
    for (int d = 0; d < 500; ++d) {
        std::vector<double> theta(6);
        for (double& t : theta) t = rnorm(rng);
        theta_draws.push_back(std::move(theta));
    }
    const auto draws = test::make_draws(theta_draws);
    const auto inner = rank_credible_interval(draws, 0.5);
    const auto outer = rank_credible_interval(draws, 0.9);
    for (std::size_t i = 0; i < inner.size(); ++i) {
        CHECK(outer[i].first <= inner[i].first);
        CHECK(outer[i].second >= inner[i].second);
    }
}

TEST_CASE("posterior mean ranking sorts means and breaks ties by identifier") {
    {
        const auto draws = test::make_draws({{0.4, -0.1, 0.9}});
        const auto order = posterior_mean_ranking(draws);
        CHECK(order == std::vector<int>{2, 0, 1});
    }
    {
        const auto draws = test::make_draws({{0.5, 0.5, 0.5}}, {"c", "a", "b"});
        const auto order = posterior_mean_ranking(draws);
        CHECK(order == std::vector<int>{1, 2, 0});  // a, b, c
    }
}

TEST_CASE("analytic pairwise probability basics") {
    CHECK(analytic_pairwise_prob(1.0, 1.0, 0.3, 0.4, 0.0) == doctest::Approx(0.5));
    CHECK(analytic_pairwise_prob(0.0, 10.0, 1e-4, 1e-4, 0.0) == doctest::Approx(1.0));
    const double p = analytic_pairwise_prob(0.3, 0.9, 0.5, 0.7, 0.1);
    const double q = analytic_pairwise_prob(0.9, 0.3, 0.7, 0.5, 0.1);
    CHECK(p + q == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(analytic_pairwise_prob(0.0, 1.0, 0.5, 0.5, 0.5), ValidationError);
}

TEST_CASE("analytic pairwise probability matches direct simulation") {
    const double mi = 0.1, mk = 0.35, vi = 0.20, vk = 0.10;
    const double analytic = analytic_pairwise_prob(mi, mk, vi, vk, 0.0);
    Rng rng(314);
    const int n = 1000000;
    int hits = 0;
    for (int s = 0; s < n; ++s)
        if (mi + std::sqrt(vi) * rnorm(rng) <= mk + std::sqrt(vk) * rnorm(rng)) ++hits;
    const double freq = double(hits) / n;
    const double se = std::sqrt(analytic * (1 - analytic) / n);
    CHECK(std::abs(freq - analytic) <= 3 * se);
}

TEST_CASE("analytic rank variance: degenerate cases") {
    // single proposal
    std::vector<double> p{1.0};
    CHECK(analytic_rank_variance(p, {{1.0}}) == doctest::Approx(0.0));
    // perfect separation: proposal 0 always best of three
    std::vector<double> sep{1.0, 0.0, 0.0};
    std::vector<std::vector<double>> minp{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    CHECK(analytic_rank_variance(sep, minp) == doctest::Approx(0.0));
}

TEST_CASE("analytic rank variance matches simulation for independent posteriors") {
    const std::vector<double> means{0.0, 0.25, 0.6};
    const std::vector<double> vars{0.30, 0.20, 0.40};
    const int i = 0;
    std::vector<double> p(3);
    std::vector<std::vector<double>> minp(3, std::vector<double>(3, 0.0));
    for (int k = 0; k < 3; ++k)
        p[static_cast<std::size_t>(k)] =
            k == i ? 1.0
                   : analytic_pairwise_prob(means[0], means[static_cast<std::size_t>(k)],
                                            vars[0], vars[static_cast<std::size_t>(k)], 0.0);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
            if (k == i) {
                minp[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
                    p[static_cast<std::size_t>(l)];
            } else if (l == i) {
                minp[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
                    p[static_cast<std::size_t>(k)];
            } else if (k == l) {
                minp[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
                    p[static_cast<std::size_t>(k)];
            } else {
                minp[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
                    min_prob_independent_gaussian(means[0], vars[0],
                                                  means[static_cast<std::size_t>(k)],
                                                  vars[static_cast<std::size_t>(k)],
                                                  means[static_cast<std::size_t>(l)],
                                                  vars[static_cast<std::size_t>(l)]);
            }
        }
    const double analytic = analytic_rank_variance(p, minp);

    Rng rng(1234);
    const int n = 1000000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < n; ++s) {
        const double ti = means[0] + std::sqrt(vars[0]) * rnorm(rng);
        const double tk = means[1] + std::sqrt(vars[1]) * rnorm(rng);
        const double tl = means[2] + std::sqrt(vars[2]) * rnorm(rng);
        const double rank = 1.0 + (ti <= tk) + (ti <= tl);
        sum += rank;
        sumsq += rank * rank;
    }
    const double empirical = sumsq / n - (sum / n) * (sum / n);
    CHECK(std::abs(analytic - empirical) / empirical < 0.02);
}

TEST_CASE("strict per-draw dominance orders ER, SUCRA and CrIs") {
    Rng rng(55);
    std::vector<std::vector<double>> theta_draws;
    for (int d = 0; d < 300; ++d) {
        const double a = 2.0 + rnorm(rng) * 0.3;
        theta_draws.push_back({a, a - 1.0 - 0.2 * runif(rng), rnorm(rng) * 0.1 - 3.0});
    }
    const auto draws = test::make_draws(theta_draws);
    const auto er = expected_ranks(draws);
    const auto s = sucra(rankogram(draws));
    const auto cri = rank_credible_interval(draws, 0.5);
    CHECK(er[0] < er[1]);
    CHECK(s[0] > s[1]);
    CHECK(cri[0].second <= cri[1].second);
    CHECK(cri[0].first <= cri[1].first);
}

TEST_CASE("summary csv round trip") {
    const ScoreDataset ds = test::generate_panel({}, 3);
    Rng rng(8);
    std::vector<std::vector<double>> theta_draws;
    for (int d = 0; d < 50; ++d) {
        std::vector<double> theta(static_cast<std::size_t>(ds.n_proposals()));
        for (double& t : theta) t = rnorm(rng);
        theta_draws.push_back(std::move(theta));
    }
    auto draws = test::make_draws(theta_draws, ds.proposal_labels());
    const RankingSummary summary = summarize_ranking(draws, ds, 0.5);
    const auto dir = test::temp_dir("ranking_csv");
    write_summary_csv(summary, dir / "summary.csv");
    const RankingSummary back = read_summary_csv(dir / "summary.csv");
    REQUIRE(back.n == summary.n);
    for (int i = 0; i < summary.n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        CHECK(back.labels[u] == summary.labels[u]);
        CHECK(back.er[u] == doctest::Approx(summary.er[u]).epsilon(1e-9));
        CHECK(back.cri_lower[u] == summary.cri_lower[u]);
        CHECK(back.cri_upper[u] == summary.cri_upper[u]);
    }
}
