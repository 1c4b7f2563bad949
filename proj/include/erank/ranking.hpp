#pragma once

#include "erank/data.hpp"
#include "erank/mcmc.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace erank {

// Rank-based posterior summaries for one fitted model. Rank 1 is the best
// (largest theta). rankogram[i][m-1] = Pr(proposal i occupies rank m).
struct RankingSummary {
    int n = 0;
    double cri_level = 0.5;
    std::vector<std::string> labels;
    std::vector<double> er;
    std::vector<double> pcer;
    std::vector<double> sucra;
    std::vector<int> cri_lower, cri_upper;
    std::vector<double> posterior_mean_theta;
    std::vector<int> mean_rank_position;  // 1-based position in the posterior-mean ordering
    std::vector<double> average_score;
    std::vector<std::vector<double>> rankogram;
    std::vector<std::vector<double>> cumulative;
    std::vector<int> tie_order;  // lexicographic label order, for deterministic ties
};

// ER_i: mean over retained draws of the rank of theta_i; equals
// 1 + sum_{k != i} Pr(theta_i <= theta_k) estimated by draw frequencies.
std::vector<double> expected_ranks(const PosteriorDraws& draws);

// Percentile scaling of an expected rank: 100 * (er - 0.5) / n.
double pcer(double er, int n);

std::vector<std::vector<double>> rankogram(const PosteriorDraws& draws);
std::vector<double> sucra(const std::vector<std::vector<double>>& rankogram);

// Equal-tailed interval on the discrete rank distribution with integer
// endpoints (nearest-rank order statistics).
std::vector<std::pair<int, int>> rank_credible_interval(const PosteriorDraws& draws,
                                                        double level = 0.5);

// Proposal indices sorted by posterior mean of theta, best first; ties broken
// by identifier.
std::vector<int> posterior_mean_ranking(const PosteriorDraws& draws);

// Pr(theta_i <= theta_k) for a Gaussian posterior with the given moments.
double analytic_pairwise_prob(double theta_hat_i, double theta_hat_k, double var_i, double var_k,
                              double cov_ik);

// var(R_i) from pairwise probabilities p[k] = Pr(theta_i <= theta_k) (p[i] = 1)
// and min_prob[k][l] = Pr(theta_i <= min(theta_k, theta_l)).
double analytic_rank_variance(std::span<const double> pairwise,
                              const std::vector<std::vector<double>>& min_prob);

// Pr(theta_i <= min(theta_k, theta_l)) for independent Gaussian posteriors,
// by numerical integration.
double min_prob_independent_gaussian(double mean_i, double var_i, double mean_k, double var_k,
                                     double mean_l, double var_l);

RankingSummary summarize_ranking(const PosteriorDraws& draws, const ScoreDataset& ds,
                                 double cri_level = 0.5);

// Summary CSV: one row per proposal with er, pcer, sucra, cri bounds,
// posterior mean theta and average score.
void write_summary_csv(const RankingSummary& summary, const std::filesystem::path& path);
RankingSummary read_summary_csv(const std::filesystem::path& path);

}  // namespace erank
