#pragma once

#include "erank/data.hpp"
#include "erank/mcmc.hpp"
#include "erank/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace erank::test {

inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("erank_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// PosteriorDraws with hand-chosen theta draws (single chain); ranks are
// computed with 1 = largest, ties by index.
inline PosteriorDraws make_draws(const std::vector<std::vector<double>>& theta_draws,
                                 std::vector<std::string> labels = {}) {
    PosteriorDraws draws;
    draws.n_proposals = static_cast<int>(theta_draws.front().size());
    if (labels.empty())
        for (int i = 0; i < draws.n_proposals; ++i) labels.push_back("p" + std::to_string(i));
    draws.proposal_labels = labels;
    draws.converged = true;
    ChainDraws chain;
    chain.n_retained = static_cast<int>(theta_draws.size());
    for (std::size_t d = 0; d < theta_draws.size(); ++d) {
        chain.iteration.push_back(static_cast<std::int64_t>(d + 1));
        const auto& theta = theta_draws[d];
        chain.theta.insert(chain.theta.end(), theta.begin(), theta.end());
        std::vector<int> order(theta.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (theta[static_cast<std::size_t>(a)] != theta[static_cast<std::size_t>(b)])
                return theta[static_cast<std::size_t>(a)] > theta[static_cast<std::size_t>(b)];
            return a < b;
        });
        std::vector<std::int32_t> rank(theta.size());
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            rank[static_cast<std::size_t>(order[pos])] = static_cast<std::int32_t>(pos + 1);
        chain.rank.insert(chain.rank.end(), rank.begin(), rank.end());
    }
    draws.chains.push_back(std::move(chain));
    return draws;
}

// Small single-panel dataset generated from the continuous hierarchical model,
// rounded to the 1..K grid.
struct PanelSpec {
    int n_proposals = 12;
    int n_assessors = 8;
    double location = 3.8;
    double tau_theta = 0.5;
    double tau_lambda = 0.25;
    double nu_sd = 0.3;
    double sigma = 0.5;
    int n_levels = 6;
    double missing_prob = 0.0;
};

inline ScoreDataset generate_panel(const PanelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> theta(static_cast<std::size_t>(spec.n_proposals));
    for (double& t : theta) t = spec.tau_theta * rnorm(rng);
    std::vector<double> nu(static_cast<std::size_t>(spec.n_assessors));
    for (double& v : nu) v = spec.nu_sd * rnorm(rng);
    std::vector<ScoreRecord> records;
    for (int i = 0; i < spec.n_proposals; ++i) {
        for (int j = 0; j < spec.n_assessors; ++j) {
            if (spec.missing_prob > 0.0 && runif(rng) < spec.missing_prob) continue;
            const double lambda = nu[static_cast<std::size_t>(j)] + spec.tau_lambda * rnorm(rng);
            const double y = spec.location + theta[static_cast<std::size_t>(i)] + lambda +
                             spec.sigma * rnorm(rng);
            const double score =
                std::clamp(std::round(y), 1.0, static_cast<double>(spec.n_levels));
            records.push_back({"p" + std::to_string(i), "a" + std::to_string(j), "",
                               score});
        }
    }
    LoadOptions options;
    options.n_levels = spec.n_levels;
    return ScoreDataset::from_records(std::move(records), options);
}

}  // namespace erank::test
