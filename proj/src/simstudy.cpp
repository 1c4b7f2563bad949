#include "erank/simstudy.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"
#include "erank/mcmc.hpp"
#include "erank/ranking.hpp"
#include "erank/rng.hpp"
#include "erank/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

namespace erank {

void validate(const SimScenario& scenario) {
    if (scenario.n_proposals < 2 || scenario.n_assessors < 1 || scenario.n_replications < 1)
        throw ValidationError("scenario sizes must be positive");
    if (!std::is_sorted(scenario.cutoffs.begin(), scenario.cutoffs.end()) ||
        std::adjacent_find(scenario.cutoffs.begin(), scenario.cutoffs.end()) !=
            scenario.cutoffs.end())
        throw ValidationError("cutoffs must be strictly increasing");
    if (scenario.cutoffs.empty()) throw ValidationError("at least one cutoff is required");
    if (scenario.missing_lo < 0 || scenario.missing_hi < scenario.missing_lo)
        throw ValidationError("bad missing-count range");
    const int cells = scenario.n_proposals * scenario.n_assessors;
    if (scenario.missing_hi > cells - std::max(scenario.n_proposals, scenario.n_assessors))
        throw ValidationError("missing-count range leaves no room for a complete row/column");
}

SimReplicate simulate_replicate(const SimScenario& scenario, std::uint64_t seed) {
    validate(scenario);
    Rng rng(seed);
    const int I = scenario.n_proposals;
    const int J = scenario.n_assessors;
    const int K = static_cast<int>(scenario.cutoffs.size()) + 1;

    std::vector<double> alpha(static_cast<std::size_t>(J));
    for (double& a : alpha) a = runif(rng, scenario.alpha_lo, scenario.alpha_hi);
    std::vector<double> sigma(static_cast<std::size_t>(J));
    for (int j = 0; j < J - 1; ++j)
        sigma[static_cast<std::size_t>(j)] = runif(rng, scenario.sigma_lo, scenario.sigma_hi);
    sigma[static_cast<std::size_t>(J - 1)] = scenario.sigma_last;

    SimReplicate rep;
    rep.n_proposals = I;
    rep.n_assessors = J;
    rep.theta_true.resize(static_cast<std::size_t>(I));
    for (double& t : rep.theta_true) t = scenario.tau_theta_true * rnorm(rng);

    rep.latent.resize(static_cast<std::size_t>(I) * static_cast<std::size_t>(J));
    rep.score.resize(rep.latent.size());
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
            const double s = sigma[static_cast<std::size_t>(j)];
            const double spread = scenario.corrected_variance ? s : s * s;
            const double x =
                rnorm(rng, alpha[static_cast<std::size_t>(j)] +
                               rep.theta_true[static_cast<std::size_t>(i)],
                      spread);
            int y = 1;
            for (double cut : scenario.cutoffs)
                if (x > cut) ++y;
            const auto cell = static_cast<std::size_t>(i) * static_cast<std::size_t>(J) +
                              static_cast<std::size_t>(j);
            rep.latent[cell] = x;
            rep.score[cell] = std::min(y, K);
        }
    }

    // Blank M cells, resampling the pattern until no row or column is empty.
    const int M = runif_int(rng, scenario.missing_lo, scenario.missing_hi);
    auto masked = rep.score;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        masked = rep.score;
        for (int cell : sample_index_subset(rng, I * J, M))
            masked[static_cast<std::size_t>(cell)] = 0;
        std::vector<int> row_obs(static_cast<std::size_t>(I), 0);
        std::vector<int> col_obs(static_cast<std::size_t>(J), 0);
        for (int i = 0; i < I; ++i)
            for (int j = 0; j < J; ++j)
                if (masked[static_cast<std::size_t>(i) * static_cast<std::size_t>(J) +
                           static_cast<std::size_t>(j)] > 0) {
                    ++row_obs[static_cast<std::size_t>(i)];
                    ++col_obs[static_cast<std::size_t>(j)];
                }
        if (*std::min_element(row_obs.begin(), row_obs.end()) > 0 &&
            *std::min_element(col_obs.begin(), col_obs.end()) > 0)
            break;
    }
    rep.score = std::move(masked);
    rep.rank_true = true_ranks(rep.theta_true);
    return rep;
}

std::vector<int> true_ranks(std::span<const double> theta) {
    const int n = static_cast<int>(theta.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (theta[static_cast<std::size_t>(a)] != theta[static_cast<std::size_t>(b)])
            return theta[static_cast<std::size_t>(a)] > theta[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::vector<int> out(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos)
        out[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos + 1;
    return out;
}

std::vector<double> mid_ranks_desc(std::span<const double> values) {
    const int n = static_cast<int>(values.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
    });
    std::vector<double> out(static_cast<std::size_t>(n));
    int pos = 0;
    while (pos < n) {
        int end = pos;
        while (end + 1 < n &&
               values[static_cast<std::size_t>(order[static_cast<std::size_t>(end + 1)])] ==
                   values[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])])
            ++end;
        const double shared = 0.5 * static_cast<double>(pos + 1 + end + 1);
        for (int p = pos; p <= end; ++p)
            out[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = shared;
        pos = end + 1;
    }
    return out;
}

std::vector<double> average_ranks(const SimReplicate& replicate) {
    const int I = replicate.n_proposals;
    const int J = replicate.n_assessors;
    std::vector<double> avg(static_cast<std::size_t>(I), 0.0);
    for (int i = 0; i < I; ++i) {
        double sum = 0.0;
        int count = 0;
        for (int j = 0; j < J; ++j) {
            const int y = replicate.score_at(i, j);
            if (y > 0) {
                sum += y;
                ++count;
            }
        }
        avg[static_cast<std::size_t>(i)] = count > 0 ? sum / count : 0.0;
    }
    return mid_ranks_desc(avg);
}

double mse(std::span<const double> rank_true, std::span<const double> rank_est) {
    if (rank_true.size() != rank_est.size())
        throw ValidationError("mse: rank vectors differ in length");
    double sum = 0.0;
    for (std::size_t i = 0; i < rank_true.size(); ++i) {
        const double d = rank_true[i] - rank_est[i];
        sum += d * d;
    }
    return sum / static_cast<double>(rank_true.size());
}

double monte_carlo_se(std::span<const double> per_replicate_mse) {
    const auto n = static_cast<double>(per_replicate_mse.size());
    if (per_replicate_mse.size() < 2) return 0.0;
    const double m = mean(per_replicate_mse);
    double ss = 0.0;
    for (double e : per_replicate_mse) ss += (e - m) * (e - m);
    return std::sqrt(ss / (n * (n - 1.0)));
}

std::string to_string(RankMethod method) {
    switch (method) {
        case RankMethod::average: return "average";
        case RankMethod::br_normal_homogeneous: return "br-normal-homogeneous";
        case RankMethod::br_ordinal_homogeneous: return "br-ordinal-homogeneous";
        case RankMethod::br_normal_heterogeneous: return "br-normal-heterogeneous";
        case RankMethod::br_ordinal_heterogeneous: return "br-ordinal-heterogeneous";
    }
    return "unknown";
}

std::vector<RankMethod> all_rank_methods() {
    return {RankMethod::average, RankMethod::br_normal_homogeneous,
            RankMethod::br_ordinal_homogeneous, RankMethod::br_normal_heterogeneous,
            RankMethod::br_ordinal_heterogeneous};
}

McmcConfig StudyOptions::study_mcmc_defaults() {
    McmcConfig cfg;
    cfg.max_total_iter = cfg.n_adapt + cfg.n_iter;
    return cfg;
}

ScoreDataset replicate_to_dataset(const SimReplicate& replicate) {
    std::vector<ScoreRecord> records;
    char label[16];
    for (int i = 0; i < replicate.n_proposals; ++i) {
        for (int j = 0; j < replicate.n_assessors; ++j) {
            const int y = replicate.score_at(i, j);
            if (y == 0) continue;
            ScoreRecord rec;
            std::snprintf(label, sizeof(label), "p%03d", i);
            rec.proposal = label;
            std::snprintf(label, sizeof(label), "a%03d", j);
            rec.assessor = label;
            rec.score = y;
            records.push_back(std::move(rec));
        }
    }
    return ScoreDataset::from_records(std::move(records));
}

namespace {

ModelConfig model_for(RankMethod method, int levels) {
    ModelConfig cfg;
    cfg.n_levels = levels;
    switch (method) {
        case RankMethod::br_normal_homogeneous: break;
        case RankMethod::br_ordinal_homogeneous: cfg.outcome = Outcome::ordinal; break;
        case RankMethod::br_normal_heterogeneous: cfg.residuals = Residuals::heterogeneous; break;
        case RankMethod::br_ordinal_heterogeneous:
            cfg.outcome = Outcome::ordinal;
            cfg.residuals = Residuals::heterogeneous;
            break;
        case RankMethod::average: break;
    }
    return cfg;
}

}  // namespace

StudyResult compare_methods(const SimScenario& scenario, const StudyOptions& options,
                            std::uint64_t master_seed) {
    validate(scenario);
    validate(options.mcmc);
    validate(options.prior);
    if (options.methods.empty()) throw ValidationError("no ranking methods selected");

    const int n_methods = static_cast<int>(options.methods.size());
    const int N = scenario.n_replications;
    StudyResult result;
    result.per_replicate_mse.assign(static_cast<std::size_t>(n_methods),
                                    std::vector<double>(static_cast<std::size_t>(N), 0.0));
    std::vector<std::vector<int>> nonconverged(static_cast<std::size_t>(n_methods),
                                               std::vector<int>(static_cast<std::size_t>(N), 0));

    std::atomic<int> next_rep{0};
    auto worker = [&]() {
        for (;;) {
            const int rep = next_rep.fetch_add(1);
            if (rep >= N) return;
            const SimReplicate replicate = simulate_replicate(
                scenario, derive_seed(master_seed, static_cast<std::uint64_t>(rep)));
            std::vector<double> rank_true(replicate.rank_true.begin(), replicate.rank_true.end());
            std::optional<ScoreDataset> ds;
            for (int mi = 0; mi < n_methods; ++mi) {
                const RankMethod method = options.methods[static_cast<std::size_t>(mi)];
                std::vector<double> rank_est;
                if (method == RankMethod::average) {
                    rank_est = average_ranks(replicate);
                } else {
                    if (!ds) ds = replicate_to_dataset(replicate);
                    McmcConfig mcmc = options.mcmc;
                    mcmc.master_seed = derive_seed(
                        master_seed, 0x5150000ULL + static_cast<std::uint64_t>(rep) * 16ULL +
                                         static_cast<std::uint64_t>(mi));
                    const PosteriorDraws draws = run_sampler(
                        *ds, model_for(method, options.ordinal_levels), options.prior, mcmc,
                        /*n_threads=*/1);
                    if (!draws.converged)
                        nonconverged[static_cast<std::size_t>(mi)][static_cast<std::size_t>(rep)] =
                            1;
                    rank_est = mid_ranks_desc([&] {
                        // ER ascending = quality descending; negate so the best
                        // proposal gets rank 1.
                        std::vector<double> neg = expected_ranks(draws);
                        for (double& e : neg) e = -e;
                        return neg;
                    }());
                }
                result.per_replicate_mse[static_cast<std::size_t>(mi)]
                                        [static_cast<std::size_t>(rep)] =
                    mse(rank_true, rank_est);
            }
        }
    };

    int threads = options.n_threads > 0
                      ? options.n_threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, N);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (int mi = 0; mi < n_methods; ++mi) {
        MethodResult row;
        row.method = options.methods[static_cast<std::size_t>(mi)];
        row.mse = mean(result.per_replicate_mse[static_cast<std::size_t>(mi)]);
        row.monte_carlo_se = monte_carlo_se(result.per_replicate_mse[static_cast<std::size_t>(mi)]);
        row.n_replications = N;
        row.n_nonconverged = std::accumulate(nonconverged[static_cast<std::size_t>(mi)].begin(),
                                             nonconverged[static_cast<std::size_t>(mi)].end(), 0);
        result.methods.push_back(row);
    }
    return result;
}

void write_study_csv(const StudyResult& result, const std::filesystem::path& path) {
    Table table;
    table.header = {"method", "mse", "monte_carlo_se", "replicates", "non_converged"};
    for (const auto& row : result.methods)
        table.rows.push_back({to_string(row.method), fmt_double(row.mse),
                              fmt_double(row.monte_carlo_se), std::to_string(row.n_replications),
                              std::to_string(row.n_nonconverged)});
    write_csv(path, table);
}

}  // namespace erank
