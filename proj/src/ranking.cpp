#include "erank/ranking.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"
#include "erank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace erank {

namespace {

// Visit every retained rank row across chains.
template <typename Fn>
void for_each_rank_row(const PosteriorDraws& draws, Fn&& fn) {
    const auto n = static_cast<std::size_t>(draws.n_proposals);
    for (const auto& chain : draws.chains)
        for (int d = 0; d < chain.n_retained; ++d)
            fn(std::span<const std::int32_t>(chain.rank.data() + static_cast<std::size_t>(d) * n,
                                             n));
}

std::vector<std::vector<std::int64_t>> rank_counts(const PosteriorDraws& draws) {
    const int n = draws.n_proposals;
    std::vector<std::vector<std::int64_t>> counts(
        static_cast<std::size_t>(n), std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
    for_each_rank_row(draws, [&](std::span<const std::int32_t> row) {
        for (int i = 0; i < n; ++i)
            ++counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(row[
                static_cast<std::size_t>(i)] - 1)];
    });
    return counts;
}

}  // namespace

std::vector<double> expected_ranks(const PosteriorDraws& draws) {
    const int n = draws.n_proposals;
    const int total = draws.total_retained();
    if (total < 1) throw ValidationError("expected_ranks: no retained draws");
    std::vector<std::int64_t> sums(static_cast<std::size_t>(n), 0);
    for_each_rank_row(draws, [&](std::span<const std::int32_t> row) {
        for (int i = 0; i < n; ++i) sums[static_cast<std::size_t>(i)] += row[static_cast<std::size_t>(i)];
    });
    std::vector<double> er(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        er[static_cast<std::size_t>(i)] =
            static_cast<double>(sums[static_cast<std::size_t>(i)]) / static_cast<double>(total);
    return er;
}

double pcer(double er, int n) { return 100.0 * (er - 0.5) / static_cast<double>(n); }

std::vector<std::vector<double>> rankogram(const PosteriorDraws& draws) {
    const int n = draws.n_proposals;
    const double total = static_cast<double>(draws.total_retained());
    const auto counts = rank_counts(draws);
    std::vector<std::vector<double>> probs(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m)
            probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] =
                static_cast<double>(counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)]) /
                total;
    return probs;
}

std::vector<double> sucra(const std::vector<std::vector<double>>& rankogram) {
    const int n = static_cast<int>(rankogram.size());
    std::vector<double> out(static_cast<std::size_t>(n), 1.0);
    if (n == 1) return out;  // a single proposal beats every competitor vacuously
    for (int i = 0; i < n; ++i) {
        long double cum = 0.0L;
        long double acc = 0.0L;
        for (int m = 0; m < n - 1; ++m) {
            cum += rankogram[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
            acc += cum;
        }
        out[static_cast<std::size_t>(i)] =
            static_cast<double>(acc / static_cast<long double>(n - 1));
    }
    return out;
}

std::vector<std::pair<int, int>> rank_credible_interval(const PosteriorDraws& draws,
                                                        double level) {
    if (!(level > 0.0 && level < 1.0))
        throw ValidationError("credible level must lie strictly between 0 and 1");
    const int n = draws.n_proposals;
    const auto counts = rank_counts(draws);
    const std::int64_t total = draws.total_retained();
    const double alpha = 1.0 - level;
    // Nearest-rank order statistics: the interval drops at most alpha/2
    // probability from each tail and keeps integer endpoints.
    const auto lo_idx = static_cast<std::int64_t>(
        std::floor(alpha / 2.0 * static_cast<double>(total)));
    const auto hi_idx = static_cast<std::int64_t>(
        std::ceil((1.0 - alpha / 2.0) * static_cast<double>(total))) - 1;

    std::vector<std::pair<int, int>> cri(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int lower = 0, upper = 0;
        std::int64_t seen = 0;
        bool lower_set = false;
        for (int m = 0; m < n; ++m) {
            seen += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
            if (!lower_set && seen > lo_idx) {
                lower = m + 1;
                lower_set = true;
            }
            if (seen > hi_idx) {
                upper = m + 1;
                break;
            }
        }
        cri[static_cast<std::size_t>(i)] = {lower, upper};
    }
    return cri;
}

std::vector<int> posterior_mean_ranking(const PosteriorDraws& draws) {
    const int n = draws.n_proposals;
    std::vector<double> means(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) means[static_cast<std::size_t>(i)] = mean(draws.theta_draws(i));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = means[static_cast<std::size_t>(a)];
        const double mb = means[static_cast<std::size_t>(b)];
        if (ma != mb) return ma > mb;
        return draws.proposal_labels[static_cast<std::size_t>(a)] <
               draws.proposal_labels[static_cast<std::size_t>(b)];
    });
    return order;
}

double analytic_pairwise_prob(double theta_hat_i, double theta_hat_k, double var_i, double var_k,
                              double cov_ik) {
    const double var_diff = var_i + var_k - 2.0 * cov_ik;
    if (!(var_diff > 0.0))
        throw ValidationError("degenerate pair: variance of the difference is not positive");
    return norm_cdf((theta_hat_k - theta_hat_i) / std::sqrt(var_diff));
}

double analytic_rank_variance(std::span<const double> pairwise,
                              const std::vector<std::vector<double>>& min_prob) {
    const int n = static_cast<int>(pairwise.size());
    double var = 0.0;
    for (int k = 0; k < n; ++k) {
        const double p = pairwise[static_cast<std::size_t>(k)];
        var += p * (1.0 - p);
    }
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l)
            var += 2.0 * (min_prob[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] -
                          pairwise[static_cast<std::size_t>(k)] *
                              pairwise[static_cast<std::size_t>(l)]);
    return var;
}

double min_prob_independent_gaussian(double mean_i, double var_i, double mean_k, double var_k,
                                     double mean_l, double var_l) {
    // Pr(theta_i <= min(theta_k, theta_l))
    //   = integral of f_i(t) * P(theta_k >= t) * P(theta_l >= t) dt
    const double sd_i = std::sqrt(var_i);
    const double sd_k = std::sqrt(var_k);
    const double sd_l = std::sqrt(var_l);
    const double lo = mean_i - 10.0 * sd_i;
    const double hi = mean_i + 10.0 * sd_i;
    const int intervals = 4096;  // composite Simpson; integrand is smooth
    const double h = (hi - lo) / intervals;
    auto f = [&](double t) {
        return norm_pdf((t - mean_i) / sd_i) / sd_i * norm_cdf((mean_k - t) / sd_k) *
               norm_cdf((mean_l - t) / sd_l);
    };
    double sum = f(lo) + f(hi);
    for (int s = 1; s < intervals; ++s) sum += f(lo + s * h) * (s % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

RankingSummary summarize_ranking(const PosteriorDraws& draws, const ScoreDataset& ds,
                                 double cri_level) {
    RankingSummary s;
    s.n = draws.n_proposals;
    s.cri_level = cri_level;
    s.labels = draws.proposal_labels;
    s.er = expected_ranks(draws);
    s.rankogram = rankogram(draws);
    s.sucra = sucra(s.rankogram);
    const auto cri = rank_credible_interval(draws, cri_level);
    s.cri_lower.resize(static_cast<std::size_t>(s.n));
    s.cri_upper.resize(static_cast<std::size_t>(s.n));
    s.pcer.resize(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i) {
        s.cri_lower[static_cast<std::size_t>(i)] = cri[static_cast<std::size_t>(i)].first;
        s.cri_upper[static_cast<std::size_t>(i)] = cri[static_cast<std::size_t>(i)].second;
        s.pcer[static_cast<std::size_t>(i)] = pcer(s.er[static_cast<std::size_t>(i)], s.n);
    }
    s.cumulative.assign(static_cast<std::size_t>(s.n),
                        std::vector<double>(static_cast<std::size_t>(s.n), 0.0));
    for (int i = 0; i < s.n; ++i) {
        double cum = 0.0;
        for (int m = 0; m < s.n; ++m) {
            cum += s.rankogram[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
            s.cumulative[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)] = cum;
        }
    }
    s.posterior_mean_theta.resize(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i)
        s.posterior_mean_theta[static_cast<std::size_t>(i)] = mean(draws.theta_draws(i));
    const auto order = posterior_mean_ranking(draws);
    s.mean_rank_position.resize(static_cast<std::size_t>(s.n));
    for (int pos = 0; pos < s.n; ++pos)
        s.mean_rank_position[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] =
            pos + 1;
    s.average_score.resize(static_cast<std::size_t>(s.n));
    for (int i = 0; i < s.n; ++i)
        s.average_score[static_cast<std::size_t>(i)] = ds.proposal_mean(i);
    s.tie_order = ds.proposal_tie_order();
    return s;
}

void write_summary_csv(const RankingSummary& summary, const std::filesystem::path& path) {
    Table table;
    table.header = {"proposal",  "er",        "pcer",
                    "sucra",     "cri_lower", "cri_upper",
                    "posterior_mean_theta", "average_score"};
    for (int i = 0; i < summary.n; ++i) {
        const auto u = static_cast<std::size_t>(i);
        table.rows.push_back({summary.labels[u], fmt_double(summary.er[u]),
                              fmt_double(summary.pcer[u]), fmt_double(summary.sucra[u]),
                              std::to_string(summary.cri_lower[u]),
                              std::to_string(summary.cri_upper[u]),
                              fmt_double(summary.posterior_mean_theta[u]),
                              fmt_double(summary.average_score[u])});
    }
    write_csv(path, table);
}

RankingSummary read_summary_csv(const std::filesystem::path& path) {
    const Table table = read_csv(path);
    const int prop = table.column("proposal");
    const int er = table.column("er");
    const int lo = table.column("cri_lower");
    const int hi = table.column("cri_upper");
    if (prop < 0 || er < 0 || lo < 0 || hi < 0)
        throw ValidationError("summary file must have columns proposal, er, cri_lower, cri_upper");
    RankingSummary s;
    const int pcer_col = table.column("pcer");
    const int sucra_col = table.column("sucra");
    const int mean_col = table.column("posterior_mean_theta");
    const int avg_col = table.column("average_score");
    for (const auto& row : table.rows) {
        s.labels.push_back(row.at(static_cast<std::size_t>(prop)));
        s.er.push_back(std::stod(row.at(static_cast<std::size_t>(er))));
        s.cri_lower.push_back(std::stoi(row.at(static_cast<std::size_t>(lo))));
        s.cri_upper.push_back(std::stoi(row.at(static_cast<std::size_t>(hi))));
        auto opt = [&row](int col) {
            return col >= 0 ? std::stod(row.at(static_cast<std::size_t>(col))) : 0.0;
        };
        s.pcer.push_back(opt(pcer_col));
        s.sucra.push_back(opt(sucra_col));
        s.posterior_mean_theta.push_back(opt(mean_col));
        s.average_score.push_back(opt(avg_col));
    }
    s.n = static_cast<int>(s.labels.size());
    if (s.n == 0) throw ValidationError("summary file has no rows: " + path.string());
    std::vector<int> order(static_cast<std::size_t>(s.n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return s.labels[static_cast<std::size_t>(a)] < s.labels[static_cast<std::size_t>(b)];
    });
    s.tie_order.assign(static_cast<std::size_t>(s.n), 0);
    for (int pos = 0; pos < s.n; ++pos)
        s.tie_order[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;
    return s;
}

}  // namespace erank
