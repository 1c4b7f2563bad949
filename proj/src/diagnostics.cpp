#include "erank/diagnostics.hpp"

#include "erank/errors.hpp"
#include "erank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace erank {

std::string to_string(IccVariant variant) {
    switch (variant) {
        case IccVariant::one_way: return "one_way";
        case IccVariant::two_way_consistency: return "two_way_consistency";
        case IccVariant::two_way_agreement: return "two_way_agreement";
    }
    return "unknown";
}

namespace {

double harmonic_mean_count(const std::vector<int>& counts) {
    double inv = 0.0;
    int used = 0;
    for (int c : counts) {
        if (c > 0) {
            inv += 1.0 / static_cast<double>(c);
            ++used;
        }
    }
    return static_cast<double>(used) / inv;
}

// Least-squares fit of the additive two-way model y ~ m + row_i + col_j on the
// observed cells, by alternating row/column sweeps (converges: it is a cyclic
// projection onto two subspaces).
double additive_residual_ss(const ScoreDataset& ds) {
    const int n = ds.n_proposals();
    const int m = ds.n_assessors();
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    std::vector<double> col(static_cast<std::size_t>(m), 0.0);
    const double grand = ds.grand_mean();
    const auto& obs = ds.observations();
    for (int pass = 0; pass < 200; ++pass) {
        double shift = 0.0;
        std::vector<double> sum(static_cast<std::size_t>(n), 0.0);
        for (const auto& o : obs)
            sum[static_cast<std::size_t>(o.proposal)] +=
                o.score - grand - col[static_cast<std::size_t>(o.assessor)];
        for (int i = 0; i < n; ++i) {
            const double next = sum[static_cast<std::size_t>(i)] /
                                static_cast<double>(ds.proposal_count(i));
            shift = std::max(shift, std::abs(next - row[static_cast<std::size_t>(i)]));
            row[static_cast<std::size_t>(i)] = next;
        }
        std::vector<double> csum(static_cast<std::size_t>(m), 0.0);
        for (const auto& o : obs)
            csum[static_cast<std::size_t>(o.assessor)] +=
                o.score - grand - row[static_cast<std::size_t>(o.proposal)];
        for (int j = 0; j < m; ++j) {
            const double next = csum[static_cast<std::size_t>(j)] /
                                static_cast<double>(ds.assessor_count(j));
            shift = std::max(shift, std::abs(next - col[static_cast<std::size_t>(j)]));
            col[static_cast<std::size_t>(j)] = next;
        }
        if (shift < 1e-12) break;
    }
    double ss = 0.0;
    for (const auto& o : obs) {
        const double r = o.score - grand - row[static_cast<std::size_t>(o.proposal)] -
                         col[static_cast<std::size_t>(o.assessor)];
        ss += r * r;
    }
    return ss;
}

double clamp_icc(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

IccResult icc(const ScoreDataset& ds, IccVariant variant, double confidence) {
    const int n = ds.n_proposals();
    const int m = ds.n_assessors();
    if (n < 2 || m < 2)
        throw ValidationError("ICC needs at least 2 proposals and 2 assessors");

    IccResult result;
    result.variant = variant;
    const double total_cells = static_cast<double>(n) * static_cast<double>(m);
    result.missing_fraction = 1.0 - static_cast<double>(ds.n_observations()) / total_cells;
    result.high_missingness = result.missing_fraction > 0.10;

    const double grand = ds.grand_mean();
    const double N = static_cast<double>(ds.n_observations());

    std::vector<int> row_counts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) row_counts[static_cast<std::size_t>(i)] = ds.proposal_count(i);
    const double k0 = harmonic_mean_count(row_counts);

    // Between-proposal and within-proposal mean squares on observed cells.
    double ssb = 0.0, ssw = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rm = ds.proposal_mean(i);
        ssb += static_cast<double>(ds.proposal_count(i)) * (rm - grand) * (rm - grand);
        for (int c : ds.obs_of_proposal(i)) {
            const double d = ds.observations()[static_cast<std::size_t>(c)].score - rm;
            ssw += d * d;
        }
    }
    const double df_b = static_cast<double>(n - 1);
    const double msb = ssb / df_b;
    const double alpha = 1.0 - confidence;

    if (msb <= 0.0 || ssb == 0.0) {
        result.degenerate = true;
        return result;
    }

    if (variant == IccVariant::one_way) {
        const double df_w = N - static_cast<double>(n);
        const double msw = ssw / df_w;
        if (msw <= 0.0) {  // perfect within-proposal agreement
            result.icc = 1.0;
            result.ci_lower = 1.0;
            result.ci_upper = 1.0;
            return result;
        }
        const double f = msb / msw;
        result.icc = clamp_icc((msb - msw) / (msb + (k0 - 1.0) * msw));
        const double fl = f / f_quantile(1.0 - alpha / 2.0, df_b, df_w);
        const double fu = f * f_quantile(1.0 - alpha / 2.0, df_w, df_b);
        result.ci_lower = clamp_icc((fl - 1.0) / (fl + k0 - 1.0));
        result.ci_upper = clamp_icc((fu - 1.0) / (fu + k0 - 1.0));
        return result;
    }

    // Two-way forms: assessors crossed with proposals, residual from the
    // additive fit.
    double ssc = 0.0;
    for (int j = 0; j < m; ++j) {
        double sum = 0.0;
        for (int c : ds.obs_of_assessor(j))
            sum += ds.observations()[static_cast<std::size_t>(c)].score;
        const double cm = sum / static_cast<double>(ds.assessor_count(j));
        ssc += static_cast<double>(ds.assessor_count(j)) * (cm - grand) * (cm - grand);
    }
    const double df_c = static_cast<double>(m - 1);
    const double msc = ssc / df_c;
    const double df_e = N - static_cast<double>(n) - static_cast<double>(m) + 1.0;
    if (df_e < 1.0) throw ValidationError("not enough observations for a two-way ICC");
    const double mse = additive_residual_ss(ds) / df_e;

    if (mse <= 0.0) {
        result.icc = 1.0;
        result.ci_lower = 1.0;
        result.ci_upper = 1.0;
        return result;
    }

    if (variant == IccVariant::two_way_consistency) {
        const double f = msb / mse;
        result.icc = clamp_icc((msb - mse) / (msb + (k0 - 1.0) * mse));
        const double fl = f / f_quantile(1.0 - alpha / 2.0, df_b, df_e);
        const double fu = f * f_quantile(1.0 - alpha / 2.0, df_e, df_b);
        result.ci_lower = clamp_icc((fl - 1.0) / (fl + k0 - 1.0));
        result.ci_upper = clamp_icc((fu - 1.0) / (fu + k0 - 1.0));
        return result;
    }

    // two_way_agreement: column (assessor) variance counts against agreement.
    const double nn = static_cast<double>(n);
    result.icc = clamp_icc((msb - mse) /
                           (msb + (k0 - 1.0) * mse + k0 / nn * (msc - mse)));
    // Satterthwaite-style interval (McGraw & Wong).
    const double rho = result.icc;
    const double a = k0 * rho / (nn * (1.0 - rho));
    const double b = 1.0 + k0 * rho * (nn - 1.0) / (nn * (1.0 - rho));
    const double denom_v = (a * msc) * (a * msc) / df_c + (b * mse) * (b * mse) / df_e;
    const double v = denom_v > 0.0 ? (a * msc + b * mse) * (a * msc + b * mse) / denom_v : df_e;
    const double f1 = f_quantile(1.0 - alpha / 2.0, df_b, v);
    const double f2 = f_quantile(1.0 - alpha / 2.0, v, df_b);
    const double common = k0 * msc + (k0 * nn - k0 - nn) * mse;
    result.ci_lower = clamp_icc(nn * (msb - f1 * (a * msc + b * mse)) /
                                (f1 * common + nn * msb));
    result.ci_upper = clamp_icc(nn * (f2 * msb - a * msc - b * mse) /
                                (common + nn * f2 * msb));
    return result;
}

BlandAltman bland_altman(std::span<const double> ranking_a, std::span<const double> ranking_b) {
    if (ranking_a.size() != ranking_b.size())
        throw ValidationError("bland_altman: rankings must cover the same proposals");
    if (ranking_a.empty()) throw ValidationError("bland_altman: empty rankings");
    BlandAltman out;
    out.differences.resize(ranking_a.size());
    for (std::size_t i = 0; i < ranking_a.size(); ++i)
        out.differences[i] = ranking_a[i] - ranking_b[i];
    out.mean_difference = mean(out.differences);
    const double sd = std::sqrt(variance(out.differences));
    out.lower_limit = out.mean_difference - 1.96 * sd;
    out.upper_limit = out.mean_difference + 1.96 * sd;
    return out;
}

std::vector<std::string> trace_parameters(const PosteriorDraws& draws) {
    std::vector<std::string> names = draws.scalar_names();
    for (const auto& label : draws.proposal_labels) names.push_back("theta[" + label + "]");
    for (const auto& label : draws.assessor_labels) names.push_back("nu[" + label + "]");
    return names;
}

TraceTable trace_export(const PosteriorDraws& draws, const std::string& selector) {
    TraceTable table;
    table.parameter = selector;

    auto emit = [&](auto&& value_of_draw) {
        for (std::size_t ci = 0; ci < draws.chains.size(); ++ci) {
            const auto& c = draws.chains[ci];
            for (int d = 0; d < c.n_retained; ++d) {
                table.chain.push_back(static_cast<int>(ci) + 1);
                table.iteration.push_back(c.iteration[static_cast<std::size_t>(d)]);
                table.value.push_back(value_of_draw(c, d));
            }
        }
    };

    auto bracketed = [&selector](const std::string& prefix,
                                 const std::vector<std::string>& labels) -> int {
        if (selector.rfind(prefix + "[", 0) != 0 || selector.back() != ']') return -1;
        const std::string label =
            selector.substr(prefix.size() + 1, selector.size() - prefix.size() - 2);
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) return static_cast<int>(i);
        return -1;
    };

    const int theta_idx = bracketed("theta", draws.proposal_labels);
    if (theta_idx >= 0) {
        emit([&](const ChainDraws& c, int d) {
            return c.theta[static_cast<std::size_t>(d) *
                               static_cast<std::size_t>(draws.n_proposals) +
                           static_cast<std::size_t>(theta_idx)];
        });
        return table;
    }
    const int nu_idx = bracketed("nu", draws.assessor_labels);
    if (nu_idx >= 0) {
        emit([&](const ChainDraws& c, int d) {
            return c.nu[static_cast<std::size_t>(d) * static_cast<std::size_t>(draws.n_assessors) +
                        static_cast<std::size_t>(nu_idx)];
        });
        return table;
    }
    for (std::size_t s = 0; s < draws.scalar_names().size(); ++s) {
        if (draws.scalar_names()[s] == selector) {
            emit([&, s](const ChainDraws& c, int d) {
                return c.scalars[s].second[static_cast<std::size_t>(d)];
            });
            return table;
        }
    }

    std::string known;
    for (const auto& name : trace_parameters(draws)) {
        if (!known.empty()) known += ", ";
        known += name;
    }
    throw ValidationError("unknown parameter '" + selector + "'; available: " + known);
}

}  // namespace erank
