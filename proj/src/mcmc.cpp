#include "erank/mcmc.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"
#include "erank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

namespace erank {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite(double x, const char* name) {
    if (!std::isfinite(x)) throw McmcError(std::string("non-finite value for ") + name);
}

void check_dims(const ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg) {
    const auto n = static_cast<std::size_t>(ds.n_proposals());
    const auto m = static_cast<std::size_t>(ds.n_assessors());
    const auto c = static_cast<std::size_t>(ds.n_observations());
    bool ok = state.theta.size() == n && state.nu.size() == m && state.lambda.size() == c;
    if (cfg.panel_effect) ok = ok && state.delta.size() == static_cast<std::size_t>(ds.n_panels());
    if (cfg.outcome == Outcome::ordinal)
        ok = ok && state.latent.size() == c &&
             state.cutoffs.size() == static_cast<std::size_t>(cfg.n_levels - 1);
    if (cfg.residuals == Residuals::heterogeneous) ok = ok && state.omega.size() == n;
    if (!ok) throw McmcError("parameter state dimensions do not match dataset/model");
}

// Per-proposal residual variance under the active variant.
void residual_variances(const ParameterState& state, const ScoreDataset& ds,
                        const ModelConfig& cfg, std::vector<double>& out) {
    const int n = ds.n_proposals();
    out.resize(static_cast<std::size_t>(n));
    if (cfg.residuals == Residuals::homogeneous) {
        std::fill(out.begin(), out.end(), state.sigma * state.sigma);
    } else {
        for (int i = 0; i < n; ++i)
            out[static_cast<std::size_t>(i)] = std::exp(
                state.alpha + state.beta * std::log(ds.proposal_mean(i)) +
                state.omega[static_cast<std::size_t>(i)]);
    }
}

double obs_value(const ParameterState& state, const ModelConfig& cfg, int c, double score) {
    return cfg.outcome == Outcome::ordinal ? state.latent[static_cast<std::size_t>(c)] : score;
}

double delta_of(const ParameterState& state, const Observation& obs) {
    return obs.panel >= 0 && !state.delta.empty()
               ? state.delta[static_cast<std::size_t>(obs.panel)]
               : 0.0;
}

// log density of an SD parameter with a uniform prior, given the scaled
// sum of squares of its zero-mean Gaussian children.
struct SdLogDensity {
    double count;
    double sum_sq;
    double operator()(double s) const { return -count * std::log(s) - sum_sq / (2.0 * s * s); }
};

double slice_sd(Rng& rng, double current, double count, double sum_sq, double lo, double hi,
                const char* name) {
    const double next = slice_sample_bounded(rng, current, SdLogDensity{count, sum_sq}, lo, hi);
    check_finite(next, name);
    return next;
}

int ordinal_category(const ScoreDataset& ds, int c) {
    return static_cast<int>(ds.observations()[static_cast<std::size_t>(c)].score);
}

}  // namespace

double log_likelihood(const ParameterState& state, const ScoreDataset& ds,
                      const ModelConfig& cfg) {
    check_dims(state, ds, cfg);
    std::vector<double> var;
    residual_variances(state, ds, cfg, var);
    const double ybar = ds.grand_mean();
    double sum = 0.0;
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const double mu = ybar + state.theta[static_cast<std::size_t>(o.proposal)] +
                          state.lambda[static_cast<std::size_t>(c)] + delta_of(state, o);
        const double value = obs_value(state, cfg, c, o.score);
        sum += log_norm_pdf(value, mu, std::sqrt(var[static_cast<std::size_t>(o.proposal)]));
    }
    return sum;
}

void update_theta(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng) {
    (void)prior;
    const int n = ds.n_proposals();
    std::vector<double> var;
    residual_variances(state, ds, cfg, var);
    std::vector<double> rsum(static_cast<std::size_t>(n), 0.0);
    const double ybar = ds.grand_mean();
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        rsum[static_cast<std::size_t>(o.proposal)] +=
            obs_value(state, cfg, c, o.score) - ybar - state.lambda[static_cast<std::size_t>(c)] -
            delta_of(state, o);
    }
    const double prior_prec = 1.0 / (state.tau_theta * state.tau_theta);
    for (int i = 0; i < n; ++i) {
        const double v = var[static_cast<std::size_t>(i)];
        const double prec = static_cast<double>(ds.proposal_count(i)) / v + prior_prec;
        const double mean = (rsum[static_cast<std::size_t>(i)] / v) / prec;
        const double draw = mean + rnorm(rng) / std::sqrt(prec);
        check_finite(draw, "theta");
        state.theta[static_cast<std::size_t>(i)] = draw;
    }
}

void update_lambda(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                   const PriorConfig& prior, Rng& rng) {
    (void)prior;
    std::vector<double> var;
    residual_variances(state, ds, cfg, var);
    const double ybar = ds.grand_mean();
    const double prior_prec = 1.0 / (state.tau_lambda * state.tau_lambda);
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const double v = var[static_cast<std::size_t>(o.proposal)];
        const double r = obs_value(state, cfg, c, o.score) - ybar -
                         state.theta[static_cast<std::size_t>(o.proposal)] - delta_of(state, o);
        const double prec = 1.0 / v + prior_prec;
        const double mean =
            (r / v + state.nu[static_cast<std::size_t>(o.assessor)] * prior_prec) / prec;
        const double draw = mean + rnorm(rng) / std::sqrt(prec);
        check_finite(draw, "lambda");
        state.lambda[static_cast<std::size_t>(c)] = draw;
    }
}

void update_nu(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
               const PriorConfig& prior, Rng& rng) {
    (void)cfg;
    const int m = ds.n_assessors();
    std::vector<double> lsum(static_cast<std::size_t>(m), 0.0);
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c)
        lsum[static_cast<std::size_t>(obs[static_cast<std::size_t>(c)].assessor)] +=
            state.lambda[static_cast<std::size_t>(c)];
    const double lambda_prec = 1.0 / (state.tau_lambda * state.tau_lambda);
    const double prior_prec = 1.0 / (prior.nu_prior_sd * prior.nu_prior_sd);
    for (int j = 0; j < m; ++j) {
        const double prec = static_cast<double>(ds.assessor_count(j)) * lambda_prec + prior_prec;
        const double mean = (lsum[static_cast<std::size_t>(j)] * lambda_prec) / prec;
        const double draw = mean + rnorm(rng) / std::sqrt(prec);
        check_finite(draw, "nu");
        state.nu[static_cast<std::size_t>(j)] = draw;
    }
}

void update_delta(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng) {
    (void)prior;
    if (!cfg.panel_effect || state.delta.empty()) return;
    std::vector<double> var;
    residual_variances(state, ds, cfg, var);
    const int p = ds.n_panels();
    std::vector<double> wsum(static_cast<std::size_t>(p), 0.0);
    std::vector<double> wtot(static_cast<std::size_t>(p), 0.0);
    const double ybar = ds.grand_mean();
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const double v = var[static_cast<std::size_t>(o.proposal)];
        const double r = obs_value(state, cfg, c, o.score) - ybar -
                         state.theta[static_cast<std::size_t>(o.proposal)] -
                         state.lambda[static_cast<std::size_t>(c)];
        wsum[static_cast<std::size_t>(o.panel)] += r / v;
        wtot[static_cast<std::size_t>(o.panel)] += 1.0 / v;
    }
    const double prior_prec = 1.0 / (state.tau_delta * state.tau_delta);
    for (int k = 0; k < p; ++k) {
        const double prec = wtot[static_cast<std::size_t>(k)] + prior_prec;
        const double mean = wsum[static_cast<std::size_t>(k)] / prec;
        const double draw = mean + rnorm(rng) / std::sqrt(prec);
        check_finite(draw, "delta");
        state.delta[static_cast<std::size_t>(k)] = draw;
    }
}

void update_sigma(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng) {
    if (cfg.residuals != Residuals::homogeneous) return;
    const double ybar = ds.grand_mean();
    double ssr = 0.0;
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const double r = obs_value(state, cfg, c, o.score) - ybar -
                         state.theta[static_cast<std::size_t>(o.proposal)] -
                         state.lambda[static_cast<std::size_t>(c)] - delta_of(state, o);
        ssr += r * r;
    }
    state.sigma = slice_sd(rng, state.sigma, static_cast<double>(ds.n_observations()), ssr,
                           prior.sd_uniform_lower, prior.sd_uniform_upper, "sigma");
}

void update_tau_theta(ParameterState& state, const PriorConfig& prior, Rng& rng) {
    double ss = 0.0;
    for (double t : state.theta) ss += t * t;
    state.tau_theta = slice_sd(rng, state.tau_theta, static_cast<double>(state.theta.size()), ss,
                               prior.sd_uniform_lower, prior.sd_uniform_upper, "tau_theta");
}

void update_tau_lambda(ParameterState& state, const ScoreDataset& ds, const PriorConfig& prior,
                       Rng& rng) {
    double ss = 0.0;
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const double d = state.lambda[static_cast<std::size_t>(c)] -
                         state.nu[static_cast<std::size_t>(
                             obs[static_cast<std::size_t>(c)].assessor)];
        ss += d * d;
    }
    state.tau_lambda = slice_sd(rng, state.tau_lambda, static_cast<double>(ds.n_observations()),
                                ss, prior.sd_uniform_lower, prior.sd_uniform_upper, "tau_lambda");
}

void update_tau_delta(ParameterState& state, const PriorConfig& prior, Rng& rng) {
    if (state.delta.empty()) return;
    double ss = 0.0;
    for (double d : state.delta) ss += d * d;
    state.tau_delta = slice_sd(rng, state.tau_delta, static_cast<double>(state.delta.size()), ss,
                               prior.sd_uniform_lower, prior.sd_uniform_upper, "tau_delta");
}

void update_latents(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                    Rng& rng) {
    if (cfg.outcome != Outcome::ordinal) return;
    std::vector<double> var;
    residual_variances(state, ds, cfg, var);
    const double ybar = ds.grand_mean();
    const int levels = cfg.n_levels;
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const int k = ordinal_category(ds, c);
        const double lo = k <= 1 ? -kInf : state.cutoffs[static_cast<std::size_t>(k - 2)];
        const double hi = k >= levels ? kInf : state.cutoffs[static_cast<std::size_t>(k - 1)];
        const double mu = ybar + state.theta[static_cast<std::size_t>(o.proposal)] +
                          state.lambda[static_cast<std::size_t>(c)] + delta_of(state, o);
        const double draw =
            rtruncnorm(rng, mu, std::sqrt(var[static_cast<std::size_t>(o.proposal)]), lo, hi);
        check_finite(draw, "latent");
        state.latent[static_cast<std::size_t>(c)] = draw;
    }
}

void update_cutoffs(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                    Rng& rng) {
    if (cfg.outcome != Outcome::ordinal) return;
    const int levels = cfg.n_levels;
    // Flat prior on an interval wide enough to never bind in practice; it only
    // matters when an extreme category is empty, where it keeps the
    // conditional proper.
    const double span = 2.0 * std::max(6.0, static_cast<double>(levels));
    const double sentinel_lo = ds.grand_mean() - span;
    const double sentinel_hi = ds.grand_mean() + span;

    std::vector<double> cat_max(static_cast<std::size_t>(levels + 1), -kInf);
    std::vector<double> cat_min(static_cast<std::size_t>(levels + 1), kInf);
    for (int c = 0; c < ds.n_observations(); ++c) {
        const int k = ordinal_category(ds, c);
        const double x = state.latent[static_cast<std::size_t>(c)];
        auto ku = static_cast<std::size_t>(k);
        cat_max[ku] = std::max(cat_max[ku], x);
        cat_min[ku] = std::min(cat_min[ku], x);
    }

    // Full conditional of c_k under the flat prior is uniform on the interval
    // bracketed by the neighbouring cutoffs and the latents of the two
    // categories it separates.
    for (int t = 0; t < levels - 1; ++t) {
        const double prev = t == 0 ? sentinel_lo : state.cutoffs[static_cast<std::size_t>(t - 1)];
        const double next = t == levels - 2 ? sentinel_hi
                                            : state.cutoffs[static_cast<std::size_t>(t + 1)];
        const double lo = std::max(prev, cat_max[static_cast<std::size_t>(t + 1)]);
        const double hi = std::min(next, cat_min[static_cast<std::size_t>(t + 2)]);
        if (hi > lo) {
            const double draw = runif(rng, lo, hi);
            check_finite(draw, "cutoff");
            state.cutoffs[static_cast<std::size_t>(t)] = draw;
        }
    }
}

void update_scale_params(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                         const PriorConfig& prior, Rng& rng) {
    if (cfg.residuals != Residuals::heterogeneous) return;
    const int n = ds.n_proposals();
    const double ybar = ds.grand_mean();
    std::vector<double> ssr(static_cast<std::size_t>(n), 0.0);
    const auto& obs = ds.observations();
    for (int c = 0; c < ds.n_observations(); ++c) {
        const auto& o = obs[static_cast<std::size_t>(c)];
        const double r = obs_value(state, cfg, c, o.score) - ybar -
                         state.theta[static_cast<std::size_t>(o.proposal)] -
                         state.lambda[static_cast<std::size_t>(c)] - delta_of(state, o);
        ssr[static_cast<std::size_t>(o.proposal)] += r * r;
    }
    std::vector<double> logmean(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        logmean[static_cast<std::size_t>(i)] = std::log(ds.proposal_mean(i));

    // Joint Gaussian-likelihood term for one proposal given its log-variance.
    auto loglik_i = [&](int i, double logvar) {
        return -0.5 * static_cast<double>(ds.proposal_count(i)) * logvar -
               ssr[static_cast<std::size_t>(i)] / (2.0 * std::exp(logvar));
    };
    auto total_loglik = [&](double alpha, double beta) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            sum += loglik_i(i, alpha + beta * logmean[static_cast<std::size_t>(i)] +
                                   state.omega[static_cast<std::size_t>(i)]);
        return sum;
    };

    const double prior_var = prior.scale_alpha_beta_sd * prior.scale_alpha_beta_sd;
    constexpr double kAlphaStep = 0.1;
    constexpr double kBetaStep = 0.3;
    constexpr double kOmegaStep = 0.4;

    {
        const double cand = state.alpha + kAlphaStep * rnorm(rng);
        const double delta_lp = total_loglik(cand, state.beta) -
                                total_loglik(state.alpha, state.beta) +
                                (state.alpha * state.alpha - cand * cand) / (2.0 * prior_var);
        if (std::log(runif(rng)) < delta_lp) state.alpha = cand;
        check_finite(state.alpha, "alpha");
    }
    {
        const double cand = state.beta + kBetaStep * rnorm(rng);
        const double delta_lp = total_loglik(state.alpha, cand) -
                                total_loglik(state.alpha, state.beta) +
                                (state.beta * state.beta - cand * cand) / (2.0 * prior_var);
        if (std::log(runif(rng)) < delta_lp) state.beta = cand;
        check_finite(state.beta, "beta");
    }
    const double omega_prior_var = state.tau_omega * state.tau_omega;
    for (int i = 0; i < n; ++i) {
        const double cur = state.omega[static_cast<std::size_t>(i)];
        const double cand = cur + kOmegaStep * rnorm(rng);
        const double base = state.alpha + state.beta * logmean[static_cast<std::size_t>(i)];
        const double delta_lp = loglik_i(i, base + cand) - loglik_i(i, base + cur) +
                                (cur * cur - cand * cand) / (2.0 * omega_prior_var);
        if (std::log(runif(rng)) < delta_lp) state.omega[static_cast<std::size_t>(i)] = cand;
        check_finite(state.omega[static_cast<std::size_t>(i)], "omega");
    }
}

void update_tau_omega(ParameterState& state, const PriorConfig& prior, Rng& rng) {
    if (state.omega.empty()) return;
    double ss = 0.0;
    for (double w : state.omega) ss += w * w;
    state.tau_omega = slice_sd(rng, state.tau_omega, static_cast<double>(state.omega.size()), ss,
                               1e-12, prior.tau_omega_upper, "tau_omega");
}

void gibbs_sweep(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                 const PriorConfig& prior, Rng& rng) {
    update_theta(state, ds, cfg, prior, rng);
    update_lambda(state, ds, cfg, prior, rng);
    update_nu(state, ds, cfg, prior, rng);
    if (cfg.panel_effect) update_delta(state, ds, cfg, prior, rng);
    update_tau_theta(state, prior, rng);
    update_tau_lambda(state, ds, prior, rng);
    if (cfg.panel_effect) update_tau_delta(state, prior, rng);
    if (cfg.residuals == Residuals::homogeneous) update_sigma(state, ds, cfg, prior, rng);
    if (cfg.outcome == Outcome::ordinal) {
        update_latents(state, ds, cfg, rng);
        update_cutoffs(state, ds, cfg, rng);
    }
    if (cfg.residuals == Residuals::heterogeneous) {
        update_scale_params(state, ds, cfg, prior, rng);
        update_tau_omega(state, prior, rng);
    }
}

ParameterState gibbs_step(const ParameterState& state, const ScoreDataset& ds,
                          const ModelConfig& cfg, const PriorConfig& prior, Rng& rng) {
    check_dims(state, ds, cfg);
    ParameterState next = state;
    gibbs_sweep(next, ds, cfg, prior, rng);
    return next;
}

ParameterState initial_state(const ScoreDataset& ds, const ModelConfig& cfg,
                             const PriorConfig& prior, Rng& rng) {
    const int n = ds.n_proposals();
    const int m = ds.n_assessors();
    const double ybar = ds.grand_mean();
    ParameterState state;

    auto jitter = [&rng](double x) { return x * (1.0 + 0.1 * rnorm(rng)) + 0.01 * rnorm(rng); };
    auto jitter_sd = [&rng](double x, double lo, double hi) {
        return std::clamp(x * (1.0 + 0.1 * rnorm(rng)), lo * 1.01 + 1e-12, hi);
    };

    state.theta.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        state.theta[static_cast<std::size_t>(i)] = jitter(ds.proposal_mean(i) - ybar);

    state.lambda.assign(static_cast<std::size_t>(ds.n_observations()), 0.0);

    state.nu.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        double sum = 0.0;
        for (int c : ds.obs_of_assessor(j))
            sum += ds.observations()[static_cast<std::size_t>(c)].score;
        state.nu[static_cast<std::size_t>(j)] =
            jitter(sum / static_cast<double>(ds.assessor_count(j)) - ybar);
    }

    const double sd_start = 0.5 * prior.sd_uniform_upper;
    state.sigma = jitter_sd(sd_start, prior.sd_uniform_lower, prior.sd_uniform_upper);
    state.tau_theta = jitter_sd(sd_start, prior.sd_uniform_lower, prior.sd_uniform_upper);
    state.tau_lambda = jitter_sd(sd_start, prior.sd_uniform_lower, prior.sd_uniform_upper);
    state.tau_delta = jitter_sd(sd_start, prior.sd_uniform_lower, prior.sd_uniform_upper);

    if (cfg.panel_effect) state.delta.assign(static_cast<std::size_t>(ds.n_panels()), 0.0);

    if (cfg.outcome == Outcome::ordinal) {
        const int levels = cfg.n_levels;
        state.cutoffs.resize(static_cast<std::size_t>(levels - 1));
        for (int k = 1; k < levels; ++k)
            state.cutoffs[static_cast<std::size_t>(k - 1)] =
                ybar + norm_quantile(static_cast<double>(k) / static_cast<double>(levels));
        state.latent.resize(static_cast<std::size_t>(ds.n_observations()));
        for (int c = 0; c < ds.n_observations(); ++c) {
            const int k = ordinal_category(ds, c);
            double x;
            if (k <= 1) {
                x = state.cutoffs.front() - 0.5;
            } else if (k >= levels) {
                x = state.cutoffs.back() + 0.5;
            } else {
                x = 0.5 * (state.cutoffs[static_cast<std::size_t>(k - 2)] +
                           state.cutoffs[static_cast<std::size_t>(k - 1)]);
            }
            state.latent[static_cast<std::size_t>(c)] = x;
        }
    }

    if (cfg.residuals == Residuals::heterogeneous) {
        double ss = 0.0;
        for (int c = 0; c < ds.n_observations(); ++c) {
            const auto& o = ds.observations()[static_cast<std::size_t>(c)];
            const double r = o.score - ds.proposal_mean(o.proposal);
            ss += r * r;
        }
        const double resid_var = std::max(ss / static_cast<double>(ds.n_observations()), 1e-2);
        state.alpha = std::log(resid_var) * (1.0 + 0.1 * rnorm(rng));
        state.beta = 0.0;
        state.omega.resize(static_cast<std::size_t>(n));
        // small absolute jitter; a relative one is a no-op at zero and an
        // exactly-zero start can trap tau_omega at the bottom of its support
        for (int i = 0; i < n; ++i)
            state.omega[static_cast<std::size_t>(i)] = 0.05 * rnorm(rng);
        state.tau_omega = jitter_sd(0.5 * prior.tau_omega_upper, 1e-12, prior.tau_omega_upper);
    }
    return state;
}

RhatResult gelman_rubin(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw std::invalid_argument("gelman_rubin: need at least 2 chains");
    for (const auto& c : chains)
        if (c.size() < 4)
            throw std::invalid_argument("gelman_rubin: need at least 4 draws per chain");

    // Split every chain in half (dropping one middle element when odd).
    std::vector<std::pair<double, double>> halves;  // (mean, variance)
    std::size_t half_len = std::numeric_limits<std::size_t>::max();
    for (const auto& c : chains) half_len = std::min(half_len, c.size() / 2);
    for (const auto& c : chains) {
        const std::span<const double> first(c.data(), half_len);
        const std::span<const double> second(c.data() + (c.size() - half_len), half_len);
        halves.emplace_back(mean(first), variance(first));
        halves.emplace_back(mean(second), variance(second));
    }

    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(half_len);
    double w = 0.0;
    for (const auto& h : halves) w += h.second;
    w /= m;
    if (w <= 0.0) return {1.0, true};

    double grand = 0.0;
    for (const auto& h : halves) grand += h.first;
    grand /= m;
    double b_over_n = 0.0;
    for (const auto& h : halves) b_over_n += (h.first - grand) * (h.first - grand);
    b_over_n /= (m - 1.0);

    const double var_plus = (n - 1.0) / n * w + b_over_n;
    return {std::max(1.0, std::sqrt(var_plus / w)), false};
}

namespace {

struct ScalarSpec {
    std::string name;
    double (*get)(const ParameterState&);
    bool monitored;  // enters the Rhat check ("all SDs")
};

std::vector<ScalarSpec> scalar_specs(const ScoreDataset& ds, const ModelConfig& cfg) {
    std::vector<ScalarSpec> specs;
    if (cfg.residuals == Residuals::homogeneous)
        specs.push_back({"sigma", [](const ParameterState& s) { return s.sigma; }, true});
    specs.push_back({"tau_theta", [](const ParameterState& s) { return s.tau_theta; }, true});
    specs.push_back({"tau_lambda", [](const ParameterState& s) { return s.tau_lambda; }, true});
    if (cfg.panel_effect)
        specs.push_back({"tau_delta", [](const ParameterState& s) { return s.tau_delta; }, true});
    if (cfg.residuals == Residuals::heterogeneous) {
        specs.push_back({"alpha", [](const ParameterState& s) { return s.alpha; }, false});
        specs.push_back({"beta", [](const ParameterState& s) { return s.beta; }, false});
        specs.push_back({"tau_omega", [](const ParameterState& s) { return s.tau_omega; }, true});
    }
    (void)ds;
    return specs;
}

// Ranks of theta within one draw: 1 = largest; exact ties broken by the
// lexicographic label order and counted.
void rank_of_theta(const std::vector<double>& theta, const std::vector<int>& tie_order,
                   std::vector<int>& scratch, std::vector<std::int32_t>& out,
                   std::int64_t& tie_count) {
    const int n = static_cast<int>(theta.size());
    scratch.resize(static_cast<std::size_t>(n));
    std::iota(scratch.begin(), scratch.end(), 0);
    std::sort(scratch.begin(), scratch.end(), [&](int a, int b) {
        const double ta = theta[static_cast<std::size_t>(a)];
        const double tb = theta[static_cast<std::size_t>(b)];
        if (ta != tb) return ta > tb;
        return tie_order[static_cast<std::size_t>(a)] < tie_order[static_cast<std::size_t>(b)];
    });
    out.resize(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos)
        out[static_cast<std::size_t>(scratch[static_cast<std::size_t>(pos)])] =
            static_cast<std::int32_t>(pos + 1);
    for (int pos = 1; pos < n; ++pos)
        if (theta[static_cast<std::size_t>(scratch[static_cast<std::size_t>(pos)])] ==
            theta[static_cast<std::size_t>(scratch[static_cast<std::size_t>(pos - 1)])])
            ++tie_count;
}

struct ChainResult {
    ChainDraws draws;
    std::int64_t tie_count = 0;
};

ChainResult run_chain(const ScoreDataset& ds, const ModelConfig& cfg, const PriorConfig& prior,
                      const McmcConfig& mcmc, std::uint64_t seed,
                      const std::vector<ScalarSpec>& specs) {
    ChainResult result;
    Rng rng(seed);
    ParameterState state = initial_state(ds, cfg, prior, rng);

    const std::int64_t n_retained = (mcmc.n_iter - mcmc.n_burnin) / mcmc.thin;
    auto& cd = result.draws;
    cd.seed = seed;
    cd.n_retained = static_cast<int>(n_retained);
    cd.iteration.reserve(static_cast<std::size_t>(n_retained));
    cd.theta.reserve(static_cast<std::size_t>(n_retained * ds.n_proposals()));
    cd.nu.reserve(static_cast<std::size_t>(n_retained * ds.n_assessors()));
    cd.rank.reserve(static_cast<std::size_t>(n_retained * ds.n_proposals()));
    for (const auto& spec : specs) cd.scalars.emplace_back(spec.name, std::vector<double>{});
    for (auto& [name, values] : cd.scalars) values.reserve(static_cast<std::size_t>(n_retained));

    std::vector<int> scratch;
    std::vector<std::int32_t> rank_row;
    const std::int64_t total_sweeps = mcmc.n_adapt + mcmc.n_iter;
    for (std::int64_t sweep = 1; sweep <= total_sweeps; ++sweep) {
        gibbs_sweep(state, ds, cfg, prior, rng);
        const std::int64_t offset = sweep - mcmc.n_adapt - mcmc.n_burnin;
        if (offset >= 1 && offset % mcmc.thin == 0) {
            cd.iteration.push_back(sweep - mcmc.n_adapt);
            cd.theta.insert(cd.theta.end(), state.theta.begin(), state.theta.end());
            cd.nu.insert(cd.nu.end(), state.nu.begin(), state.nu.end());
            rank_of_theta(state.theta, ds.proposal_tie_order(), scratch, rank_row,
                          result.tie_count);
            cd.rank.insert(cd.rank.end(), rank_row.begin(), rank_row.end());
            for (std::size_t s = 0; s < specs.size(); ++s)
                cd.scalars[s].second.push_back(specs[s].get(state));
        }
    }
    return result;
}

}  // namespace

int PosteriorDraws::total_retained() const {
    int total = 0;
    for (const auto& c : chains) total += c.n_retained;
    return total;
}

std::vector<double> PosteriorDraws::theta_draws(int proposal) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_retained()));
    for (const auto& c : chains)
        for (int d = 0; d < c.n_retained; ++d)
            out.push_back(c.theta[static_cast<std::size_t>(d) *
                                      static_cast<std::size_t>(n_proposals) +
                                  static_cast<std::size_t>(proposal)]);
    return out;
}

std::vector<double> PosteriorDraws::nu_draws(int assessor) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_retained()));
    for (const auto& c : chains)
        for (int d = 0; d < c.n_retained; ++d)
            out.push_back(c.nu[static_cast<std::size_t>(d) *
                                   static_cast<std::size_t>(n_assessors) +
                               static_cast<std::size_t>(assessor)]);
    return out;
}

std::vector<double> PosteriorDraws::scalar_draws(const std::string& name) const {
    std::vector<double> out;
    bool found = false;
    for (const auto& c : chains) {
        for (const auto& [n, values] : c.scalars) {
            if (n == name) {
                out.insert(out.end(), values.begin(), values.end());
                found = true;
            }
        }
    }
    if (!found) throw ValidationError("unknown scalar parameter '" + name + "'");
    return out;
}

std::vector<std::string> PosteriorDraws::scalar_names() const {
    std::vector<std::string> names;
    if (chains.empty()) return names;
    for (const auto& [n, values] : chains.front().scalars) names.push_back(n);
    return names;
}

PosteriorDraws run_sampler(const ScoreDataset& ds, const ModelConfig& model,
                           const PriorConfig& prior, const McmcConfig& mcmc, int n_threads) {
    validate(model);
    validate(prior);
    validate(mcmc);
    if (model.panel_effect && !ds.has_panels())
        throw ValidationError("panel_effect requires a dataset with panel identifiers");
    if (model.outcome == Outcome::ordinal && !ds.integer_scores())
        throw ValidationError("the ordinal model requires integer scores");
    if (model.outcome == Outcome::ordinal && ds.n_levels() > model.n_levels)
        throw ValidationError("dataset scale exceeds the configured number of levels");

    const auto specs = scalar_specs(ds, model);
    if (n_threads <= 0) n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;

    PosteriorDraws draws;
    draws.n_proposals = ds.n_proposals();
    draws.n_assessors = ds.n_assessors();
    draws.proposal_labels = ds.proposal_labels();
    draws.assessor_labels = ds.assessor_labels();

    McmcConfig budget = mcmc;
    std::int64_t total_used = 0;
    int attempt = 0;
    while (true) {
        ++attempt;
        std::vector<ChainResult> results(static_cast<std::size_t>(budget.n_chains));
        auto run_one = [&](int c) {
            const std::uint64_t seed = derive_seed(
                mcmc.master_seed,
                static_cast<std::uint64_t>(attempt - 1) * 8192ULL + static_cast<std::uint64_t>(c));
            results[static_cast<std::size_t>(c)] = run_chain(ds, model, prior, budget, seed, specs);
        };
        if (n_threads == 1 || budget.n_chains == 1) {
            for (int c = 0; c < budget.n_chains; ++c) run_one(c);
        } else {
            std::vector<std::thread> workers;
            workers.reserve(static_cast<std::size_t>(budget.n_chains));
            for (int c = 0; c < budget.n_chains; ++c) workers.emplace_back(run_one, c);
            for (auto& w : workers) w.join();
        }
        total_used += budget.n_adapt + budget.n_iter;

        draws.chains.clear();
        draws.theta_tie_count = 0;
        for (auto& r : results) {
            draws.theta_tie_count += r.tie_count;
            draws.chains.push_back(std::move(r.draws));
        }

        // Split-Rhat over the monitored set.
        draws.rhat.clear();
        bool any_degenerate = false;
        auto add_rhat = [&](const std::string& name, std::vector<std::vector<double>> series) {
            const RhatResult r = gelman_rubin(series);
            draws.rhat[name] = r.value;
            any_degenerate = any_degenerate || r.degenerate;
        };
        if (budget.n_chains >= 2 && draws.chains.front().n_retained >= 4) {
            for (int i = 0; i < ds.n_proposals(); ++i) {
                std::vector<std::vector<double>> series;
                for (const auto& c : draws.chains) {
                    std::vector<double> v(static_cast<std::size_t>(c.n_retained));
                    for (int d = 0; d < c.n_retained; ++d)
                        v[static_cast<std::size_t>(d)] =
                            c.theta[static_cast<std::size_t>(d) *
                                        static_cast<std::size_t>(ds.n_proposals()) +
                                    static_cast<std::size_t>(i)];
                    series.push_back(std::move(v));
                }
                add_rhat("theta[" + ds.proposal_labels()[static_cast<std::size_t>(i)] + "]",
                         std::move(series));
            }
            for (int j = 0; j < ds.n_assessors(); ++j) {
                std::vector<std::vector<double>> series;
                for (const auto& c : draws.chains) {
                    std::vector<double> v(static_cast<std::size_t>(c.n_retained));
                    for (int d = 0; d < c.n_retained; ++d)
                        v[static_cast<std::size_t>(d)] =
                            c.nu[static_cast<std::size_t>(d) *
                                     static_cast<std::size_t>(ds.n_assessors()) +
                                 static_cast<std::size_t>(j)];
                    series.push_back(std::move(v));
                }
                add_rhat("nu[" + ds.assessor_labels()[static_cast<std::size_t>(j)] + "]",
                         std::move(series));
            }
            for (std::size_t s = 0; s < specs.size(); ++s) {
                if (!specs[s].monitored) continue;
                std::vector<std::vector<double>> series;
                for (const auto& c : draws.chains) series.push_back(c.scalars[s].second);
                add_rhat(specs[s].name, std::move(series));
            }
        }
        if (any_degenerate)
            draws.warnings.push_back("degenerate (constant) chains in the Rhat check");

        draws.rhat_max = 0.0;
        for (const auto& [name, value] : draws.rhat) draws.rhat_max = std::max(draws.rhat_max, value);
        draws.attempts = attempt;
        draws.total_iterations = total_used;

        if (draws.rhat.empty()) {
            draws.converged = true;
            draws.warnings.push_back(
                "convergence check skipped: needs >= 2 chains and >= 4 retained draws");
            break;
        }
        if (draws.rhat_max <= mcmc.rhat_threshold) {
            draws.converged = true;
            break;
        }
        McmcConfig next = budget;
        next.n_iter *= mcmc.extension_factor;
        next.n_burnin *= mcmc.extension_factor;
        next.n_adapt *= mcmc.extension_factor;
        if (total_used + next.n_adapt + next.n_iter > mcmc.max_total_iter) {
            draws.converged = false;
            draws.warnings.push_back(
                "not converged: max Rhat " + fmt_double(draws.rhat_max) + " > " +
                fmt_double(mcmc.rhat_threshold) + " after " + std::to_string(total_used) +
                " iterations per chain (cap " + std::to_string(mcmc.max_total_iter) + ")");
            break;
        }
        budget = next;
    }
    return draws;
}

void write_draw_dump(const PosteriorDraws& draws, const std::filesystem::path& path) {
    Table table;
    table.header = {"chain", "iteration"};
    for (const auto& label : draws.proposal_labels) table.header.push_back("theta_" + label);
    for (const auto& name : draws.scalar_names()) table.header.push_back(name);
    for (std::size_t ci = 0; ci < draws.chains.size(); ++ci) {
        const auto& c = draws.chains[ci];
        for (int d = 0; d < c.n_retained; ++d) {
            std::vector<std::string> row;
            row.push_back(std::to_string(ci + 1));
            row.push_back(std::to_string(c.iteration[static_cast<std::size_t>(d)]));
            for (int i = 0; i < draws.n_proposals; ++i)
                row.push_back(fmt_double_exact(
                    c.theta[static_cast<std::size_t>(d) *
                                static_cast<std::size_t>(draws.n_proposals) +
                            static_cast<std::size_t>(i)]));
            for (const auto& [name, values] : c.scalars)
                row.push_back(fmt_double_exact(values[static_cast<std::size_t>(d)]));
            table.rows.push_back(std::move(row));
        }
    }
    write_csv(path, table);
}

}  // namespace erank
