#pragma once

#include "erank/config.hpp"
#include "erank/data.hpp"
#include "erank/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace erank {

// One MCMC state of the hierarchical model. lambda and latent are indexed like
// ScoreDataset::observations() (one entry per observed cell).
struct ParameterState {
    std::vector<double> theta;    // proposal effects
    std::vector<double> lambda;   // per-cell assessor deviations, prior N(nu_j, tau_lambda^2)
    std::vector<double> nu;       // assessor means
    std::vector<double> delta;    // panel effects (empty unless panel_effect)
    double sigma = 1.0;           // residual SD (homogeneous variant)
    double tau_theta = 1.0;
    double tau_lambda = 1.0;
    double tau_delta = 1.0;
    std::vector<double> cutoffs;  // ordinal: c_1..c_{K-1}, strictly increasing
    std::vector<double> latent;   // ordinal: latent trait estimate per cell
    double alpha = 0.0;           // heterogeneous: log-variance intercept
    double beta = 0.0;            // heterogeneous: slope on log mean score
    double tau_omega = 5.0;
    std::vector<double> omega;    // heterogeneous: extra per-proposal log-variance effects
};

// Complete-data log-likelihood: Gaussian density of the observed score
// (continuous) or of the latent variable (ordinal) at mean
// grand_mean + theta_i + lambda_ij (+ delta_k) with the variant's residual SD.
double log_likelihood(const ParameterState& state, const ScoreDataset& ds,
                      const ModelConfig& cfg);

ParameterState initial_state(const ScoreDataset& ds, const ModelConfig& cfg,
                             const PriorConfig& prior, Rng& rng);

// Single-block updates, exposed so tests can drive one full conditional at a
// time. Each performs one sweep over its block given the rest of the state.
void update_theta(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng);
void update_lambda(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                   const PriorConfig& prior, Rng& rng);
void update_nu(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
               const PriorConfig& prior, Rng& rng);
void update_delta(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng);
void update_sigma(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                  const PriorConfig& prior, Rng& rng);
void update_tau_theta(ParameterState& state, const PriorConfig& prior, Rng& rng);
void update_tau_lambda(ParameterState& state, const ScoreDataset& ds, const PriorConfig& prior,
                       Rng& rng);
void update_tau_delta(ParameterState& state, const PriorConfig& prior, Rng& rng);
void update_latents(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                    Rng& rng);
void update_cutoffs(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                    Rng& rng);
void update_scale_params(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                         const PriorConfig& prior, Rng& rng);
void update_tau_omega(ParameterState& state, const PriorConfig& prior, Rng& rng);

// One full Metropolis-within-Gibbs sweep, in place.
void gibbs_sweep(ParameterState& state, const ScoreDataset& ds, const ModelConfig& cfg,
                 const PriorConfig& prior, Rng& rng);

// Value-semantics wrapper around gibbs_sweep.
ParameterState gibbs_step(const ParameterState& state, const ScoreDataset& ds,
                          const ModelConfig& cfg, const PriorConfig& prior, Rng& rng);

struct RhatResult {
    double value = 1.0;
    bool degenerate = false;  // zero within-chain variance
};

// Split-Rhat: every chain is halved before the between/within variance
// computation. Values below 1 are finite-sample noise and are reported as 1.
RhatResult gelman_rubin(const std::vector<std::vector<double>>& chains);

struct ChainDraws {
    std::uint64_t seed = 0;
    int n_retained = 0;
    std::vector<std::int64_t> iteration;            // sweep index within the chain (adapt excluded)
    std::vector<double> theta;                      // n_retained x n_proposals, row-major
    std::vector<double> nu;                         // n_retained x n_assessors, row-major
    std::vector<std::int32_t> rank;                 // n_retained x n_proposals; 1 = largest theta
    std::vector<std::pair<std::string, std::vector<double>>> scalars;
};

struct PosteriorDraws {
    int n_proposals = 0;
    int n_assessors = 0;
    std::vector<std::string> proposal_labels, assessor_labels;
    std::vector<ChainDraws> chains;

    bool converged = false;
    int attempts = 0;
    std::int64_t total_iterations = 0;  // cumulative per-chain sweeps over all attempts
    double rhat_max = 0.0;
    std::map<std::string, double> rhat;
    std::vector<std::string> warnings;
    std::int64_t theta_tie_count = 0;

    int total_retained() const;
    std::vector<double> theta_draws(int proposal) const;   // merged across chains
    std::vector<double> nu_draws(int assessor) const;
    std::vector<double> scalar_draws(const std::string& name) const;
    std::vector<std::string> scalar_names() const;
};

// Runs n_chains chains (adapt + burn-in + sampling), checks split-Rhat over the
// monitored set (all theta, all nu, the SD parameters), and on failure scales
// the whole budget by extension_factor and reruns until converged or the
// cumulative per-chain iteration count would exceed max_total_iter. Exhausting
// the budget is not an error: the result carries converged=false and a warning.
PosteriorDraws run_sampler(const ScoreDataset& ds, const ModelConfig& model,
                           const PriorConfig& prior, const McmcConfig& mcmc, int n_threads = 0);

// Draw-dump file: one row per retained draw with chain id, iteration, theta
// vector and the scalar parameters; full-precision CSV.
void write_draw_dump(const PosteriorDraws& draws, const std::filesystem::path& path);

}  // namespace erank
