#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace erank {

enum class Outcome { continuous, ordinal };
enum class Residuals { homogeneous, heterogeneous };

struct ModelConfig {
    Outcome outcome = Outcome::continuous;
    Residuals residuals = Residuals::homogeneous;
    bool panel_effect = false;
    int n_levels = 6;
};

// Hyper-prior constants. SD parameters get uniform priors on
// (sd_uniform_lower, sd_uniform_upper]; assessor means are N(0, nu_prior_sd^2);
// the location-scale intercept/slope are N(0, scale_alpha_beta_sd^2) and
// tau_omega is uniform on (0, tau_omega_upper].
struct PriorConfig {
    double sd_uniform_lower = 1e-6;
    double sd_uniform_upper = 2.0;
    double nu_prior_sd = 0.5;
    double scale_alpha_beta_sd = 10.0;
    double tau_omega_upper = 10.0;
};

// Chain controls. n_iter includes the burn-in, so each chain retains
// (n_iter - n_burnin) / thin draws. If the post-run split-Rhat check fails,
// the whole budget is scaled by extension_factor and the sampler reruns until
// it converges or the cumulative per-chain iteration count would exceed
// max_total_iter.
struct McmcConfig {
    int n_chains = 4;
    std::int64_t n_iter = 10000;
    std::int64_t n_burnin = 5000;
    std::int64_t n_adapt = 5000;
    int thin = 1;
    std::uint64_t master_seed = 1;
    double rhat_threshold = 1.1;
    std::int64_t max_total_iter = 1000000;
    int extension_factor = 2;
};

struct RunConfig {
    ModelConfig model;
    PriorConfig prior;
    McmcConfig mcmc;
};

void validate(const ModelConfig& cfg);
void validate(const PriorConfig& cfg);
void validate(const McmcConfig& cfg);

std::string to_string(Outcome outcome);
std::string to_string(Residuals residuals);
Outcome outcome_from_string(const std::string& s);
Residuals residuals_from_string(const std::string& s);

// Flat key-value config file: one `key = value` per line, `#` comments,
// all keys optional. Unknown keys are rejected.
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

nlohmann::ordered_json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::ordered_json& j, RunConfig base = {});

}  // namespace erank
