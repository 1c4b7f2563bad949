#include "erank/config.hpp"

#include "erank/errors.hpp"

#include <fstream>
#include <stdexcept>

namespace erank {

void validate(const ModelConfig& cfg) {
    if (cfg.n_levels < 2) throw ValidationError("n_levels must be >= 2");
}

void validate(const PriorConfig& cfg) {
    if (!(cfg.sd_uniform_lower > 0.0) || !(cfg.sd_uniform_lower < cfg.sd_uniform_upper))
        throw ValidationError("SD prior support requires 0 < lower < upper");
    if (!(cfg.nu_prior_sd > 0.0) || !(cfg.scale_alpha_beta_sd > 0.0) ||
        !(cfg.tau_omega_upper > 0.0))
        throw ValidationError("prior standard deviations must be positive");
}

void validate(const McmcConfig& cfg) {
    if (cfg.n_chains < 1 || cfg.n_iter < 1 || cfg.n_burnin < 0 || cfg.n_adapt < 0 ||
        cfg.thin < 1 || cfg.extension_factor < 2)
        throw ValidationError("chain counts and iteration budgets must be positive");
    if (cfg.n_burnin >= cfg.n_iter)
        throw ValidationError("n_burnin must be smaller than n_iter (nothing would be retained)");
    if (!(cfg.rhat_threshold > 1.0)) throw ValidationError("rhat_threshold must exceed 1");
    if (cfg.max_total_iter < cfg.n_iter)
        throw ValidationError("max_total_iter must be at least n_iter");
}

std::string to_string(Outcome outcome) {
    return outcome == Outcome::continuous ? "continuous" : "ordinal";
}

std::string to_string(Residuals residuals) {
    return residuals == Residuals::homogeneous ? "homogeneous" : "heterogeneous";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "continuous") return Outcome::continuous;
    if (s == "ordinal") return Outcome::ordinal;
    throw ValidationError("unknown outcome '" + s + "' (continuous|ordinal)");
}

Residuals residuals_from_string(const std::string& s) {
    if (s == "homogeneous") return Residuals::homogeneous;
    if (s == "heterogeneous") return Residuals::heterogeneous;
    throw ValidationError("unknown residuals '" + s + "' (homogeneous|heterogeneous)");
}

namespace {

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("expected boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "outcome") {
            cfg.model.outcome = outcome_from_string(value);
        } else if (key == "residuals") {
            cfg.model.residuals = residuals_from_string(value);
        } else if (key == "panel_effect") {
            cfg.model.panel_effect = parse_bool(value);
        } else if (key == "n_levels") {
            cfg.model.n_levels = std::stoi(value);
        } else if (key == "sd_uniform_lower") {
            cfg.prior.sd_uniform_lower = std::stod(value);
        } else if (key == "sd_uniform_upper") {
            cfg.prior.sd_uniform_upper = std::stod(value);
        } else if (key == "nu_prior_sd") {
            cfg.prior.nu_prior_sd = std::stod(value);
        } else if (key == "scale_alpha_beta_sd") {
            cfg.prior.scale_alpha_beta_sd = std::stod(value);
        } else if (key == "tau_omega_upper") {
            cfg.prior.tau_omega_upper = std::stod(value);
        } else if (key == "n_chains") {
            cfg.mcmc.n_chains = std::stoi(value);
        } else if (key == "n_iter") {
            cfg.mcmc.n_iter = std::stoll(value);
        } else if (key == "n_burnin") {
            cfg.mcmc.n_burnin = std::stoll(value);
        } else if (key == "n_adapt") {
            cfg.mcmc.n_adapt = std::stoll(value);
        } else if (key == "thin") {
            cfg.mcmc.thin = std::stoi(value);
        } else if (key == "master_seed") {
            cfg.mcmc.master_seed = std::stoull(value);
        } else if (key == "rhat_threshold") {
            cfg.mcmc.rhat_threshold = std::stod(value);
        } else if (key == "max_total_iter") {
            cfg.mcmc.max_total_iter = std::stoll(value);
        } else if (key == "extension_factor") {
            cfg.mcmc.extension_factor = std::stoi(value);
        } else {
            throw ValidationError("unknown config key '" + key + "'");
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError("bad value '" + value + "' for config key '" + key + "'");
    }
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected `key = value`");
        apply_config_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["outcome"] = to_string(cfg.model.outcome);
    j["residuals"] = to_string(cfg.model.residuals);
    j["panel_effect"] = cfg.model.panel_effect;
    j["n_levels"] = cfg.model.n_levels;
    j["sd_uniform_lower"] = cfg.prior.sd_uniform_lower;
    j["sd_uniform_upper"] = cfg.prior.sd_uniform_upper;
    j["nu_prior_sd"] = cfg.prior.nu_prior_sd;
    j["scale_alpha_beta_sd"] = cfg.prior.scale_alpha_beta_sd;
    j["tau_omega_upper"] = cfg.prior.tau_omega_upper;
    j["n_chains"] = cfg.mcmc.n_chains;
    j["n_iter"] = cfg.mcmc.n_iter;
    j["n_burnin"] = cfg.mcmc.n_burnin;
    j["n_adapt"] = cfg.mcmc.n_adapt;
    j["thin"] = cfg.mcmc.thin;
    j["master_seed"] = cfg.mcmc.master_seed;
    j["rhat_threshold"] = cfg.mcmc.rhat_threshold;
    j["max_total_iter"] = cfg.mcmc.max_total_iter;
    j["extension_factor"] = cfg.mcmc.extension_factor;
    return j;
}

RunConfig config_from_json(const nlohmann::ordered_json& j, RunConfig base) {
    for (const auto& [key, value] : j.items()) {
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else {
            text = value.dump();
        }
        apply_config_key(base, key, text);
    }
    return base;
}

}  // namespace erank
