// erank: Bayesian ranking of panel evaluation scores with expected ranks,
// funding-line partition with random selection, reliability diagnostics and a
// ranking-method simulation study.
#include "erank/config.hpp"
#include "erank/csv.hpp"
#include "erank/data.hpp"
#include "erank/decision.hpp"
#include "erank/diagnostics.hpp"
#include "erank/errors.hpp"
#include "erank/manifest.hpp"
#include "erank/mcmc.hpp"
#include "erank/ranking.hpp"
#include "erank/simstudy.hpp"
#include "erank/stats.hpp"
#include "erank/svg.hpp"
#include "erank/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNonConverged = 3;
constexpr int kExitInternal = 4;
constexpr int kExitLotteryHeld = 5;

std::string sanitize(const std::string& label) {
    std::string out;
    for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
    return out.empty() ? "_" : out;
}

ordered_json input_entry(const std::string& role, const fs::path& path) {
    return {{"role", role}, {"path", path.string()}, {"sha256", erank::sha256_file(path)}};
}

ordered_json output_inventory(const std::vector<fs::path>& files) {
    ordered_json arr = ordered_json::array();
    for (const auto& f : files)
        arr.push_back({{"path", f.string()}, {"sha256", erank::sha256_file(f)}});
    return arr;
}

struct RankOptions {
    std::string scores;
    std::string config_file;
    std::string out_dir;
    int budget = 0;  // 0 = no funding line
    double cri_level = 0.5;
    bool merge_panels = false;
    bool dump_draws = false;
    bool rankograms = false;
    bool pcer_plot = false;
    bool real_scores = false;
    int threads = 0;
    erank::RunConfig config;
};

struct DecideOptions {
    std::string summary;
    std::string out_dir;
    int budget = 0;
    std::uint64_t seed = 1;
};

struct SimulateOptions {
    std::string out_dir;
    erank::SimScenario scenario;
    std::vector<std::string> methods{"all"};
    erank::McmcConfig mcmc = erank::StudyOptions::study_mcmc_defaults();
    erank::PriorConfig prior;
    std::uint64_t seed = 1;
    int threads = 0;
    bool details = false;
};

struct DiagnoseOptions {
    std::string scores;
    std::string draws;
    std::string config_file;
    std::string out_dir;
    std::string icc_variant = "one_way";
    std::string trace;
    bool merge_panels = false;
    bool real_scores = false;
    int threads = 0;
    erank::RunConfig config;
};

erank::IccVariant icc_variant_from_string(const std::string& s) {
    if (s == "one_way") return erank::IccVariant::one_way;
    if (s == "two_way_consistency") return erank::IccVariant::two_way_consistency;
    if (s == "two_way_agreement") return erank::IccVariant::two_way_agreement;
    throw erank::ValidationError("unknown ICC variant '" + s + "'");
}

std::vector<erank::RankMethod> parse_methods(const std::vector<std::string>& names) {
    std::vector<erank::RankMethod> methods;
    for (const auto& name : names) {
        if (name == "all") {
            for (auto m : erank::all_rank_methods()) methods.push_back(m);
            continue;
        }
        bool found = false;
        for (auto m : erank::all_rank_methods()) {
            if (erank::to_string(m) == name) {
                methods.push_back(m);
                found = true;
                break;
            }
        }
        if (!found) throw erank::ValidationError("unknown method '" + name + "'");
    }
    return methods;
}

ordered_json rank_run_info(const erank::PosteriorDraws& draws) {
    ordered_json info;
    info["converged"] = draws.converged;
    info["attempts"] = draws.attempts;
    info["total_iterations_per_chain"] = draws.total_iterations;
    info["rhat_max"] = draws.rhat_max;
    info["theta_tie_count"] = draws.theta_tie_count;
    info["warnings"] = draws.warnings;
    return info;
}

// ---------------------------------------------------------------------------
// rank

int run_rank(const RankOptions& opt) {
    fs::create_directories(opt.out_dir);
    erank::LoadOptions load;
    load.n_levels = opt.config.model.n_levels;
    load.allow_real_scores = opt.real_scores;
    const erank::ScoreDataset full = erank::load_scores(opt.scores, load);

    if (opt.merge_panels && !full.has_panels())
        throw erank::ValidationError("--merge-panels requires a panel column");

    struct Fit {
        std::string name;  // "" for the single merged/plain fit
        fs::path dir;
        erank::ScoreDataset ds;
    };
    std::vector<Fit> fits;
    const bool per_panel = full.has_panels() && !opt.merge_panels && full.n_panels() > 1;
    if (per_panel) {
        for (int k = 0; k < full.n_panels(); ++k)
            fits.push_back({full.panel_labels()[static_cast<std::size_t>(k)],
                            fs::path(opt.out_dir) /
                                ("panel_" + sanitize(full.panel_labels()[
                                     static_cast<std::size_t>(k)])),
                            full.panel_subset(k)});
    } else {
        fits.push_back({"", fs::path(opt.out_dir), full});
    }

    erank::RunConfig cfg = opt.config;
    cfg.model.panel_effect = opt.merge_panels && full.has_panels();

    std::vector<fs::path> outputs;
    ordered_json run_info = ordered_json::object();
    bool all_converged = true;
    for (const auto& fit : fits) {
        fs::create_directories(fit.dir);
        const erank::PosteriorDraws draws =
            erank::run_sampler(fit.ds, cfg.model, cfg.prior, cfg.mcmc, opt.threads);
        all_converged = all_converged && draws.converged;
        const erank::RankingSummary summary =
            erank::summarize_ranking(draws, fit.ds, opt.cri_level);

        const fs::path summary_path = fit.dir / "summary.csv";
        erank::write_summary_csv(summary, summary_path);
        outputs.push_back(summary_path);

        std::optional<erank::FundingDecision> provisional;
        if (opt.budget > 0) {
            const double fl = erank::provisional_funding_line(summary, opt.budget);
            provisional = erank::partition(summary, fl, opt.budget);
        }
        const fs::path plot_path = fit.dir / "er_plot.svg";
        const std::string title =
            fit.name.empty() ? "expected ranks" : "expected ranks: " + fit.name;
        erank::write_er_plot_svg(summary, provisional ? &*provisional : nullptr, plot_path,
                                 title);
        outputs.push_back(plot_path);

        if (opt.rankograms) {
            const fs::path p = fit.dir / "rankograms.svg";
            erank::write_rankogram_svg(summary, p, "rankograms");
            outputs.push_back(p);
        }
        if (opt.pcer_plot) {
            const fs::path p = fit.dir / "pcer.svg";
            erank::write_pcer_svg(summary, p, "percentiles (PCER)");
            outputs.push_back(p);
        }
        if (opt.dump_draws) {
            const fs::path p = fit.dir / "draws.csv";
            erank::write_draw_dump(draws, p);
            outputs.push_back(p);
        }
        run_info[fit.name.empty() ? "fit" : fit.name] = rank_run_info(draws);
    }

    erank::RunManifest manifest;
    manifest.command = "rank";
    manifest.version = ERANK_VERSION;
    manifest.timestamp_utc = erank::utc_timestamp();
    manifest.master_seed = cfg.mcmc.master_seed;
    manifest.parameters["scores"] = opt.scores;
    if (!opt.config_file.empty()) manifest.parameters["config_file"] = opt.config_file;
    manifest.parameters["out_dir"] = opt.out_dir;
    manifest.parameters["budget"] = opt.budget;
    manifest.parameters["cri_level"] = opt.cri_level;
    manifest.parameters["merge_panels"] = opt.merge_panels;
    manifest.parameters["dump_draws"] = opt.dump_draws;
    manifest.parameters["rankograms"] = opt.rankograms;
    manifest.parameters["pcer_plot"] = opt.pcer_plot;
    manifest.parameters["real_scores"] = opt.real_scores;
    manifest.parameters["config"] = erank::config_to_json(cfg);
    manifest.inputs.push_back(input_entry("scores", opt.scores));
    if (!opt.config_file.empty()) manifest.inputs.push_back(input_entry("config", opt.config_file));
    manifest.outputs = output_inventory(outputs);
    manifest.run_info = run_info;
    erank::write_manifest(manifest, fs::path(opt.out_dir) / "manifest.json");

    if (!all_converged) {
        std::cerr << "warning: sampler did not converge within the iteration cap; outputs "
                     "written, see manifest run_info\n";
        return kExitNonConverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// decide

int run_decide(const DecideOptions& opt) {
    fs::create_directories(opt.out_dir);
    const erank::RankingSummary summary = erank::read_summary_csv(opt.summary);
    const erank::FundingDecision decision = erank::decide(summary, opt.budget, opt.seed);

    const fs::path csv_path = fs::path(opt.out_dir) / "decision.csv";
    const fs::path json_path = fs::path(opt.out_dir) / "decision.json";
    erank::write_decision_csv(summary, decision, csv_path);
    erank::write_decision_json(summary, decision, json_path);

    erank::RunManifest manifest;
    manifest.command = "decide";
    manifest.version = ERANK_VERSION;
    manifest.timestamp_utc = erank::utc_timestamp();
    manifest.master_seed = opt.seed;
    manifest.parameters["summary"] = opt.summary;
    manifest.parameters["out_dir"] = opt.out_dir;
    manifest.parameters["budget"] = opt.budget;
    manifest.parameters["seed"] = opt.seed;
    manifest.inputs.push_back(input_entry("summary", opt.summary));
    manifest.outputs = output_inventory({csv_path, json_path});
    manifest.run_info["lottery_held"] = decision.lottery_held;
    manifest.run_info["funding_line"] = decision.funding_line;
    manifest.run_info["warnings"] = decision.warnings;
    erank::write_manifest(manifest, fs::path(opt.out_dir) / "manifest.json");

    std::cout << "funding line " << erank::fmt_double(decision.funding_line) << ", "
              << decision.funded.size() << " funded outright, lottery "
              << (decision.lottery_held
                      ? "of " + std::to_string(decision.lottery_group.size()) + " for " +
                            std::to_string(decision.lottery_winners.size()) + " slot(s)"
                      : "not needed")
              << ", " << decision.rejected.size() << " rejected\n";
    return decision.lottery_held ? kExitLotteryHeld : kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const SimulateOptions& opt) {
    fs::create_directories(opt.out_dir);
    erank::StudyOptions study;
    study.methods = parse_methods(opt.methods);
    study.mcmc = opt.mcmc;
    study.prior = opt.prior;
    study.n_threads = opt.threads;
    const erank::StudyResult result = erank::compare_methods(opt.scenario, study, opt.seed);

    const fs::path study_path = fs::path(opt.out_dir) / "study.csv";
    erank::write_study_csv(result, study_path);
    std::vector<fs::path> outputs{study_path};
    if (opt.details) {
        erank::Table detail;
        detail.header = {"replicate"};
        for (const auto& m : result.methods) detail.header.push_back(erank::to_string(m.method));
        for (int rep = 0; rep < opt.scenario.n_replications; ++rep) {
            std::vector<std::string> row{std::to_string(rep)};
            for (std::size_t mi = 0; mi < result.methods.size(); ++mi)
                row.push_back(erank::fmt_double(
                    result.per_replicate_mse[mi][static_cast<std::size_t>(rep)]));
            detail.rows.push_back(std::move(row));
        }
        const fs::path detail_path = fs::path(opt.out_dir) / "study_replicates.csv";
        erank::write_csv(detail_path, detail);
        outputs.push_back(detail_path);
    }

    erank::RunManifest manifest;
    manifest.command = "simulate";
    manifest.version = ERANK_VERSION;
    manifest.timestamp_utc = erank::utc_timestamp();
    manifest.master_seed = opt.seed;
    manifest.parameters["out_dir"] = opt.out_dir;
    manifest.parameters["seed"] = opt.seed;
    manifest.parameters["details"] = opt.details;
    ordered_json methods = ordered_json::array();
    for (const auto& m : study.methods) methods.push_back(erank::to_string(m));
    manifest.parameters["methods"] = methods;
    ordered_json scen;
    scen["proposals"] = opt.scenario.n_proposals;
    scen["assessors"] = opt.scenario.n_assessors;
    scen["alpha_lo"] = opt.scenario.alpha_lo;
    scen["alpha_hi"] = opt.scenario.alpha_hi;
    scen["sigma_lo"] = opt.scenario.sigma_lo;
    scen["sigma_hi"] = opt.scenario.sigma_hi;
    scen["sigma_last"] = opt.scenario.sigma_last;
    scen["tau_theta_true"] = opt.scenario.tau_theta_true;
    scen["cutoffs"] = opt.scenario.cutoffs;
    scen["missing_lo"] = opt.scenario.missing_lo;
    scen["missing_hi"] = opt.scenario.missing_hi;
    scen["replications"] = opt.scenario.n_replications;
    scen["corrected_variance"] = opt.scenario.corrected_variance;
    manifest.parameters["scenario"] = scen;
    erank::RunConfig echo;
    echo.mcmc = opt.mcmc;
    echo.prior = opt.prior;
    manifest.parameters["config"] = erank::config_to_json(echo);
    manifest.outputs = output_inventory(outputs);
    int total_nonconverged = 0;
    for (const auto& m : result.methods) total_nonconverged += m.n_nonconverged;
    manifest.run_info["non_converged_fits"] = total_nonconverged;
    erank::write_manifest(manifest, fs::path(opt.out_dir) / "manifest.json");

    for (const auto& m : result.methods)
        std::cout << erank::to_string(m.method) << ": MSE " << erank::fmt_double(m.mse) << " (SE "
                  << erank::fmt_double(m.monte_carlo_se) << ", " << m.n_nonconverged
                  << " non-converged)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// diagnose

int run_diagnose(const DiagnoseOptions& opt) {
    fs::create_directories(opt.out_dir);
    std::vector<fs::path> outputs;
    erank::RunManifest manifest;
    manifest.command = "diagnose";
    manifest.version = ERANK_VERSION;
    manifest.timestamp_utc = erank::utc_timestamp();
    manifest.parameters["out_dir"] = opt.out_dir;
    bool all_converged = true;

    if (!opt.draws.empty()) {
        // Recompute the convergence table from a draw dump.
        const erank::Table dump = erank::read_csv(opt.draws);
        const int chain_col = dump.column("chain");
        const int iter_col = dump.column("iteration");
        if (chain_col < 0 || iter_col < 0)
            throw erank::ValidationError("draw dump needs chain and iteration columns");
        std::map<std::string, std::map<int, std::vector<double>>> series;
        for (const auto& row : dump.rows) {
            const int chain = std::stoi(row.at(static_cast<std::size_t>(chain_col)));
            for (std::size_t col = 0; col < dump.header.size(); ++col) {
                if (static_cast<int>(col) == chain_col || static_cast<int>(col) == iter_col)
                    continue;
                series[dump.header[col]][chain].push_back(std::stod(row.at(col)));
            }
        }
        erank::Table rhat;
        rhat.header = {"parameter", "rhat"};
        for (const auto& [name, chains] : series) {
            std::vector<std::vector<double>> v;
            for (const auto& [chain, values] : chains) v.push_back(values);
            rhat.rows.push_back({name, erank::fmt_double(erank::gelman_rubin(v).value)});
        }
        const fs::path rhat_path = fs::path(opt.out_dir) / "rhat.csv";
        erank::write_csv(rhat_path, rhat);
        outputs.push_back(rhat_path);
        manifest.parameters["draws"] = opt.draws;
        manifest.inputs.push_back(input_entry("draws", opt.draws));
    } else {
        erank::LoadOptions load;
        load.n_levels = opt.config.model.n_levels;
        load.allow_real_scores = opt.real_scores;
        const erank::ScoreDataset full = erank::load_scores(opt.scores, load);
        manifest.parameters["scores"] = opt.scores;
        if (!opt.config_file.empty()) {
            manifest.parameters["config_file"] = opt.config_file;
            manifest.inputs.push_back(input_entry("config", opt.config_file));
        }
        manifest.parameters["icc_variant"] = opt.icc_variant;
        manifest.parameters["merge_panels"] = opt.merge_panels;
        manifest.parameters["real_scores"] = opt.real_scores;
        if (!opt.trace.empty()) manifest.parameters["trace"] = opt.trace;
        manifest.parameters["config"] = erank::config_to_json(opt.config);
        manifest.inputs.push_back(input_entry("scores", opt.scores));

        struct Piece {
            std::string name;
            erank::ScoreDataset ds;
        };
        std::vector<Piece> pieces;
        const bool per_panel = full.has_panels() && !opt.merge_panels && full.n_panels() > 1;
        if (per_panel) {
            for (int k = 0; k < full.n_panels(); ++k)
                pieces.push_back({full.panel_labels()[static_cast<std::size_t>(k)],
                                  full.panel_subset(k)});
        } else {
            pieces.push_back({"all", full});
        }

        erank::Table icc_table;
        icc_table.header = {"panel",    "variant",  "icc",
                            "ci_lower", "ci_upper", "missing_fraction",
                            "degenerate"};
        erank::Table rhat_table;
        rhat_table.header = {"panel", "parameter", "rhat"};
        erank::Table nu_table;
        nu_table.header = {"panel", "assessor", "mean", "sd", "q05", "q50", "q95"};
        std::ofstream report(fs::path(opt.out_dir) / "diagnostics.txt", std::ios::binary);
        report << "diagnostics report (erank " << ERANK_VERSION << ")\n";

        erank::RunConfig cfg = opt.config;
        cfg.model.panel_effect = opt.merge_panels && full.has_panels();
        const erank::IccVariant variant = icc_variant_from_string(opt.icc_variant);

        for (const auto& piece : pieces) {
            if (piece.ds.n_proposals() >= 2 && piece.ds.n_assessors() >= 2) {
                const erank::IccResult r = erank::icc(piece.ds, variant);
                icc_table.rows.push_back({piece.name, erank::to_string(r.variant),
                                          erank::fmt_double(r.icc),
                                          erank::fmt_double(r.ci_lower),
                                          erank::fmt_double(r.ci_upper),
                                          erank::fmt_double(r.missing_fraction),
                                          r.degenerate ? "true" : "false"});
                report << piece.name << ": ICC " << erank::fmt_double(r.icc) << " ("
                       << erank::fmt_double(r.ci_lower) << "; " << erank::fmt_double(r.ci_upper)
                       << ")";
                if (r.high_missingness)
                    report << "  [>10% of cells missing; interpret with care]";
                report << "\n";
            } else {
                report << piece.name << ": ICC skipped (needs >= 2 proposals and assessors)\n";
            }

            const erank::PosteriorDraws draws =
                erank::run_sampler(piece.ds, cfg.model, cfg.prior, cfg.mcmc, opt.threads);
            all_converged = all_converged && draws.converged;
            for (const auto& [param, value] : draws.rhat)
                rhat_table.rows.push_back({piece.name, param, erank::fmt_double(value)});
            report << piece.name << ": max Rhat " << erank::fmt_double(draws.rhat_max)
                   << (draws.converged ? " (converged)" : " (NOT converged)") << ", "
                   << draws.theta_tie_count << " rank ties\n";
            for (const auto& warning : draws.warnings)
                report << piece.name << ": warning: " << warning << "\n";

            for (int j = 0; j < piece.ds.n_assessors(); ++j) {
                const std::vector<double> nu = draws.nu_draws(j);
                nu_table.rows.push_back(
                    {piece.name, piece.ds.assessor_labels()[static_cast<std::size_t>(j)],
                     erank::fmt_double(erank::mean(nu)),
                     erank::fmt_double(std::sqrt(erank::variance(nu))),
                     erank::fmt_double(erank::sample_quantile(nu, 0.05)),
                     erank::fmt_double(erank::sample_quantile(nu, 0.50)),
                     erank::fmt_double(erank::sample_quantile(nu, 0.95))});
            }
            if (!opt.trace.empty()) {
                const erank::TraceTable trace = erank::trace_export(draws, opt.trace);
                erank::Table t;
                t.header = {"chain", "iteration", "value"};
                for (std::size_t r = 0; r < trace.value.size(); ++r)
                    t.rows.push_back({std::to_string(trace.chain[r]),
                                      std::to_string(trace.iteration[r]),
                                      erank::fmt_double_exact(trace.value[r])});
                const fs::path trace_path =
                    fs::path(opt.out_dir) / ("trace_" + sanitize(piece.name) + "_" +
                                             sanitize(opt.trace) + ".csv");
                erank::write_csv(trace_path, t);
                outputs.push_back(trace_path);
            }
        }

        const fs::path icc_path = fs::path(opt.out_dir) / "icc.csv";
        const fs::path rhat_path = fs::path(opt.out_dir) / "rhat.csv";
        const fs::path nu_path = fs::path(opt.out_dir) / "nu_summary.csv";
        erank::write_csv(icc_path, icc_table);
        erank::write_csv(rhat_path, rhat_table);
        erank::write_csv(nu_path, nu_table);
        outputs.push_back(icc_path);
        outputs.push_back(rhat_path);
        outputs.push_back(nu_path);
        outputs.push_back(fs::path(opt.out_dir) / "diagnostics.txt");
        manifest.master_seed = cfg.mcmc.master_seed;
    }

    manifest.outputs = output_inventory(outputs);
    manifest.run_info["converged"] = all_converged;
    erank::write_manifest(manifest, fs::path(opt.out_dir) / "manifest.json");
    return all_converged ? kExitOk : kExitNonConverged;
}

// ---------------------------------------------------------------------------
// replay

int dispatch_replay(const std::string& manifest_path, const std::string& out_dir);

// ---------------------------------------------------------------------------
// flag plumbing

void add_mcmc_flags(CLI::App* cmd, erank::RunConfig& cfg) {
    cmd->add_option("--seed", cfg.mcmc.master_seed, "master seed for all randomness");
    cmd->add_option("--chains", cfg.mcmc.n_chains, "number of chains");
    cmd->add_option("--iters", cfg.mcmc.n_iter, "sampling iterations per chain (incl. burn-in)");
    cmd->add_option("--burnin", cfg.mcmc.n_burnin, "burn-in iterations per chain");
    cmd->add_option("--adapt", cfg.mcmc.n_adapt, "adaptation iterations per chain");
    cmd->add_option("--thin", cfg.mcmc.thin, "thinning interval");
    cmd->add_option("--rhat-threshold", cfg.mcmc.rhat_threshold, "convergence threshold");
    cmd->add_option("--max-total-iter", cfg.mcmc.max_total_iter,
                    "cap on cumulative per-chain iterations");
}

void add_model_flags(CLI::App* cmd, erank::RunConfig& cfg) {
    cmd->add_option_function<std::string>(
           "--model", [&cfg](const std::string& s) { cfg.model.outcome = erank::outcome_from_string(s); },
           "outcome model: continuous|ordinal")
        ->type_name("TEXT");
    cmd->add_option_function<std::string>(
           "--residuals",
           [&cfg](const std::string& s) { cfg.model.residuals = erank::residuals_from_string(s); },
           "residuals: homogeneous|heterogeneous")
        ->type_name("TEXT");
    cmd->add_option("--levels", cfg.model.n_levels, "number of score levels (K)");
}

// The config file must be applied before CLI11 writes flag values into the
// bound fields (precedence: defaults < file < flags), so find it up front.
std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian ranking and funding-line decision support for panel scores"};
    app.set_version_flag("--version", ERANK_VERSION);
    app.require_subcommand(1);

    RankOptions rank_opt;
    DecideOptions decide_opt;
    SimulateOptions sim_opt;
    DiagnoseOptions diag_opt;
    std::string replay_manifest, replay_out;

    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) {
        try {
            rank_opt.config = erank::parse_config_file(config_path, rank_opt.config);
            diag_opt.config = rank_opt.config;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitValidation;
        }
    }

    auto* rank = app.add_subcommand("rank", "fit the model and write ranking summaries");
    rank->add_option("--scores", rank_opt.scores, "scores CSV (proposal,assessor[,panel],score)")
        ->required();
    rank->add_option("--config", rank_opt.config_file, "key=value config file");
    rank->add_option("--out-dir", rank_opt.out_dir, "output directory")->required();
    rank->add_option("--budget", rank_opt.budget, "number of fundable proposals (draws the FL)");
    rank->add_option("--cri-level", rank_opt.cri_level, "credible level for rank intervals");
    rank->add_flag("--merge-panels", rank_opt.merge_panels,
                   "fit one model with a panel effect instead of per-panel fits");
    rank->add_flag("--dump-draws", rank_opt.dump_draws, "write the retained draws to draws.csv");
    rank->add_flag("--rankograms", rank_opt.rankograms, "write rankogram small multiples");
    rank->add_flag("--pcer-plot", rank_opt.pcer_plot, "write the PCER plot");
    rank->add_flag("--real-scores", rank_opt.real_scores,
                   "accept non-integer scores (continuous model only)");
    rank->add_option("--threads", rank_opt.threads, "worker threads (0 = all cores)");
    add_model_flags(rank, rank_opt.config);
    add_mcmc_flags(rank, rank_opt.config);

    auto* decide = app.add_subcommand("decide", "fund/lottery/reject partition from a summary");
    decide->add_option("--summary", decide_opt.summary, "summary.csv from `rank`")->required();
    decide->add_option("--budget", decide_opt.budget, "number of fundable proposals")->required();
    decide->add_option("--seed", decide_opt.seed, "lottery seed");
    decide->add_option("--out-dir", decide_opt.out_dir, "output directory")->required();

    auto* simulate = app.add_subcommand("simulate", "ranking-method comparison study");
    simulate->add_option("--out-dir", sim_opt.out_dir, "output directory")->required();
    simulate->add_option("--replications", sim_opt.scenario.n_replications, "number of replicates");
    simulate->add_option("--seed", sim_opt.seed, "master seed");
    simulate->add_option("--methods", sim_opt.methods,
                         "methods to compare (all, average, br-normal-homogeneous, ...)")
        ->delimiter(',');
    simulate->add_option("--proposals", sim_opt.scenario.n_proposals, "proposals per replicate");
    simulate->add_option("--assessors", sim_opt.scenario.n_assessors, "assessors per replicate");
    simulate->add_option("--sigma-last", sim_opt.scenario.sigma_last,
                         "spread parameter of the last assessor");
    simulate->add_option("--missing-max", sim_opt.scenario.missing_hi,
                         "upper bound on blanked cells");
    simulate->add_flag("--corrected-variance", sim_opt.scenario.corrected_variance,
                       "use sigma_j (not sigma_j^2) as the generator SD");
    simulate->add_option("--threads", sim_opt.threads, "worker threads (0 = all cores)");
    simulate->add_flag("--details", sim_opt.details, "write per-replicate MSE table");
    simulate->add_option("--chains", sim_opt.mcmc.n_chains, "chains per fit");
    simulate->add_option("--iters", sim_opt.mcmc.n_iter, "iterations per chain (incl. burn-in)");
    simulate->add_option("--burnin", sim_opt.mcmc.n_burnin, "burn-in per chain");
    simulate->add_option("--adapt", sim_opt.mcmc.n_adapt, "adaptation per chain");
    simulate->add_option("--max-total-iter", sim_opt.mcmc.max_total_iter,
                         "cap on cumulative per-chain iterations (default: no extensions)");

    auto* diagnose = app.add_subcommand("diagnose", "reliability and convergence diagnostics");
    auto* diag_scores = diagnose->add_option("--scores", diag_opt.scores, "scores CSV");
    diagnose->add_option("--draws", diag_opt.draws, "draw dump from `rank --dump-draws`")
        ->excludes(diag_scores);
    diagnose->add_option("--config", diag_opt.config_file, "key=value config file");
    diagnose->add_option("--out-dir", diag_opt.out_dir, "output directory")->required();
    diagnose->add_option("--icc-variant", diag_opt.icc_variant,
                         "one_way|two_way_consistency|two_way_agreement");
    diagnose->add_option("--trace", diag_opt.trace, "export a trace table for one parameter");
    diagnose->add_flag("--merge-panels", diag_opt.merge_panels, "single fit with panel effect");
    diagnose->add_flag("--real-scores", diag_opt.real_scores, "accept non-integer scores");
    diagnose->add_option("--threads", diag_opt.threads, "worker threads (0 = all cores)");
    add_model_flags(diagnose, diag_opt.config);
    add_mcmc_flags(diagnose, diag_opt.config);

    auto* replay = app.add_subcommand("replay", "re-run a recorded command from its manifest");
    replay->add_option("--manifest", replay_manifest, "manifest.json of a previous run")
        ->required();
    replay->add_option("--out-dir", replay_out, "redirect outputs to a fresh directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (rank->parsed()) return run_rank(rank_opt);
        if (decide->parsed()) return run_decide(decide_opt);
        if (simulate->parsed()) return run_simulate(sim_opt);
        if (diagnose->parsed()) {
            if (diag_opt.scores.empty() && diag_opt.draws.empty())
                throw erank::ValidationError("diagnose needs --scores or --draws");
            return run_diagnose(diag_opt);
        }
        if (replay->parsed()) return dispatch_replay(replay_manifest, replay_out);
    } catch (const erank::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitOk;
}

namespace {

int dispatch_replay(const std::string& manifest_path, const std::string& out_dir) {
    const erank::RunManifest m = erank::read_manifest(manifest_path);
    const auto& p = m.parameters;
    const std::string dir = out_dir.empty() ? p.value("out_dir", "") : out_dir;
    if (dir.empty()) throw erank::ValidationError("manifest has no out_dir and none was given");

    if (m.command == "rank") {
        RankOptions opt;
        opt.scores = p.at("scores").get<std::string>();
        opt.out_dir = dir;
        opt.budget = p.value("budget", 0);
        opt.cri_level = p.value("cri_level", 0.5);
        opt.merge_panels = p.value("merge_panels", false);
        opt.dump_draws = p.value("dump_draws", false);
        opt.rankograms = p.value("rankograms", false);
        opt.pcer_plot = p.value("pcer_plot", false);
        opt.real_scores = p.value("real_scores", false);
        opt.config = erank::config_from_json(p.at("config"));
        return run_rank(opt);
    }
    if (m.command == "decide") {
        DecideOptions opt;
        opt.summary = p.at("summary").get<std::string>();
        opt.budget = p.at("budget").get<int>();
        opt.seed = p.at("seed").get<std::uint64_t>();
        opt.out_dir = dir;
        return run_decide(opt);
    }
    if (m.command == "simulate") {
        SimulateOptions opt;
        opt.out_dir = dir;
        opt.seed = m.master_seed;
        opt.details = p.value("details", false);
        opt.methods.clear();
        for (const auto& name : p.at("methods")) opt.methods.push_back(name.get<std::string>());
        const auto& s = p.at("scenario");
        opt.scenario.n_proposals = s.at("proposals").get<int>();
        opt.scenario.n_assessors = s.at("assessors").get<int>();
        opt.scenario.alpha_lo = s.at("alpha_lo").get<double>();
        opt.scenario.alpha_hi = s.at("alpha_hi").get<double>();
        opt.scenario.sigma_lo = s.at("sigma_lo").get<double>();
        opt.scenario.sigma_hi = s.at("sigma_hi").get<double>();
        opt.scenario.sigma_last = s.at("sigma_last").get<double>();
        opt.scenario.tau_theta_true = s.at("tau_theta_true").get<double>();
        opt.scenario.cutoffs = s.at("cutoffs").get<std::vector<double>>();
        opt.scenario.missing_lo = s.at("missing_lo").get<int>();
        opt.scenario.missing_hi = s.at("missing_hi").get<int>();
        opt.scenario.n_replications = s.at("replications").get<int>();
        opt.scenario.corrected_variance = s.at("corrected_variance").get<bool>();
        const erank::RunConfig cfg = erank::config_from_json(p.at("config"));
        opt.mcmc = cfg.mcmc;
        opt.prior = cfg.prior;
        return run_simulate(opt);
    }
    if (m.command == "diagnose") {
        DiagnoseOptions opt;
        opt.scores = p.value("scores", "");
        opt.draws = p.value("draws", "");
        opt.out_dir = dir;
        opt.icc_variant = p.value("icc_variant", "one_way");
        opt.trace = p.value("trace", "");
        opt.merge_panels = p.value("merge_panels", false);
        opt.real_scores = p.value("real_scores", false);
        if (p.contains("config")) opt.config = erank::config_from_json(p.at("config"));
        return run_diagnose(opt);
    }
    throw erank::ValidationError("manifest has unknown command '" + m.command + "'");
}

}  // namespace
