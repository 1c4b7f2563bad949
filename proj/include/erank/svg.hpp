#pragma once

#include "erank/decision.hpp"
#include "erank/ranking.hpp"

#include <filesystem>
#include <string>

namespace erank {

// Expected ranks ordered best to worst, with rank-CrI boxes, optionally the
// provisional funding line (dashed) and group colours from a decision.
void write_er_plot_svg(const RankingSummary& summary, const FundingDecision* decision,
                       const std::filesystem::path& path, const std::string& title);

// Small-multiple bar charts of Pr(proposal i occupies rank m).
void write_rankogram_svg(const RankingSummary& summary, const std::filesystem::path& path,
                         const std::string& title);

// Percentiles (PCER) per proposal, best first.
void write_pcer_svg(const RankingSummary& summary, const std::filesystem::path& path,
                    const std::string& title);

}  // namespace erank
