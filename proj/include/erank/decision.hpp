#pragma once

#include "erank/ranking.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace erank {

// Fund/lottery/reject partition for one call. funded, lottery_group and
// rejected partition all proposals; lottery_winners is a subset of
// lottery_group; |funded| + |lottery_winners| == min(budget, n).
struct FundingDecision {
    double funding_line = 0.0;
    int budget = 0;
    std::uint64_t lottery_seed = 0;
    bool lottery_held = false;
    std::vector<int> funded;           // proposal indices, best ER first
    std::vector<int> lottery_group;    // ER order
    std::vector<int> lottery_winners;  // subset of lottery_group, ER order
    std::vector<int> rejected;         // ER order
    std::vector<std::string> warnings;
};

// Proposal indices sorted by ER ascending (best first); ties by identifier.
std::vector<int> er_order(const RankingSummary& summary);

// ER of the last fundable proposal (the budget-th best).
double provisional_funding_line(const RankingSummary& summary, int budget);

// Overlap rule: proposals whose rank CrI contains the funding line (inclusive
// endpoints) form the lottery group, unless the group lies entirely within the
// funded top-x, in which case no random selection is needed.
FundingDecision partition(const RankingSummary& summary, double funding_line, int budget);

// Uniform sample of `slots` winners without replacement; deterministic given
// the seed, every subset equally likely.
std::vector<int> lottery_draw(const std::vector<int>& group, int slots, std::uint64_t seed);

// partition + lottery_draw.
FundingDecision decide(const RankingSummary& summary, int budget, std::uint64_t seed);

// group label for reports: funded | lottery_won | lottery_lost | rejected
std::string group_of(const FundingDecision& decision, int proposal);

void write_decision_csv(const RankingSummary& summary, const FundingDecision& decision,
                        const std::filesystem::path& path);
void write_decision_json(const RankingSummary& summary, const FundingDecision& decision,
                         const std::filesystem::path& path);

}  // namespace erank
