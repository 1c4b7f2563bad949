#include "erank/decision.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"
#include "erank/rng.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

namespace erank {

std::vector<int> er_order(const RankingSummary& summary) {
    std::vector<int> order(static_cast<std::size_t>(summary.n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ea = summary.er[static_cast<std::size_t>(a)];
        const double eb = summary.er[static_cast<std::size_t>(b)];
        if (ea != eb) return ea < eb;
        return summary.tie_order[static_cast<std::size_t>(a)] <
               summary.tie_order[static_cast<std::size_t>(b)];
    });
    return order;
}

double provisional_funding_line(const RankingSummary& summary, int budget) {
    if (budget < 1 || budget > summary.n)
        throw ValidationError("budget must lie in 1..n (" + std::to_string(summary.n) + ")");
    const auto order = er_order(summary);
    return summary.er[static_cast<std::size_t>(order[static_cast<std::size_t>(budget - 1)])];
}

FundingDecision partition(const RankingSummary& summary, double funding_line, int budget) {
    if (budget < 1 || budget > summary.n)
        throw ValidationError("budget must lie in 1..n (" + std::to_string(summary.n) + ")");
    FundingDecision decision;
    decision.funding_line = funding_line;
    decision.budget = budget;

    const auto order = er_order(summary);

    // ER ties across the funding boundary are resolved by identifier; human
    // judgement may still be warranted, so flag them.
    if (budget < summary.n) {
        const int at = order[static_cast<std::size_t>(budget - 1)];
        const int next = order[static_cast<std::size_t>(budget)];
        if (summary.er[static_cast<std::size_t>(at)] == summary.er[static_cast<std::size_t>(next)])
            decision.warnings.push_back("ER tie at the funding boundary, broken by identifier");
    }
    {
        const int at = order[static_cast<std::size_t>(budget - 1)];
        const double er = summary.er[static_cast<std::size_t>(at)];
        if (er < summary.cri_lower[static_cast<std::size_t>(at)] ||
            er > summary.cri_upper[static_cast<std::size_t>(at)])
            decision.warnings.push_back(
                "the last fundable proposal's own CrI excludes its ER; overlap rule applied "
                "mechanically");
    }

    // Overlap set: rank CrI contains the funding line, endpoints inclusive.
    std::vector<bool> overlap(static_cast<std::size_t>(summary.n), false);
    bool overlap_beyond_budget = false;
    for (int pos = 0; pos < summary.n; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        const bool in = static_cast<double>(summary.cri_lower[static_cast<std::size_t>(i)]) <=
                            funding_line &&
                        funding_line <=
                            static_cast<double>(summary.cri_upper[static_cast<std::size_t>(i)]);
        overlap[static_cast<std::size_t>(i)] = in;
        if (in && pos >= budget) overlap_beyond_budget = true;
    }

    if (!overlap_beyond_budget) {
        // Everything that overlaps is already fundable: no random selection.
        for (int pos = 0; pos < summary.n; ++pos) {
            const int i = order[static_cast<std::size_t>(pos)];
            (pos < budget ? decision.funded : decision.rejected).push_back(i);
        }
        return decision;
    }

    for (int pos = 0; pos < summary.n; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        if (overlap[static_cast<std::size_t>(i)]) {
            decision.lottery_group.push_back(i);
        } else if (pos < budget) {
            decision.funded.push_back(i);
        } else {
            decision.rejected.push_back(i);
        }
    }
    decision.lottery_held = true;
    return decision;
}

std::vector<int> lottery_draw(const std::vector<int>& group, int slots, std::uint64_t seed) {
    if (slots < 0 || slots > static_cast<int>(group.size()))
        throw ValidationError("lottery slots exceed the group size");
    Rng rng(seed);
    const auto picked = sample_index_subset(rng, static_cast<int>(group.size()), slots);
    std::set<int> chosen(picked.begin(), picked.end());
    std::vector<int> winners;  // keep the group's ER order
    for (int g = 0; g < static_cast<int>(group.size()); ++g)
        if (chosen.count(g)) winners.push_back(group[static_cast<std::size_t>(g)]);
    return winners;
}

FundingDecision decide(const RankingSummary& summary, int budget, std::uint64_t seed) {
    const double fl = provisional_funding_line(summary, budget);
    FundingDecision decision = partition(summary, fl, budget);
    decision.lottery_seed = seed;
    if (decision.lottery_held) {
        const int slots = budget - static_cast<int>(decision.funded.size());
        decision.lottery_winners = lottery_draw(decision.lottery_group, slots, seed);
    }
    return decision;
}

std::string group_of(const FundingDecision& decision, int proposal) {
    auto contains = [proposal](const std::vector<int>& v) {
        return std::find(v.begin(), v.end(), proposal) != v.end();
    };
    if (contains(decision.funded)) return "funded";
    if (contains(decision.lottery_winners)) return "lottery_won";
    if (contains(decision.lottery_group)) return "lottery_lost";
    return "rejected";
}

void write_decision_csv(const RankingSummary& summary, const FundingDecision& decision,
                        const std::filesystem::path& path) {
    Table table;
    table.header = {"proposal", "er", "cri_lower", "cri_upper", "group"};
    for (int i : er_order(summary)) {
        const auto u = static_cast<std::size_t>(i);
        table.rows.push_back({summary.labels[u], fmt_double(summary.er[u]),
                              std::to_string(summary.cri_lower[u]),
                              std::to_string(summary.cri_upper[u]), group_of(decision, i)});
    }
    write_csv(path, table);
}

void write_decision_json(const RankingSummary& summary, const FundingDecision& decision,
                         const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["funding_line"] = decision.funding_line;
    j["budget"] = decision.budget;
    j["lottery_seed"] = decision.lottery_seed;
    j["lottery_held"] = decision.lottery_held;
    j["n_funded_outright"] = decision.funded.size();
    j["n_lottery_group"] = decision.lottery_group.size();
    j["n_lottery_winners"] = decision.lottery_winners.size();
    j["n_rejected"] = decision.rejected.size();
    auto labels = [&summary](const std::vector<int>& idx) {
        std::vector<std::string> out;
        for (int i : idx) out.push_back(summary.labels[static_cast<std::size_t>(i)]);
        return out;
    };
    j["funded"] = labels(decision.funded);
    j["lottery_group"] = labels(decision.lottery_group);
    j["lottery_winners"] = labels(decision.lottery_winners);
    j["rejected"] = labels(decision.rejected);
    j["warnings"] = decision.warnings;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace erank
