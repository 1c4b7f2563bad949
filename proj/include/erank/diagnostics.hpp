#pragma once

#include "erank/data.hpp"
#include "erank/mcmc.hpp"

#include <span>
#include <string>
#include <vector>

namespace erank {

enum class IccVariant { one_way, two_way_consistency, two_way_agreement };

std::string to_string(IccVariant variant);

struct IccResult {
    double icc = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    IccVariant variant = IccVariant::one_way;
    bool degenerate = false;        // no between-proposal variance
    double missing_fraction = 0.0;  // share of empty cells in the proposal x assessor grid
    bool high_missingness = false;  // more than 10% empty cells
};

// Single-rater intra-class correlation with a 95% confidence interval
// (ANOVA mean squares; unbalanced designs use the harmonic mean group size).
IccResult icc(const ScoreDataset& ds, IccVariant variant = IccVariant::one_way,
              double confidence = 0.95);

struct BlandAltman {
    double mean_difference = 0.0;
    double lower_limit = 0.0;
    double upper_limit = 0.0;
    std::vector<double> differences;
};

// Agreement between two rankings of the same proposals: differences a - b,
// their mean and the mean +- 1.96 sd limits.
BlandAltman bland_altman(std::span<const double> ranking_a, std::span<const double> ranking_b);

struct TraceTable {
    std::string parameter;
    std::vector<int> chain;              // 1-based
    std::vector<std::int64_t> iteration;
    std::vector<double> value;
};

// Long-format (chain, iteration, value) table for one parameter. Selectors:
// scalar names as stored, theta[<label>] or nu[<label>].
TraceTable trace_export(const PosteriorDraws& draws, const std::string& selector);
std::vector<std::string> trace_parameters(const PosteriorDraws& draws);

}  // namespace erank
