#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace erank {

// One observed score in long format. Panel is optional ("" = none).
struct ScoreRecord {
    std::string proposal;
    std::string assessor;
    std::string panel;
    double score = 0.0;
};

struct LoadOptions {
    int n_levels = 6;               // scores validated against 1..n_levels
    bool allow_real_scores = false; // continuous-model input may carry non-integer grades
};

// Dense-index view of a record; identifiers live in the label tables.
struct Observation {
    int proposal = 0;
    int assessor = 0;
    int panel = -1;  // -1 when the dataset has no panel column
    double score = 0.0;
};

// Validated, immutable collection of panel scores. Missing (proposal, assessor)
// combinations are simply absent; every downstream sum iterates observed
// records only. Safe to share read-only across threads.
class ScoreDataset {
public:
    static ScoreDataset from_records(std::vector<ScoreRecord> records,
                                     const LoadOptions& options = {});

    int n_proposals() const { return static_cast<int>(proposal_labels_.size()); }
    int n_assessors() const { return static_cast<int>(assessor_labels_.size()); }
    int n_panels() const { return static_cast<int>(panel_labels_.size()); }
    bool has_panels() const { return !panel_labels_.empty(); }
    int n_observations() const { return static_cast<int>(observations_.size()); }
    double grand_mean() const { return grand_mean_; }
    int n_levels() const { return n_levels_; }
    bool integer_scores() const { return integer_scores_; }

    const std::vector<Observation>& observations() const { return observations_; }
    const std::vector<std::string>& proposal_labels() const { return proposal_labels_; }
    const std::vector<std::string>& assessor_labels() const { return assessor_labels_; }
    const std::vector<std::string>& panel_labels() const { return panel_labels_; }

    const std::vector<int>& obs_of_proposal(int i) const { return by_proposal_[i]; }
    const std::vector<int>& obs_of_assessor(int j) const { return by_assessor_[j]; }

    double proposal_mean(int i) const { return proposal_mean_[i]; }  // mean of observed scores
    int proposal_count(int i) const { return static_cast<int>(by_proposal_[i].size()); }
    int assessor_count(int j) const { return static_cast<int>(by_assessor_[j].size()); }

    // Lexicographic position of each proposal label; deterministic tie-breaking.
    const std::vector<int>& proposal_tie_order() const { return tie_order_; }

    // Single-panel slice with re-indexed proposals/assessors and no panel column.
    ScoreDataset panel_subset(int panel) const;

    std::vector<ScoreRecord> to_records() const;

private:
    ScoreDataset() = default;
    void build_index();

    std::vector<Observation> observations_;
    std::vector<std::string> proposal_labels_, assessor_labels_, panel_labels_;
    std::vector<std::vector<int>> by_proposal_, by_assessor_;
    std::vector<double> proposal_mean_;
    std::vector<int> tie_order_;
    double grand_mean_ = 0.0;
    int n_levels_ = 6;
    bool integer_scores_ = true;
};

// CSV long format, header `proposal,assessor,panel,score` (panel optional).
ScoreDataset load_scores(const std::filesystem::path& path, const LoadOptions& options = {});
void write_scores(const ScoreDataset& ds, const std::filesystem::path& path);

double grand_mean(const ScoreDataset& ds);

}  // namespace erank
