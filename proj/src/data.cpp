#include "erank/data.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace erank {

namespace {

int intern(std::unordered_map<std::string, int>& index, std::vector<std::string>& labels,
           const std::string& label) {
    auto [it, inserted] = index.try_emplace(label, static_cast<int>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
}

}  // namespace

ScoreDataset ScoreDataset::from_records(std::vector<ScoreRecord> records,
                                        const LoadOptions& options) {
    if (records.empty()) throw ValidationError("score data is empty");
    if (options.n_levels < 2) throw ValidationError("n_levels must be at least 2");

    ScoreDataset ds;
    ds.n_levels_ = options.n_levels;

    const bool first_has_panel = !records.front().panel.empty();
    std::unordered_map<std::string, int> prop_index, assr_index, panel_index;
    std::set<std::pair<int, int>> seen;
    double score_sum = 0.0;

    for (const auto& rec : records) {
        if (rec.proposal.empty() || rec.assessor.empty())
            throw ValidationError("record with empty proposal or assessor identifier");
        if (rec.panel.empty() != !first_has_panel)
            throw ValidationError("panel identifiers must be present on all records or none");

        if (rec.score < 1.0 || rec.score > static_cast<double>(options.n_levels))
            throw ValidationError("score " + fmt_double(rec.score) + " for (" + rec.proposal +
                                  ", " + rec.assessor + ") outside 1.." +
                                  std::to_string(options.n_levels));
        const bool integral = rec.score == std::floor(rec.score);
        if (!integral) {
            if (!options.allow_real_scores)
                throw ValidationError("non-integer score " + fmt_double(rec.score) + " for (" +
                                      rec.proposal + ", " + rec.assessor +
                                      "); pass the real-score option to accept");
            ds.integer_scores_ = false;
        }

        Observation obs;
        obs.proposal = intern(prop_index, ds.proposal_labels_, rec.proposal);
        obs.assessor = intern(assr_index, ds.assessor_labels_, rec.assessor);
        if (first_has_panel) obs.panel = intern(panel_index, ds.panel_labels_, rec.panel);
        obs.score = rec.score;

        if (!seen.emplace(obs.proposal, obs.assessor).second)
            throw ValidationError("duplicate score for (" + rec.proposal + ", " + rec.assessor +
                                  ")");
        score_sum += rec.score;
        ds.observations_.push_back(obs);
    }

    ds.grand_mean_ = score_sum / static_cast<double>(ds.observations_.size());
    ds.build_index();
    return ds;
}

void ScoreDataset::build_index() {
    const int n = n_proposals();
    const int m = n_assessors();
    by_proposal_.assign(static_cast<std::size_t>(n), {});
    by_assessor_.assign(static_cast<std::size_t>(m), {});
    proposal_mean_.assign(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n_observations(); ++c) {
        const auto& obs = observations_[static_cast<std::size_t>(c)];
        by_proposal_[static_cast<std::size_t>(obs.proposal)].push_back(c);
        by_assessor_[static_cast<std::size_t>(obs.assessor)].push_back(c);
        proposal_mean_[static_cast<std::size_t>(obs.proposal)] += obs.score;
    }
    for (int i = 0; i < n; ++i)
        proposal_mean_[static_cast<std::size_t>(i)] /=
            static_cast<double>(by_proposal_[static_cast<std::size_t>(i)].size());

    // tie_order_[i] = rank of label i in lexicographic order
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [this](int a, int b) {
        return proposal_labels_[static_cast<std::size_t>(a)] <
               proposal_labels_[static_cast<std::size_t>(b)];
    });
    tie_order_.assign(static_cast<std::size_t>(n), 0);
    for (int pos = 0; pos < n; ++pos)
        tie_order_[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;
}

ScoreDataset ScoreDataset::panel_subset(int panel) const {
    std::vector<ScoreRecord> records;
    for (const auto& obs : observations_) {
        if (obs.panel != panel) continue;
        records.push_back({proposal_labels_[static_cast<std::size_t>(obs.proposal)],
                           assessor_labels_[static_cast<std::size_t>(obs.assessor)],
                           std::string{}, obs.score});
    }
    LoadOptions options;
    options.n_levels = n_levels_;
    options.allow_real_scores = !integer_scores_;
    return from_records(std::move(records), options);
}

std::vector<ScoreRecord> ScoreDataset::to_records() const {
    std::vector<ScoreRecord> records;
    records.reserve(observations_.size());
    for (const auto& obs : observations_) {
        records.push_back({proposal_labels_[static_cast<std::size_t>(obs.proposal)],
                           assessor_labels_[static_cast<std::size_t>(obs.assessor)],
                           obs.panel >= 0 ? panel_labels_[static_cast<std::size_t>(obs.panel)]
                                          : std::string{},
                           obs.score});
    }
    return records;
}

ScoreDataset load_scores(const std::filesystem::path& path, const LoadOptions& options) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    const Table table = read_csv(path);
    if (table.header.empty()) throw ValidationError("empty scores file: " + path.string());

    const int prop_col = table.column("proposal");
    const int assr_col = table.column("assessor");
    const int score_col = table.column("score");
    const int panel_col = table.column("panel");
    if (prop_col < 0 || assr_col < 0 || score_col < 0)
        throw ValidationError("scores file must have columns proposal, assessor, score");
    if (table.rows.empty()) throw ValidationError("scores file has no data rows");

    std::vector<ScoreRecord> records;
    records.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        ScoreRecord rec;
        rec.proposal = row.at(static_cast<std::size_t>(prop_col));
        rec.assessor = row.at(static_cast<std::size_t>(assr_col));
        if (panel_col >= 0) rec.panel = row.at(static_cast<std::size_t>(panel_col));
        const std::string& raw = row.at(static_cast<std::size_t>(score_col));
        try {
            std::size_t pos = 0;
            rec.score = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw ValidationError("unparseable score '" + raw + "' for (" + rec.proposal + ", " +
                                  rec.assessor + ")");
        }
        records.push_back(std::move(rec));
    }
    return ScoreDataset::from_records(std::move(records), options);
}

void write_scores(const ScoreDataset& ds, const std::filesystem::path& path) {
    Table table;
    const bool panels = ds.has_panels();
    table.header = panels ? std::vector<std::string>{"proposal", "assessor", "panel", "score"}
                          : std::vector<std::string>{"proposal", "assessor", "score"};
    for (const auto& rec : ds.to_records()) {
        std::vector<std::string> row{rec.proposal, rec.assessor};
        if (panels) row.push_back(rec.panel);
        row.push_back(fmt_double(rec.score));
        table.rows.push_back(std::move(row));
    }
    write_csv(path, table);
}

double grand_mean(const ScoreDataset& ds) { return ds.grand_mean(); }

}  // namespace erank
