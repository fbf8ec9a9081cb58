#include "aufuzz/structure.hpp"

#include "aufuzz/textio.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace aufuzz::structure {

namespace {

long long grid_size(const std::vector<int>& counts) {
    long long n = 1;
    for (int d : counts) n *= d;
    return n;
}

anfis::TsModel train_candidate(anfis::TsModel model,
                               const std::vector<anfis::LabeledVector>& train,
                               const StructureConfig& config) {
    for (int e = 0; e < config.candidate_epochs; ++e) {
        auto res = anfis::hybrid_epoch(model, train, config.lr, config.lse_ridge);
        model = std::move(res.model);
    }
    return model;
}

} // namespace

std::vector<anfis::TsModel> spawn_candidates(
    const StructureState& state,
    const std::vector<std::pair<double, double>>& input_ranges,
    const StructureConfig& config) {
    std::vector<anfis::TsModel> out;
    for (std::size_t m = 0; m < state.partition_counts.size(); ++m) {
        std::vector<int> counts = state.partition_counts;
        counts[m] += 1;
        if (grid_size(counts) > config.rule_cap) {
            out.emplace_back();  // empty marker, recorded as skipped by the caller
            continue;
        }
        out.push_back(anfis::init_grid_model(counts, input_ranges, config.jitter, config.seed));
    }
    return out;
}

StructureResult identify_structure(const std::vector<anfis::LabeledVector>& train,
                                   const std::vector<anfis::LabeledVector>& val,
                                   const StructureConfig& config) {
    if (train.empty() || val.empty())
        throw std::invalid_argument("identify_structure: train and validation sets must be non-empty");

    const auto ranges = anfis::observed_ranges(train);
    const int k = static_cast<int>(ranges.size());

    StructureState state;
    state.partition_counts.assign(static_cast<std::size_t>(k), 1);
    state.v = std::numeric_limits<double>::infinity();

    int iteration = 0;
    while (true) {
        ++iteration;
        const std::vector<anfis::TsModel> candidates = spawn_candidates(state, ranges, config);

        int best_input = -1;
        double best_train = std::numeric_limits<double>::infinity();
        anfis::TsModel best_model;
        for (int m = 0; m < k; ++m) {
            CandidateRecord rec;
            rec.iteration = iteration;
            rec.input = m;
            if (candidates[m].rules.empty()) {
                std::vector<int> counts = state.partition_counts;
                counts[m] += 1;
                rec.rule_count = static_cast<int>(grid_size(counts));
                rec.skipped = true;
                state.history.push_back(rec);
                continue;
            }
            const anfis::TsModel trained = train_candidate(candidates[m], train, config);
            rec.rule_count = trained.rule_count();
            rec.train_mse = anfis::mse(trained, train);
            rec.val_mse = anfis::mse(trained, val);
            state.history.push_back(rec);
            // Strictly-less comparison keeps the lowest input index on ties.
            if (rec.train_mse < best_train - 1e-12 ||
                (best_input < 0 && rec.train_mse <= best_train)) {
                best_train = rec.train_mse;
                best_input = m;
                best_model = trained;
            }
        }

        if (best_input < 0) break;  // every candidate hit the rule cap

        const double val_mse = anfis::mse(best_model, val);
        if (val_mse < state.v) {
            // mark the accepted candidate in the history
            for (auto it = state.history.rbegin(); it != state.history.rend(); ++it) {
                if (it->iteration == iteration && it->input == best_input && !it->skipped) {
                    it->accepted = true;
                    break;
                }
            }
            state.v = val_mse;
            state.s = best_input;
            state.partition_counts[static_cast<std::size_t>(best_input)] += 1;
            state.best_model = best_model;
            state.has_accepted = true;
        } else {
            break;
        }
    }

    if (!state.has_accepted) {
        // Degenerate cap: fall back to the undivided model, trained in place.
        const anfis::TsModel base = anfis::init_grid_model(
            std::vector<int>(static_cast<std::size_t>(k), 1), ranges, config.jitter, config.seed);
        state.best_model = train_candidate(base, train, config);
    }
    return {state.best_model, state.history};
}

anfis::TsModel final_polish(const anfis::TsModel& model,
                            const std::vector<anfis::LabeledVector>& train, int epochs,
                            const StructureConfig& config) {
    if (epochs < 0) throw std::invalid_argument("final_polish: negative epoch count");
    anfis::TsModel out = model;
    for (int e = 0; e < epochs; ++e) {
        auto res = anfis::hybrid_epoch(out, train, config.lr, config.lse_ridge);
        out = std::move(res.model);
    }
    return out;
}

std::string history_log(const std::vector<CandidateRecord>& history) {
    std::ostringstream out;
    out << "# iteration input rules train_mse val_mse accepted\n";
    for (const auto& rec : history) {
        out << rec.iteration << " " << rec.input << " " << rec.rule_count << " ";
        if (rec.skipped) {
            out << "skipped skipped no\n";
        } else {
            out << format_double(rec.train_mse) << " " << format_double(rec.val_mse) << " "
                << (rec.accepted ? "yes" : "no") << "\n";
        }
    }
    return out.str();
}

} // namespace aufuzz::structure
