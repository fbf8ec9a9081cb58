#pragma once

#include "aufuzz/anfis.hpp"

#include <string>
#include <vector>

namespace aufuzz::structure {

struct StructureConfig {
    int candidate_epochs = 50;
    double lr = 0.01;
    double lse_ridge = 1e-8;
    int rule_cap = 128;
    double jitter = 0.0;
    unsigned long long seed = 0;
};

struct CandidateRecord {
    int iteration = 0;
    int input = 0;
    int rule_count = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    bool accepted = false;
    bool skipped = false;  // rule cap exceeded
};

struct StructureState {
    std::vector<int> partition_counts;
    anfis::TsModel best_model;
    double v = 0.0;  // validation MSE of the last accepted model
    int s = -1;      // input grown last
    std::vector<CandidateRecord> history;
    bool has_accepted = false;
};

/// Untrained candidate models: one per input, with that input's partition
/// count incremented and everything re-initialized from the training ranges.
std::vector<anfis::TsModel> spawn_candidates(
    const StructureState& state,
    const std::vector<std::pair<double, double>>& input_ranges,
    const StructureConfig& config);

struct StructureResult {
    anfis::TsModel model;
    std::vector<CandidateRecord> history;
};

/// Greedy growth: train every candidate, select by training MSE, accept while
/// the selected candidate's validation MSE strictly improves.
StructureResult identify_structure(const std::vector<anfis::LabeledVector>& train,
                                   const std::vector<anfis::LabeledVector>& val,
                                   const StructureConfig& config);

anfis::TsModel final_polish(const anfis::TsModel& model,
                            const std::vector<anfis::LabeledVector>& train, int epochs,
                            const StructureConfig& config = {});

std::string history_log(const std::vector<CandidateRecord>& history);

} // namespace aufuzz::structure
