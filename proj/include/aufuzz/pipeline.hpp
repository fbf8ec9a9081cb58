#pragma once

#include "aufuzz/anfis.hpp"
#include "aufuzz/dataset.hpp"
#include "aufuzz/gabor.hpp"
#include "aufuzz/reduce.hpp"
#include "aufuzz/structure.hpp"
#include "aufuzz/tracker.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace aufuzz::pipeline {

struct CropRect {
    int x = 0, y = 0, w = 0, h = 0;
    bool enabled() const { return w > 0 && h > 0; }
};

struct PipelineConfig {
    gabor::BankParams bank;
    int grid_step = 8;
    track::LkParams lk;
    reduce::ChainConfig chain;
    structure::StructureConfig anfis;
    int polish_epochs = 200;
    int cut_points = 5;
    int sequence_length = 10;  // feature matrices are resampled to this many columns
    double threshold = 1.0;
    double val_fraction = 0.2;
    std::vector<int> subset_upper;
    std::vector<int> subset_lower;
    CropRect crop_upper;
    CropRect crop_lower;

    const std::vector<int>& subset(Region r) const {
        return r == Region::upper ? subset_upper : subset_lower;
    }
    const CropRect& crop(Region r) const { return r == Region::upper ? crop_upper : crop_lower; }
};

PipelineConfig default_pipeline_config();

/// Raw per-sequence features for one face region: the repaired landmark
/// track, the Gabor descriptor per frame (columns), and the displacement
/// matrix (columns are frames 1..t-1).
struct SequenceFeatures {
    track::TrackedSequence tracked;
    Eigen::MatrixXd appearance;
    Eigen::MatrixXd displacement;
};

SequenceFeatures extract_sequence_features(const LabeledSequence& seq, Region region,
                                           const PipelineConfig& cfg);

/// Paired geometric+appearance models over the same AU split.
struct AuModel {
    int au = 0;
    Region region = Region::upper;
    reduce::ProjectionBasis geo_basis;
    reduce::ProjectionBasis app_basis;
    anfis::TsModel geo_model;
    anfis::TsModel app_model;
    double threshold = 1.0;
};

struct Detection {
    int au = 0;
    double geometric = 0.0;
    double appearance = 0.0;
    double fused_score = 0.0;
    bool active = false;
};

std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> split_by_au(
    const std::vector<LabeledSequence>& dataset, int au);

struct AugmentedSample {
    LabeledSequence seq;     // frames truncated at the cut
    std::size_t last_frame;  // index into the original frame list
    double target;
};

/// Evenly spaced cuts ending at the final frame; positives get the Eq-style
/// displacement ratio as target, negatives always 0.
std::vector<AugmentedSample> augment_intensities(const LabeledSequence& seq,
                                                 const track::TrackedSequence& tracked, int au,
                                                 int cut_points, const PipelineConfig& cfg);

/// Linear interpolation of columns onto a fixed count so sequences of
/// different lengths share a matrix shape.
Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& m, int target_cols);

using FeatureMap = std::map<std::string, SequenceFeatures>;  // sequence id -> features

struct TrainAuResult {
    AuModel model;
    std::vector<structure::CandidateRecord> geo_history;
    std::vector<structure::CandidateRecord> app_history;
    std::vector<std::string> warnings;
};

TrainAuResult train_au_model(const std::vector<LabeledSequence>& dataset,
                             const FeatureMap& features, int au, const PipelineConfig& cfg);

std::vector<Detection> detect_aus(const SequenceFeatures& upper_features,
                                  const SequenceFeatures& lower_features,
                                  const std::vector<AuModel>& models, const PipelineConfig& cfg);

struct EvalRow {
    std::string label;  // canonical truth set, e.g. "1+2"
    int total = 0;
    int correct = 0;
    int missing_extra = 0;
    int false_alarm = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    int total = 0;
    int correct = 0;
    int missing_extra = 0;
    int false_alarm = 0;
    double recognition_rate = 0.0;  // percent
    double false_alarm_rate = 0.0;  // percent
};

/// Scores (truth set, predicted set) pairs: exact match counts as true,
/// overlap as missing-or-extra, disjoint prediction as false.
EvalReport score_predictions(
    const std::vector<std::pair<std::set<int>, std::set<int>>>& pairs);

std::string format_eval_table(const EvalReport& report);
std::string format_eval_csv(const EvalReport& report);

std::string au_set_label(const std::set<int>& aus);

} // namespace aufuzz::pipeline
