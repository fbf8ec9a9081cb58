#include "aufuzz/pipeline.hpp"

#include "aufuzz/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace aufuzz::pipeline {

namespace {

Image crop_image(const Image& img, const CropRect& rect) {
    if (!rect.enabled()) return img;
    if (rect.x < 0 || rect.y < 0 || rect.x + rect.w > img.width || rect.y + rect.h > img.height)
        throw std::runtime_error("crop rectangle outside frame");
    Image out(rect.w, rect.h);
    for (int y = 0; y < rect.h; ++y)
        for (int x = 0; x < rect.w; ++x) out.at(x, y) = img.at(rect.x + x, rect.y + y);
    return out;
}

// Sorted subjects, every fifth (at 20%) to validation; falls back to a
// sequence-order split when there is only one subject.
std::set<std::string> pick_val_subjects(const std::set<std::string>& subjects, double fraction) {
    std::set<std::string> val;
    if (subjects.size() < 2) return val;
    const int stride = std::max(2, static_cast<int>(std::lround(1.0 / std::max(fraction, 1e-6))));
    int idx = 0;
    for (const auto& s : subjects) {
        if (idx % stride == stride - 1) val.insert(s);
        ++idx;
    }
    if (val.empty()) val.insert(*subjects.rbegin());
    return val;
}

std::string canonical_label(const std::set<int>& aus) {
    if (aus.empty()) return "none";
    std::ostringstream out;
    bool first = true;
    for (int au : aus) {
        if (!first) out << "+";
        out << au;
        first = false;
    }
    return out.str();
}

Eigen::VectorXd channel_features(const Eigen::MatrixXd& matrix, int last_col_inclusive,
                                 int target_cols, const reduce::ProjectionBasis& basis) {
    const Eigen::MatrixXd window = matrix.leftCols(last_col_inclusive + 1);
    return reduce::reduce_sequence_features(resample_columns(window, target_cols), basis);
}

} // namespace

PipelineConfig default_pipeline_config() {
    PipelineConfig cfg;
    for (int i = 0; i <= 56; ++i) cfg.subset_upper.push_back(i);
    for (int i = 57; i < track::kGridPoints; ++i) cfg.subset_lower.push_back(i);
    return cfg;
}

SequenceFeatures extract_sequence_features(const LabeledSequence& seq, Region region,
                                           const PipelineConfig& cfg) {
    if (seq.frames.size() < 2)
        throw std::runtime_error("sequence '" + seq.id + "' needs at least 2 frames");
    std::vector<Image> frames;
    frames.reserve(seq.frames.size());
    for (const auto& path : seq.frames) frames.push_back(read_pgm(path));

    const auto pts = track::read_landmarks(seq.landmark_file);
    const auto grid = track::PointGrid::from_points(pts);

    SequenceFeatures feats;
    feats.tracked = track::track_sequence(frames, grid, cfg.lk);
    feats.displacement = track::displacement_features(feats.tracked, cfg.subset(region)).values;

    const gabor::GaborBank bank = gabor::make_bank(cfg.bank);
    std::vector<Image> cropped;
    cropped.reserve(frames.size());
    for (const Image& f : frames) cropped.push_back(crop_image(f, cfg.crop(region)));
    feats.appearance = gabor::sequence_appearance_features(cropped, bank, cfg.grid_step).values;
    return feats;
}

std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> split_by_au(
    const std::vector<LabeledSequence>& dataset, int au) {
    if (dataset.empty()) throw std::invalid_argument("split_by_au: empty dataset");
    std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> out;
    for (const auto& seq : dataset)
        (seq.au_set.count(au) ? out.first : out.second).push_back(seq);
    if (out.first.empty())
        throw std::runtime_error("split_by_au: no positive sequences for AU " + std::to_string(au));
    return out;
}

std::vector<AugmentedSample> augment_intensities(const LabeledSequence& seq,
                                                 const track::TrackedSequence& tracked, int au,
                                                 int cut_points, const PipelineConfig& cfg) {
    if (cut_points < 1) throw std::invalid_argument("augment_intensities: cut_points must be >= 1");
    const std::size_t t = seq.frames.size();
    if (t < static_cast<std::size_t>(cut_points) + 1)
        throw std::invalid_argument("augment_intensities: sequence '" + seq.id +
                                    "' too short for " + std::to_string(cut_points) + " cuts");
    if (tracked.grids.size() != t)
        throw std::invalid_argument("augment_intensities: track length mismatch for '" + seq.id + "'");

    const bool positive = seq.au_set.count(au) > 0;
    const std::vector<int>& subset = cfg.subset(au_region(au));

    std::vector<AugmentedSample> out;
    out.reserve(static_cast<std::size_t>(cut_points));
    for (int m = 1; m <= cut_points; ++m) {
        const auto c = static_cast<std::size_t>(
            std::llround(static_cast<double>(m) * static_cast<double>(t - 1) / cut_points));
        AugmentedSample sample;
        sample.seq = seq;
        sample.seq.frames.resize(c + 1);
        sample.last_frame = c;
        if (positive) {
            try {
                sample.target = track::intensity_target(tracked.grids[c], tracked.grids[0],
                                                        tracked.grids[t - 1], subset);
            } catch (const std::runtime_error&) {
                throw std::runtime_error("augment_intensities: zero apex displacement on positive '" +
                                         seq.id + "'");
            }
        } else {
            sample.target = 0.0;
        }
        out.push_back(std::move(sample));
    }
    return out;
}

Eigen::MatrixXd resample_columns(const Eigen::MatrixXd& m, int target_cols) {
    if (target_cols < 1) throw std::invalid_argument("resample_columns: target must be >= 1");
    if (m.cols() < 1) throw std::invalid_argument("resample_columns: empty matrix");
    const Eigen::Index c = m.cols();
    if (c == target_cols) return m;
    Eigen::MatrixXd out(m.rows(), target_cols);
    if (target_cols == 1) {
        out.col(0) = m.col(c - 1);  // single-column summary keeps the apex
        return out;
    }
    for (int i = 0; i < target_cols; ++i) {
        const double u = static_cast<double>(i) * static_cast<double>(c - 1) / (target_cols - 1);
        const auto lo = static_cast<Eigen::Index>(std::floor(u));
        const Eigen::Index hi = std::min(lo + 1, c - 1);
        const double f = u - static_cast<double>(lo);
        out.col(i) = (1.0 - f) * m.col(lo) + f * m.col(hi);
    }
    return out;
}

TrainAuResult train_au_model(const std::vector<LabeledSequence>& dataset,
                             const FeatureMap& features, int au, const PipelineConfig& cfg) {
    TrainAuResult result;
    const auto [positives, negatives] = split_by_au(dataset, au);
    if (negatives.empty())
        throw std::runtime_error("train_au_model: no negative sequences for AU " + std::to_string(au));
    if (positives.size() == 1)
        result.warnings.push_back("AU " + std::to_string(au) +
                                  ": only one positive sequence; expect a weak model");

    const Region region = au_region(au);
    const std::set<std::string> val_subjects = [&] {
        std::set<std::string> subjects;
        for (const auto& s : dataset) subjects.insert(s.subject);
        return pick_val_subjects(subjects, cfg.val_fraction);
    }();

    struct CutFeatures {
        bool in_val = false;
        Eigen::MatrixXd geo;
        Eigen::MatrixXd app;
        double target = 0.0;
    };
    std::vector<CutFeatures> cuts;
    std::vector<Eigen::MatrixXd> full_geo, full_app;
    std::vector<reduce::ClassLabel> full_labels;

    std::size_t fallback_val_count = 0;
    for (const auto& seq : dataset) {
        const auto it = features.find(seq.id);
        if (it == features.end())
            throw std::runtime_error("train_au_model: missing features for sequence '" + seq.id + "'");
        const SequenceFeatures& f = it->second;
        bool in_val = val_subjects.count(seq.subject) > 0;
        if (val_subjects.empty()) {
            // single-subject fallback: last 20% of sequences by manifest order
            in_val = ++fallback_val_count > dataset.size() * 4 / 5;
        }

        if (!in_val) {
            full_geo.push_back(resample_columns(f.displacement, cfg.sequence_length));
            full_app.push_back(resample_columns(f.appearance, cfg.sequence_length));
            full_labels.push_back(seq.au_set.count(au) ? reduce::ClassLabel::positive
                                                       : reduce::ClassLabel::negative);
        }
        for (const auto& cut : augment_intensities(seq, f.tracked, au, cfg.cut_points, cfg)) {
            CutFeatures cf;
            cf.in_val = in_val;
            cf.target = cut.target;
            cf.geo = resample_columns(f.displacement.leftCols(cut.last_frame), cfg.sequence_length);
            cf.app = resample_columns(f.appearance.leftCols(cut.last_frame + 1), cfg.sequence_length);
            cuts.push_back(std::move(cf));
        }
    }

    bool train_has_pos = false;
    for (auto l : full_labels) train_has_pos = train_has_pos || l == reduce::ClassLabel::positive;
    if (!train_has_pos)
        throw std::runtime_error("train_au_model: all positives for AU " + std::to_string(au) +
                                 " fell into the validation split");

    result.model.au = au;
    result.model.region = region;
    result.model.threshold = cfg.threshold;
    result.model.geo_basis = reduce::fit_projection_basis(full_geo, full_labels, cfg.chain);
    result.model.app_basis = reduce::fit_projection_basis(full_app, full_labels, cfg.chain);

    std::vector<anfis::LabeledVector> geo_train, geo_val, app_train, app_val;
    for (const auto& cf : cuts) {
        anfis::LabeledVector geo{reduce::reduce_sequence_features(cf.geo, result.model.geo_basis),
                                 cf.target};
        anfis::LabeledVector app{reduce::reduce_sequence_features(cf.app, result.model.app_basis),
                                 cf.target};
        (cf.in_val ? geo_val : geo_train).push_back(std::move(geo));
        (cf.in_val ? app_val : app_train).push_back(std::move(app));
    }
    if (geo_val.empty()) {
        result.warnings.push_back("AU " + std::to_string(au) +
                                  ": empty validation split; moved last training cut");
        geo_val.push_back(geo_train.back());
        app_val.push_back(app_train.back());
        geo_train.pop_back();
        app_train.pop_back();
    }

    auto geo_search = structure::identify_structure(geo_train, geo_val, cfg.anfis);
    result.geo_history = std::move(geo_search.history);
    result.model.geo_model = structure::final_polish(geo_search.model, geo_train,
                                                     cfg.polish_epochs, cfg.anfis);

    auto app_search = structure::identify_structure(app_train, app_val, cfg.anfis);
    result.app_history = std::move(app_search.history);
    result.model.app_model = structure::final_polish(app_search.model, app_train,
                                                     cfg.polish_epochs, cfg.anfis);
    return result;
}

std::vector<Detection> detect_aus(const SequenceFeatures& upper_features,
                                  const SequenceFeatures& lower_features,
                                  const std::vector<AuModel>& models, const PipelineConfig& cfg) {
    if (models.empty()) throw std::invalid_argument("detect_aus: no models");
    std::vector<Detection> out;
    out.reserve(models.size());
    for (const AuModel& model : models) {
        const SequenceFeatures& f =
            model.region == Region::upper ? upper_features : lower_features;
        Detection det;
        det.au = model.au;
        const Eigen::VectorXd geo_x = channel_features(
            f.displacement, static_cast<int>(f.displacement.cols()) - 1, cfg.sequence_length,
            model.geo_basis);
        const Eigen::VectorXd app_x = channel_features(
            f.appearance, static_cast<int>(f.appearance.cols()) - 1, cfg.sequence_length,
            model.app_basis);
        det.geometric = anfis::infer(model.geo_model, geo_x).y;
        det.appearance = anfis::infer(model.app_model, app_x).y;
        det.fused_score = det.geometric + det.appearance;
        det.active = det.fused_score >= model.threshold;
        out.push_back(det);
    }
    return out;
}

EvalReport score_predictions(
    const std::vector<std::pair<std::set<int>, std::set<int>>>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("score_predictions: empty test set");

    std::map<std::set<int>, EvalRow> rows;
    EvalReport report;
    for (const auto& [truth, predicted] : pairs) {
        EvalRow& row = rows[truth];
        if (row.total == 0) row.label = canonical_label(truth);
        row.total += 1;
        report.total += 1;
        if (predicted == truth) {
            row.correct += 1;
            report.correct += 1;
        } else {
            std::set<int> overlap;
            std::set_intersection(truth.begin(), truth.end(), predicted.begin(), predicted.end(),
                                  std::inserter(overlap, overlap.begin()));
            if (!overlap.empty()) {
                row.missing_extra += 1;
                report.missing_extra += 1;
            } else {
                row.false_alarm += 1;
                report.false_alarm += 1;
            }
        }
    }

    // Table order: singles first, then larger combinations, numerically.
    std::vector<std::pair<std::set<int>, EvalRow>> ordered(rows.begin(), rows.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        return a.first < b.first;
    });
    for (auto& [key, row] : ordered) report.rows.push_back(row);

    report.recognition_rate = 100.0 * report.correct / report.total;
    report.false_alarm_rate = 100.0 * report.false_alarm / report.total;
    return report;
}

std::string au_set_label(const std::set<int>& aus) { return canonical_label(aus); }

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %10s %6s %18s %6s\n", "AUs", "Sequences", "True",
                  "Missing or extra", "False");
    out << line;
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-14s %10d %6d %18d %6d\n", row.label.c_str(), row.total,
                      row.correct, row.missing_extra, row.false_alarm);
        out << line;
    }
    std::snprintf(line, sizeof(line), "%-14s %10d %6d %18d %6d\n", "Total", report.total,
                  report.correct, report.missing_extra, report.false_alarm);
    out << line;
    std::snprintf(line, sizeof(line), "R %.1f%%\nF %.1f%%\n", report.recognition_rate,
                  report.false_alarm_rate);
    out << line;
    return out.str();
}

std::string format_eval_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "aus,sequences,true,missing_or_extra,false\n";
    for (const auto& row : report.rows)
        out << row.label << "," << row.total << "," << row.correct << "," << row.missing_extra
            << "," << row.false_alarm << "\n";
    out << "Total," << report.total << "," << report.correct << "," << report.missing_extra << ","
        << report.false_alarm << "\n";
    char line[64];
    std::snprintf(line, sizeof(line), "R,%.1f\nF,%.1f\n", report.recognition_rate,
                  report.false_alarm_rate);
    out << line;
    return out.str();
}

} // namespace aufuzz::pipeline
