#include "aufuzz/cli.hpp"

#include "aufuzz/dataset.hpp"
#include "aufuzz/expression.hpp"
#include "aufuzz/model_io.hpp"
#include "aufuzz/textio.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace aufuzz::cli {

namespace {

Config builtin_defaults() {
    Config cfg;
    cfg.set("gabor.scales", "4");
    cfg.set("gabor.orientations", "4");
    cfg.set("gabor.kernel_size", "21");
    cfg.set("gabor.grid_step", "8");
    cfg.set("gabor.wavelength0", "4");
    cfg.set("gabor.wavelength_ratio", "1.4142135623730951");
    cfg.set("gabor.sigma_ratio", "0.56");
    cfg.set("track.levels", "3");
    cfg.set("track.window", "15");
    cfg.set("track.max_iters", "20");
    cfg.set("track.eps", "0.01");
    cfg.set("track.min_eig_rel", "0.0001");
    cfg.set("reduce.pca2d_rows", "16");
    cfg.set("reduce.pca2d_cols", "8");
    cfg.set("reduce.bda2d_rows", "6");
    cfg.set("reduce.bda2d_cols", "4");
    cfg.set("reduce.pca_dim", "12");
    cfg.set("reduce.final_dim", "6");
    cfg.set("reduce.ridge", "-1");
    cfg.set("anfis.lr", "0.01");
    cfg.set("anfis.candidate_epochs", "50");
    cfg.set("anfis.polish_epochs", "200");
    cfg.set("anfis.rule_cap", "128");
    cfg.set("anfis.lse_ridge", "1e-08");
    cfg.set("anfis.jitter", "0");
    cfg.set("pipeline.cuts", "5");
    cfg.set("pipeline.sequence_length", "10");
    cfg.set("pipeline.threshold", "1");
    cfg.set("pipeline.val_fraction", "0.2");
    cfg.set("points.upper", "0-56");
    cfg.set("points.lower", "57-112");
    cfg.set("crop.upper", "");
    cfg.set("crop.lower", "");
    cfg.set("tree.min_leaf", "2");
    cfg.set("tree.confidence", "0.25");
    cfg.set("seed", "0");
    return cfg;
}

pipeline::CropRect parse_crop(const std::string& text) {
    pipeline::CropRect rect;
    if (text.empty()) return rect;
    const auto fields = split_fields(text, ',');
    if (fields.size() != 4) throw std::runtime_error("crop must be 'x,y,w,h', got '" + text + "'");
    rect.x = std::stoi(fields[0]);
    rect.y = std::stoi(fields[1]);
    rect.w = std::stoi(fields[2]);
    rect.h = std::stoi(fields[3]);
    return rect;
}

std::string region_name(Region r) { return r == Region::upper ? "upper" : "lower"; }

std::uint64_t hash_file(const std::string& path, std::uint64_t seed) {
    return fnv1a_str(read_file(path), seed);
}

std::uint64_t hash_config_keys(const Config& cfg, const std::vector<std::string>& keys,
                               std::uint64_t seed) {
    std::uint64_t h = seed;
    for (const auto& key : keys) h = fnv1a_str(key + "=" + cfg.get_string(key, "") + ";", h);
    return h;
}

std::uint64_t track_hash(const pipeline::LabeledSequence& seq, const Config& cfg) {
    std::uint64_t h = fnv1a_str("tracked;");
    for (const auto& f : seq.frames) h = hash_file(f, h);
    h = hash_file(seq.landmark_file, h);
    return hash_config_keys(
        cfg, {"track.levels", "track.window", "track.max_iters", "track.eps", "track.min_eig_rel"},
        h);
}

std::uint64_t region_hash(const pipeline::LabeledSequence& seq, Region region, const Config& cfg,
                          std::uint64_t tracked_hash) {
    std::uint64_t h = fnv1a_str("region=" + region_name(region) + ";", tracked_hash);
    return hash_config_keys(cfg,
                            {"gabor.scales", "gabor.orientations", "gabor.kernel_size",
                             "gabor.grid_step", "gabor.wavelength0", "gabor.wavelength_ratio",
                             "gabor.sigma_ratio", "points." + region_name(region),
                             "crop." + region_name(region)},
                            h);
}

void write_tracked_file(const std::string& path, const std::string& hash,
                        const track::TrackedSequence& tracked) {
    std::ostringstream out;
    out << "aufuzz-tracked 1\n";
    out << "hash " << hash << "\n";
    out << "frames " << tracked.grids.size() << " points " << tracked.grids[0].points.size()
        << "\n";
    for (std::size_t j = 0; j < tracked.grids.size(); ++j) {
        out << "# frame " << j << "\n";
        const auto& pts = tracked.grids[j].points;
        for (std::size_t i = 0; i < pts.size(); ++i)
            out << i << " " << format_double(pts[i].x) << " " << format_double(pts[i].y) << "\n";
    }
    atomic_write_file(path, out.str());
}

bool read_tracked_file(const std::string& path, const std::string& expected_hash,
                       track::TrackedSequence& out) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic, hash_tag, hash;
    int version = 0;
    if (!(in >> magic >> version >> hash_tag >> hash)) return false;
    if (magic != "aufuzz-tracked" || version != 1 || hash != expected_hash) return false;
    std::string frames_tag, points_tag;
    std::size_t t = 0, n = 0;
    if (!(in >> frames_tag >> t >> points_tag >> n)) return false;
    out.grids.clear();
    out.lost_flags.clear();
    std::string line;
    std::getline(in, line);
    for (std::size_t j = 0; j < t; ++j) {
        std::getline(in, line);  // "# frame j"
        std::vector<track::Point> pts(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t idx = 0;
            std::string xs, ys;
            if (!(in >> idx >> xs >> ys)) return false;
            pts[idx] = {parse_double(xs), parse_double(ys)};
        }
        std::getline(in, line);
        out.grids.push_back(track::PointGrid::from_points(std::move(pts)));
        out.lost_flags.emplace_back(n, false);
    }
    return true;
}

void write_fm_file(const std::string& path, const std::string& hash, const std::string& source,
                   const Eigen::MatrixXd& values) {
    std::ostringstream out;
    out << "aufuzz-features 1\n";
    out << "hash " << hash << "\n";
    out << "source " << source << "\n";
    write_matrix(out, "values", values);
    atomic_write_file(path, out.str());
}

bool read_fm_file(const std::string& path, const std::string& expected_hash,
                  Eigen::MatrixXd& values) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic, hash_tag, hash, source_tag, source;
    int version = 0;
    if (!(in >> magic >> version >> hash_tag >> hash >> source_tag >> source)) return false;
    if (magic != "aufuzz-features" || version != 1 || hash != expected_hash) return false;
    values = read_matrix(in, "values");
    return true;
}

struct FeatureCache {
    std::string cache_dir;
    Config cfg;
    std::map<std::pair<std::string, Region>, pipeline::SequenceFeatures> memory;
    int computed = 0;
    int cached = 0;

    const pipeline::SequenceFeatures& get(const pipeline::LabeledSequence& seq, Region region) {
        const auto key = std::make_pair(seq.id, region);
        auto it = memory.find(key);
        if (it != memory.end()) return it->second;
        bool recomputed = false;
        pipeline::SequenceFeatures f = ensure_features(seq, region, cfg, cache_dir, &recomputed);
        (recomputed ? computed : cached) += 1;
        return memory.emplace(key, std::move(f)).first->second;
    }
};

std::string predictions_header(const std::vector<int>& aus) {
    std::ostringstream out;
    out << "id\tsubject\ttruth\tpredicted";
    for (int au : aus) out << "\tau" << au;
    out << "\n";
    return out.str();
}

std::string au_list_string(const std::set<int>& aus) {
    if (aus.empty()) return "-";
    std::ostringstream out;
    bool first = true;
    for (int au : aus) {
        if (!first) out << ",";
        out << au;
        first = false;
    }
    return out.str();
}

std::set<int> parse_au_list_field(const std::string& field) {
    std::set<int> out;
    if (field == "-" || field.empty()) return out;
    for (int au : parse_index_list(field)) out.insert(au);
    return out;
}

// ---------------------------------------------------------------- commands

struct CommonArgs {
    std::string manifest;
    std::string config_file;
    std::string out_dir = ".";
    std::string au_list;
    std::string models;
    std::string predictions;
    std::string model_file;
    std::vector<std::string> sets;
    long long seed = -1;
    double threshold = std::numeric_limits<double>::quiet_NaN();
    int cuts = -1;
    int reduced_dim = -1;
};

Config merge_config(const CommonArgs& args) {
    Config merged;
    if (!args.config_file.empty()) {
        const Config file_cfg = Config::from_file(args.config_file);
        for (const auto& [k, v] : file_cfg.entries()) merged.set(k, v);
    }
    for (const auto& kv : args.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
        merged.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed >= 0) merged.set("seed", std::to_string(args.seed));
    if (!std::isnan(args.threshold)) merged.set("pipeline.threshold", format_double(args.threshold));
    if (args.cuts >= 0) merged.set("pipeline.cuts", std::to_string(args.cuts));
    if (args.reduced_dim >= 0) merged.set("reduce.final_dim", std::to_string(args.reduced_dim));
    return effective_config(merged);
}

std::vector<int> parse_requested_aus(const std::string& list) {
    std::vector<int> aus;
    try {
        aus = parse_index_list(list);
    } catch (const std::exception&) {
        throw CLI::ValidationError("--au expects a comma list of AU codes, got '" + list + "'");
    }
    if (aus.empty()) throw CLI::ValidationError("--au list is empty");
    for (int au : aus)
        if (au < 1 || au > 64)
            throw CLI::ValidationError("unknown AU code " + std::to_string(au));
    return aus;
}

int cmd_extract(const CommonArgs& args) {
    const Config cfg = merge_config(args);
    const Manifest manifest = load_manifest(args.manifest);
    FeatureCache cache{(fs::path(args.out_dir) / "cache").string(), cfg, {}, 0, 0};

    std::vector<std::string> exclusions;
    for (const auto& rec : manifest.records) {
        try {
            cache.get(rec, Region::upper);
            cache.get(rec, Region::lower);
        } catch (const std::exception& e) {
            exclusions.push_back(rec.id + "\t" + e.what());
        }
    }

    std::ostringstream report;
    for (const auto& line : exclusions) report << line << "\n";
    atomic_write_file((fs::path(args.out_dir) / "exclusions.txt").string(), report.str());

    std::cout << "extract: " << manifest.records.size() << " sequences, " << cache.computed
              << " computed, " << cache.cached << " cached, " << exclusions.size() << " excluded\n";
    return kExitOk;
}

int cmd_train_au(const CommonArgs& args) {
    const std::vector<int> aus = parse_requested_aus(args.au_list);
    const Config cfg = merge_config(args);
    const pipeline::PipelineConfig pcfg = pipeline_config_from(cfg);
    const Manifest manifest = load_manifest(args.manifest);
    FeatureCache cache{(fs::path(args.out_dir) / "cache").string(), cfg, {}, 0, 0};

    bool partial = false;
    for (int au : aus) {
        const Region region = au_region(au);
        std::vector<pipeline::LabeledSequence> dataset;
        pipeline::FeatureMap features;
        std::vector<std::string> excluded;
        for (const auto& rec : manifest.records) {
            try {
                features[rec.id] = cache.get(rec, region);
                dataset.push_back(rec);
            } catch (const std::exception& e) {
                excluded.push_back(rec.id + ": " + e.what());
            }
        }
        for (const auto& line : excluded) std::cout << "excluded " << line << "\n";
        partial = partial || !excluded.empty();

        int positives = 0;
        for (const auto& rec : dataset) positives += rec.au_set.count(au) ? 1 : 0;
        if (positives == 0) {
            std::cout << "AU " << au << ": no positive sequences, skipped\n";
            partial = true;
            continue;
        }

        const pipeline::TrainAuResult result = pipeline::train_au_model(dataset, features, au, pcfg);
        for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";

        const std::string stem = (fs::path(args.out_dir) / ("au" + std::to_string(au))).string();
        save_au_model(result.model, cfg, stem + ".model");
        atomic_write_file(stem + ".geo.history.txt", structure::history_log(result.geo_history));
        atomic_write_file(stem + ".app.history.txt", structure::history_log(result.app_history));
        std::cout << "AU " << au << ": model written to " << stem << ".model ("
                  << result.model.geo_model.rule_count() << " geo rules, "
                  << result.model.app_model.rule_count() << " app rules)\n";
    }
    return partial ? kExitPartial : kExitOk;
}

std::vector<std::string> model_paths(const std::string& models_arg) {
    std::vector<std::string> paths;
    if (fs::is_directory(models_arg)) {
        for (const auto& entry : fs::directory_iterator(models_arg))
            if (entry.path().extension() == ".model") paths.push_back(entry.path().string());
        std::sort(paths.begin(), paths.end());
    } else {
        for (const auto& p : split_fields(models_arg, ','))
            if (!p.empty()) paths.push_back(p);
    }
    if (paths.empty()) throw std::runtime_error("no model files under '" + models_arg + "'");
    return paths;
}

struct LoadedModels {
    std::vector<pipeline::AuModel> models;
    std::vector<Config> snapshots;
    std::vector<int> au_codes;
};

LoadedModels load_au_models(const std::string& models_arg) {
    LoadedModels out;
    for (const auto& path : model_paths(models_arg)) {
        if (model_kind(path) != "au-model") continue;
        Config snapshot;
        out.models.push_back(load_au_model(path, &snapshot));
        out.snapshots.push_back(snapshot);
        out.au_codes.push_back(out.models.back().au);
    }
    if (out.models.empty()) throw std::runtime_error("no au-model containers found");
    return out;
}

struct DetectionTable {
    std::vector<int> aus;
    // per sequence: id, subject, truth, predicted, scores per AU
    struct Row {
        std::string id, subject;
        std::set<int> truth, predicted;
        std::map<int, double> scores;
        bool excluded = false;
        std::string reason;
    };
    std::vector<Row> rows;
};

DetectionTable run_detection(const Manifest& manifest, const LoadedModels& loaded,
                             const std::string& out_dir) {
    DetectionTable table;
    table.aus = loaded.au_codes;

    for (const auto& rec : manifest.records) {
        DetectionTable::Row row;
        row.id = rec.id;
        row.subject = rec.subject;
        row.truth = rec.au_set;
        try {
            for (std::size_t m = 0; m < loaded.models.size(); ++m) {
                const Config& snapshot = loaded.snapshots[m];
                const pipeline::PipelineConfig pcfg = pipeline_config_from(snapshot);
                FeatureCache cache{(fs::path(out_dir) / "cache").string(), snapshot, {}, 0, 0};
                const auto& feats = cache.get(rec, loaded.models[m].region);
                const auto dets =
                    pipeline::detect_aus(feats, feats, {loaded.models[m]}, pcfg);
                row.scores[dets[0].au] = dets[0].fused_score;
                if (dets[0].active) row.predicted.insert(dets[0].au);
            }
        } catch (const std::exception& e) {
            row.excluded = true;
            row.reason = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string predictions_text(const DetectionTable& table) {
    std::ostringstream out;
    out << predictions_header(table.aus);
    for (const auto& row : table.rows) {
        if (row.excluded) continue;
        out << row.id << "\t" << row.subject << "\t" << au_list_string(row.truth) << "\t"
            << au_list_string(row.predicted);
        for (int au : table.aus) out << "\t" << format_double(row.scores.at(au));
        out << "\n";
    }
    return out.str();
}

int cmd_detect(const CommonArgs& args) {
    const LoadedModels loaded = load_au_models(args.models);
    const Manifest manifest = load_manifest(args.manifest);
    const DetectionTable table = run_detection(manifest, loaded, args.out_dir);

    bool partial = false;
    for (const auto& row : table.rows) {
        if (row.excluded) {
            std::cout << row.id << ": excluded (" << row.reason << ")\n";
            partial = true;
            continue;
        }
        std::cout << row.id << ":";
        for (int au : table.aus) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), " au%d=%.4f", au, row.scores.at(au));
            std::cout << buf;
        }
        std::cout << " active=" << au_list_string(row.predicted) << "\n";
    }
    atomic_write_file((fs::path(args.out_dir) / "predictions.tsv").string(),
                      predictions_text(table));
    return partial ? kExitPartial : kExitOk;
}

std::vector<std::pair<std::set<int>, std::set<int>>> pairs_from_predictions_file(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictions file " + path);
    std::vector<std::pair<std::set<int>, std::set<int>>> pairs;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const auto fields = split_fields(line, '\t');
        if (fields.size() < 4) throw std::runtime_error("malformed predictions line: " + line);
        pairs.emplace_back(parse_au_list_field(fields[2]), parse_au_list_field(fields[3]));
    }
    if (pairs.empty()) throw std::runtime_error("predictions file has no rows: " + path);
    return pairs;
}

int cmd_eval(const CommonArgs& args) {
    std::vector<std::pair<std::set<int>, std::set<int>>> pairs;
    if (!args.predictions.empty()) {
        pairs = pairs_from_predictions_file(args.predictions);
    } else {
        const LoadedModels loaded = load_au_models(args.models);
        const Manifest manifest = load_manifest(args.manifest);
        const DetectionTable table = run_detection(manifest, loaded, args.out_dir);
        for (const auto& row : table.rows)
            if (!row.excluded) pairs.emplace_back(row.truth, row.predicted);
    }
    const pipeline::EvalReport report = pipeline::score_predictions(pairs);
    const std::string text = pipeline::format_eval_table(report);
    std::cout << text;
    atomic_write_file((fs::path(args.out_dir) / "report.txt").string(), text);
    atomic_write_file((fs::path(args.out_dir) / "report.csv").string(),
                      pipeline::format_eval_csv(report));
    return kExitOk;
}

int cmd_train_expr(const CommonArgs& args) {
    const Config cfg = merge_config(args);
    const Manifest manifest = load_manifest(args.manifest);

    std::map<std::string, std::string> labels;
    for (const auto& rec : manifest.records)
        if (!rec.expression.empty()) labels[rec.id] = rec.expression;
    if (labels.empty()) throw std::runtime_error("manifest has no expression labels");

    std::ifstream in(args.predictions);
    if (!in) throw std::runtime_error("cannot open predictions file " + args.predictions);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty predictions file");
    const auto header = split_fields(line, '\t');
    if (header.size() < 5 || header[0] != "id")
        throw std::runtime_error("predictions file lacks AU score columns");
    std::vector<int> aus;
    for (std::size_t i = 4; i < header.size(); ++i) {
        if (header[i].rfind("au", 0) != 0)
            throw std::runtime_error("unexpected predictions column '" + header[i] + "'");
        aus.push_back(std::stoi(header[i].substr(2)));
    }

    std::vector<expr::IntensityRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_fields(line, '\t');
        if (fields.size() != 4 + aus.size())
            throw std::runtime_error("malformed predictions line: " + line);
        const auto it = labels.find(fields[0]);
        if (it == labels.end()) continue;
        expr::IntensityRecord rec;
        rec.label = expr::class_from_name(it->second);
        for (std::size_t i = 0; i < aus.size(); ++i)
            rec.au_intensities[aus[i]] = std::clamp(parse_double(fields[4 + i]), 0.0, 2.0);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw std::runtime_error("no labeled records matched the predictions");

    const expr::DecisionTree tree = expr::train_tree(records, cfg.get_int("tree.min_leaf", 2),
                                                     cfg.get_double("tree.confidence", 0.25));
    const std::string path = (fs::path(args.out_dir) / "expression.model").string();
    save_expression_tree(tree, cfg, path);

    const expr::ConfusionReport report = expr::confusion_matrix(tree, records);
    std::cout << "expression tree: " << tree.leaf_count() << " leaves, training accuracy "
              << report.accuracy * 100.0 << "%\n"
              << "written to " << path << "\n";
    return kExitOk;
}

int cmd_export_rules(const CommonArgs& args) {
    const expr::DecisionTree tree = load_expression_tree(args.model_file);
    const std::string rules = expr::export_rules(tree);
    std::cout << rules;
    atomic_write_file((fs::path(args.out_dir) / "rules.txt").string(), rules);
    return kExitOk;
}

} // namespace

Config effective_config(const Config& overrides) {
    Config cfg = builtin_defaults();
    for (const auto& [k, v] : overrides.entries()) {
        if (!cfg.has(k)) throw std::runtime_error("unknown config key '" + k + "'");
        cfg.set(k, v);
    }
    return cfg;
}

pipeline::PipelineConfig pipeline_config_from(const Config& cfg) {
    pipeline::PipelineConfig p;
    p.bank.scales = cfg.get_int("gabor.scales", 4);
    p.bank.orientations = cfg.get_int("gabor.orientations", 4);
    p.bank.kernel_size = cfg.get_int("gabor.kernel_size", 21);
    p.bank.wavelength0 = cfg.get_double("gabor.wavelength0", 4.0);
    p.bank.wavelength_ratio = cfg.get_double("gabor.wavelength_ratio", 1.4142135623730951);
    p.bank.sigma_ratio = cfg.get_double("gabor.sigma_ratio", 0.56);
    p.grid_step = cfg.get_int("gabor.grid_step", 8);
    p.lk.levels = cfg.get_int("track.levels", 3);
    p.lk.window = cfg.get_int("track.window", 15);
    p.lk.max_iters = cfg.get_int("track.max_iters", 20);
    p.lk.eps = cfg.get_double("track.eps", 0.01);
    p.lk.min_eig_rel = cfg.get_double("track.min_eig_rel", 1e-4);
    p.chain.pca2d_rows = cfg.get_int("reduce.pca2d_rows", 16);
    p.chain.pca2d_cols = cfg.get_int("reduce.pca2d_cols", 8);
    p.chain.bda2d_rows = cfg.get_int("reduce.bda2d_rows", 6);
    p.chain.bda2d_cols = cfg.get_int("reduce.bda2d_cols", 4);
    p.chain.pca_dim = cfg.get_int("reduce.pca_dim", 12);
    p.chain.final_dim = cfg.get_int("reduce.final_dim", 6);
    p.chain.ridge = cfg.get_double("reduce.ridge", -1.0);
    p.anfis.lr = cfg.get_double("anfis.lr", 0.01);
    p.anfis.candidate_epochs = cfg.get_int("anfis.candidate_epochs", 50);
    p.anfis.rule_cap = cfg.get_int("anfis.rule_cap", 128);
    p.anfis.lse_ridge = cfg.get_double("anfis.lse_ridge", 1e-8);
    p.anfis.jitter = cfg.get_double("anfis.jitter", 0.0);
    p.anfis.seed = static_cast<unsigned long long>(cfg.get_int("seed", 0));
    p.polish_epochs = cfg.get_int("anfis.polish_epochs", 200);
    p.cut_points = cfg.get_int("pipeline.cuts", 5);
    p.sequence_length = cfg.get_int("pipeline.sequence_length", 10);
    p.threshold = cfg.get_double("pipeline.threshold", 1.0);
    p.val_fraction = cfg.get_double("pipeline.val_fraction", 0.2);
    p.subset_upper = cfg.get_index_list("points.upper", "0-56");
    p.subset_lower = cfg.get_index_list("points.lower", "57-112");
    p.crop_upper = parse_crop(cfg.get_string("crop.upper", ""));
    p.crop_lower = parse_crop(cfg.get_string("crop.lower", ""));
    return p;
}

std::string extraction_hash(const pipeline::LabeledSequence& seq, Region region,
                            const Config& cfg) {
    return hash_hex(region_hash(seq, region, cfg, track_hash(seq, cfg)));
}

pipeline::SequenceFeatures ensure_features(const pipeline::LabeledSequence& seq, Region region,
                                           const Config& cfg, const std::string& cache_dir,
                                           bool* recomputed) {
    const pipeline::PipelineConfig pcfg = pipeline_config_from(cfg);
    const std::string t_hash = hash_hex(track_hash(seq, cfg));
    const std::string r_hash = hash_hex(region_hash(seq, region, cfg, track_hash(seq, cfg)));

    const fs::path dir(cache_dir);
    const std::string tracked_path = (dir / (seq.id + ".tracked")).string();
    const std::string app_path = (dir / (seq.id + "." + region_name(region) + ".app.fm")).string();
    const std::string geo_path = (dir / (seq.id + "." + region_name(region) + ".geo.fm")).string();

    pipeline::SequenceFeatures feats;
    bool did_compute = false;
    if (read_tracked_file(tracked_path, t_hash, feats.tracked) &&
        read_fm_file(app_path, r_hash, feats.appearance) &&
        read_fm_file(geo_path, r_hash, feats.displacement)) {
        if (recomputed) *recomputed = false;
        return feats;
    }

    feats = pipeline::extract_sequence_features(seq, region, pcfg);
    did_compute = true;
    fs::create_directories(dir);
    write_tracked_file(tracked_path, t_hash, feats.tracked);
    write_fm_file(app_path, r_hash, "appearance", feats.appearance);
    write_fm_file(geo_path, r_hash, "geometric", feats.displacement);
    if (recomputed) *recomputed = did_compute;
    return feats;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Facial action unit intensity modeling with neuro-fuzzy systems"};
    app.require_subcommand(1);

    CommonArgs a;
    auto add_common = [&](CLI::App* sub, bool needs_manifest) {
        if (needs_manifest)
            sub->add_option("--manifest", a.manifest, "dataset manifest")->required();
        sub->add_option("--config", a.config_file, "key=value config file");
        sub->add_option("--out", a.out_dir, "output directory");
        sub->add_option("--seed", a.seed, "global seed");
        sub->add_option("--threshold", a.threshold, "detection threshold (default 1)");
        sub->add_option("--cuts", a.cuts, "intensity cuts per sequence (default 5)");
        sub->add_option("--reduced-dim", a.reduced_dim, "final feature dimension (default 6)");
        sub->add_option("--set", a.sets, "extra config override key=value")->take_all();
    };

    CLI::App* extract = app.add_subcommand("extract", "materialize the feature cache");
    add_common(extract, true);

    CLI::App* train_au = app.add_subcommand("train-au", "train per-AU intensity models");
    add_common(train_au, true);
    train_au->add_option("--au", a.au_list, "comma list of AU codes")->required();

    CLI::App* detect = app.add_subcommand("detect", "detect AUs with trained models");
    add_common(detect, true);
    detect->add_option("--models", a.models, "model directory or comma list")->required();

    CLI::App* eval = app.add_subcommand("eval", "score detections against labels");
    add_common(eval, false);
    eval->add_option("--manifest", a.manifest, "dataset manifest");
    eval->add_option("--models", a.models, "model directory or comma list");
    eval->add_option("--predictions", a.predictions, "precomputed predictions.tsv");

    CLI::App* train_expr = app.add_subcommand("train-expr", "train the expression tree");
    add_common(train_expr, true);
    train_expr->add_option("--predictions", a.predictions, "detect output predictions.tsv")
        ->required();

    CLI::App* export_rules = app.add_subcommand("export-rules", "write tree rules as text");
    add_common(export_rules, false);
    export_rules->add_option("--model", a.model_file, "expression-tree model file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (extract->parsed()) return cmd_extract(a);
        if (train_au->parsed()) return cmd_train_au(a);
        if (detect->parsed()) return cmd_detect(a);
        if (eval->parsed()) {
            if (a.predictions.empty() && (a.manifest.empty() || a.models.empty())) {
                std::cerr << "eval needs --predictions or both --manifest and --models\n";
                return kExitUsage;
            }
            return cmd_eval(a);
        }
        if (train_expr->parsed()) return cmd_train_expr(a);
        if (export_rules->parsed()) return cmd_export_rules(a);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitInternal;
}

} // namespace aufuzz::cli
