#pragma once

#include "aufuzz/config.hpp"
#include "aufuzz/expression.hpp"
#include "aufuzz/pipeline.hpp"

#include <iosfwd>
#include <string>

namespace aufuzz::cli {

inline constexpr int kModelFormatVersion = 1;

/// Versioned plain-text containers with explicit shapes and 17-significant-
/// digit floats; save -> load -> save is byte-identical.
std::string model_kind(const std::string& path);

void save_au_model(const pipeline::AuModel& model, const Config& snapshot,
                   const std::string& path);
pipeline::AuModel load_au_model(const std::string& path, Config* snapshot_out = nullptr);

void save_expression_tree(const expr::DecisionTree& tree, const Config& snapshot,
                          const std::string& path);
expr::DecisionTree load_expression_tree(const std::string& path, Config* snapshot_out = nullptr);

void save_projection_basis(const reduce::ProjectionBasis& basis, const Config& snapshot,
                           const std::string& path);
reduce::ProjectionBasis load_projection_basis(const std::string& path,
                                              Config* snapshot_out = nullptr);

// Section-level readers/writers shared with the feature cache.
void write_ts_model(std::ostream& out, const std::string& tag, const anfis::TsModel& model);
anfis::TsModel read_ts_model(std::istream& in, const std::string& tag);
void write_basis(std::ostream& out, const std::string& tag, const reduce::ProjectionBasis& basis);
reduce::ProjectionBasis read_basis(std::istream& in, const std::string& tag);

} // namespace aufuzz::cli
