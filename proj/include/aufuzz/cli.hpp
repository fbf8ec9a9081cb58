#pragma once

#include "aufuzz/config.hpp"
#include "aufuzz/pipeline.hpp"

#include <string>
#include <vector>

namespace aufuzz::cli {

// Exit codes are part of the tool contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitPartial = 4;

/// Runs one CLI invocation (args exclude the program name).
int run(const std::vector<std::string>& args);

/// Effective configuration: built-in defaults, then the config file, then
/// flag overrides. The result is also the model container snapshot.
Config effective_config(const Config& overrides);
pipeline::PipelineConfig pipeline_config_from(const Config& cfg);

/// Content hash covering the input files and every extraction-relevant
/// setting for one region.
std::string extraction_hash(const pipeline::LabeledSequence& seq, Region region,
                            const Config& cfg);

/// Loads the per-sequence feature cache for one region, recomputing and
/// rewriting it when the content hash is stale.
pipeline::SequenceFeatures ensure_features(const pipeline::LabeledSequence& seq, Region region,
                                           const Config& cfg, const std::string& cache_dir,
                                           bool* recomputed = nullptr);

} // namespace aufuzz::cli
