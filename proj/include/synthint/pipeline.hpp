#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthint/artifact.hpp"
#include "synthint/panel.hpp"
#include "synthint/svt.hpp"

namespace synthint {

struct RunConfig {
    std::filesystem::path deaths_path;
    std::filesystem::path mobility_path;
    AlignmentSpec alignment;
    MobilityScoreSpec mobility;
    /// Set when the buckets came from a named preset.
    std::optional<std::string> bucket_preset;
    BucketSpec buckets = BucketSpec::memo3();
    SvtConfig svt;
    int horizon_days = kDefaultHorizonDays;
    std::size_t top_k = 4;
    std::optional<std::filesystem::path> output;
    unsigned threads = 1;
};

/// Relative input paths are resolved against `base_dir`. Unknown keys,
/// missing inputs and invalid specs raise InvalidConfig.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// The configuration as recorded in artifacts: everything that affects the
/// result, with input files identified by content hash instead of path.
nlohmann::json config_echo(const RunConfig& config, const std::string& deaths_bytes,
                           const std::string& mobility_bytes);

struct RunInputs {
    std::string deaths_csv;
    std::string mobility_csv;
};

/// Reads both input files; FileNotFound names the missing path.
RunInputs load_inputs(const RunConfig& config);

/// ingest, align, score, bucket, estimate, validate, project. Returns an
/// artifact with `content_hash` filled in.
RunArtifact run_pipeline(const RunConfig& config, const RunInputs& inputs);
RunArtifact run_pipeline(const RunConfig& config);

/// Fits and extends each unit's counterfactuals under every intervention less
/// restrictive than the one it received. Units already in the least
/// restrictive bucket contribute a warning and no rows.
struct ProjectionTable {
    std::vector<ProjectionRecord> rows;
    std::vector<IssueRecord> issues;
    std::vector<std::string> warnings;
};

ProjectionTable compute_projections(const CounterfactualSet& cf, int horizon_days);

struct ValidationRow {
    ValidationMetrics metrics;
    std::vector<DonorWeight> top_donors;
};

struct ValidationTable {
    std::vector<ValidationRow> rows;
    std::vector<IssueRecord> skipped;
};

/// Recomputes self-validation metrics from the stored trajectories.
ValidationTable validation_table(const RunArtifact& artifact, std::size_t top_k = 4);

std::string format_validation_table(const ValidationTable& table);
std::string format_projection_table(const ProjectionTable& table);
std::string run_summary(const RunArtifact& artifact);

}  // namespace synthint
