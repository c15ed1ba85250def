#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthint/engine.hpp"
#include "synthint/projection.hpp"

namespace synthint {

inline constexpr int kSchemaVersion = 1;

struct AlignedUnitRecord {
    std::string unit_id;
    std::string day0_date;
    /// Full aligned row, pre- and post-period. NaN marks a missing cell.
    std::vector<double> values;
};

struct ExclusionRecord {
    std::string unit_id;
    std::string stage;
    std::string reason;
    std::string message;
};

struct PanelRecord {
    std::string outcome_name;
    int t0_index = 0;
    std::vector<int> day_labels;
    std::vector<AlignedUnitRecord> units;
    std::vector<ExclusionRecord> exclusions;
};

struct PartitionUnitRecord {
    std::string unit_id;
    std::string label;
    double score = 0.0;
    double coverage = 0.0;
    bool low_coverage = false;
};

struct PartitionRecord {
    std::vector<std::string> labels;
    std::vector<double> edges;
    std::vector<PartitionUnitRecord> units;
    std::map<std::string, std::vector<std::string>> groups;
};

struct TrajectoryRecord {
    std::string unit_id;
    std::string label;
    std::vector<double> values;
};

struct ModelRecord {
    std::string unit_id;
    std::string label;
    std::vector<std::string> donor_ids;
    std::vector<double> weights;
    double pre_fit_rmse = 0.0;
    int rank_pre = 0;
    int rank_post = 0;
    std::vector<DonorWeight> top_donors;
};

struct IssueRecord {
    std::string unit_id;
    std::string label;
    std::string code;
    std::string message;
};

struct ProjectionRecord {
    std::string unit_id;
    std::string current_label;
    std::string label;
    ExpFit fit;
    int horizon_days = 0;
    std::vector<double> projected_days;
    std::vector<double> projected;
    /// Peak over the counterfactual and the fitted extension.
    PeakPoint fitted_peak;
    /// Peak of the raw counterfactual trajectory only.
    PeakPoint raw_peak;
};

struct DiagnosticsRecord {
    std::vector<ModelRecord> models;
    std::vector<ValidationMetrics> validation;
    std::vector<IssueRecord> validation_skipped;
    std::vector<IssueRecord> failures;
    std::vector<std::string> warnings;
    std::vector<ProjectionRecord> projections;
    std::vector<IssueRecord> projection_issues;
};

struct RunArtifact {
    int schema_version = kSchemaVersion;
    nlohmann::json config = nlohmann::json::object();
    PanelRecord panel;
    PartitionRecord partition;
    std::vector<TrajectoryRecord> counterfactuals;
    DiagnosticsRecord diagnostics;
    std::string content_hash;

    const TrajectoryRecord* find_counterfactual(std::string_view unit_id, std::string_view label) const;
    const PartitionUnitRecord* find_unit(std::string_view unit_id) const;
};

/// Pretty JSON with sorted keys and every floating-point number printed with
/// 17 significant digits. NaN and infinities are written as null.
std::string canonical_dump(const nlohmann::json& doc);

std::string sha256_hex(std::string_view bytes);

/// The artifact as a JSON document, without `content_hash`.
nlohmann::json to_document(const RunArtifact& artifact);
RunArtifact from_document(const nlohmann::json& doc);

/// SHA-256 of the canonical document without `content_hash`.
std::string compute_content_hash(const RunArtifact& artifact);

/// Canonical bytes including a freshly computed `content_hash`.
std::string write_run(const RunArtifact& artifact);

/// Throws SchemaVersionMismatch, or HashMismatch when `verify_hash` is set and
/// the stored hash does not match the content.
RunArtifact read_run(std::string_view bytes, bool verify_hash = true);

/// Rebuilds the engine view (observed post rows, trajectories, models) from a
/// stored artifact.
CounterfactualSet counterfactual_set_from(const RunArtifact& artifact);

/// Directory of immutable artifacts named `<content_hash>.json`.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path dir);

    struct PutResult {
        std::string id;
        bool created = false;
    };

    PutResult put(const RunArtifact& artifact) const;
    bool contains(std::string_view id) const;
    RunArtifact get(std::string_view id) const;
    std::vector<std::string> list() const;
    std::filesystem::path path_of(std::string_view id) const;

private:
    std::filesystem::path dir_;
};

}  // namespace synthint
