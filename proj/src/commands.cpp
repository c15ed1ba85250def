#include "synthint/commands.hpp"

#include <spdlog/spdlog.h>

#include "synthint/ingest.hpp"
#include "synthint/pipeline.hpp"

namespace synthint {

namespace {

int fail(std::ostream& err, std::string_view stage, ErrorCode code, const std::string& message) {
    err << "error: "
        << nlohmann::json{{"stage", stage}, {"code", std::string(to_string(code))}, {"message", message}}.dump()
        << '\n';
    return 1;
}

template <typename Body>
int guarded(std::ostream& err, std::string_view stage, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        return fail(err, stage, e.code(), e.what());
    } catch (const std::exception& e) {
        return fail(err, stage, ErrorCode::InvalidArgument, e.what());
    }
}

RunArtifact load_artifact(const std::filesystem::path& path) { return read_run(read_file(path)); }

}  // namespace

int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err) {
    return guarded(err, "run", [&] {
        RunConfig config = load_run_config(cmd.config_path);
        if (cmd.threads) config.threads = *cmd.threads;
        spdlog::debug("deaths={} mobility={}", config.deaths_path.string(), config.mobility_path.string());
        const RunArtifact artifact = run_pipeline(config);
        std::filesystem::path output = cmd.output ? *cmd.output
                                     : config.output ? *config.output
                                                     : std::filesystem::path(artifact.content_hash + ".json");
        if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
        write_file_atomic(output, write_run(artifact));
        out << run_summary(artifact) << "artifact: " << output.string() << '\n';
        return 0;
    });
}

int cmd_validate(const std::filesystem::path& artifact_path, std::ostream& out, std::ostream& err) {
    return guarded(err, "validate", [&] {
        const RunArtifact artifact = load_artifact(artifact_path);
        const ValidationTable table = validation_table(artifact);
        int mismatches = 0;
        for (const auto& row : table.rows) {
            for (const auto& stored : artifact.diagnostics.validation) {
                if (stored.unit_id == row.metrics.unit_id && stored.rmse != row.metrics.rmse) ++mismatches;
            }
        }
        if (mismatches > 0) spdlog::warn("{} stored validation rows differ from recomputation", mismatches);
        out << format_validation_table(table);
        return 0;
    });
}

int cmd_project(const std::filesystem::path& artifact_path, int horizon_days, std::ostream& out, std::ostream& err) {
    return guarded(err, "project", [&] {
        const RunArtifact artifact = load_artifact(artifact_path);
        const ProjectionTable table = compute_projections(counterfactual_set_from(artifact), horizon_days);
        for (const auto& w : table.warnings) spdlog::warn("{}", w);
        out << format_projection_table(table);
        return 0;
    });
}

}  // namespace synthint
