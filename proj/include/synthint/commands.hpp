#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

namespace synthint {

// Command implementations behind the `si` executable. Each returns a process
// exit code; fatal failures print one JSON error line to `err`.

struct RunCommand {
    std::filesystem::path config_path;
    std::optional<std::filesystem::path> output;
    std::optional<unsigned> threads;
};

int cmd_run(const RunCommand& cmd, std::ostream& out, std::ostream& err);
int cmd_validate(const std::filesystem::path& artifact_path, std::ostream& out, std::ostream& err);
int cmd_project(const std::filesystem::path& artifact_path, int horizon_days, std::ostream& out, std::ostream& err);

}  // namespace synthint
