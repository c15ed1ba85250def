#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "synthint/artifact.hpp"

namespace httplib {
class Server;
}

namespace synthint {

struct ServiceOptions {
    std::filesystem::path artifact_dir = "runs";
    /// Relative input paths in posted configs resolve against this directory.
    std::filesystem::path data_root = ".";
    std::chrono::milliseconds run_timeout{std::chrono::seconds{120}};
};

struct ServiceResponse {
    int status = 200;
    /// Canonical JSON text.
    std::string body;
};

/// Read-only views over stored artifacts plus synchronous re-runs. Every
/// response is derived from immutable artifacts on disk.
class RunService {
public:
    explicit RunService(ServiceOptions options);

    ServiceResponse list_runs() const;
    ServiceResponse get_run(std::string_view id) const;
    ServiceResponse get_counterfactuals(std::string_view id, std::string_view unit) const;
    ServiceResponse get_diagnostics(std::string_view id) const;
    ServiceResponse get_projections(std::string_view id, std::string_view unit) const;
    /// 201 with the new id, 200 when an identical artifact already exists.
    ServiceResponse post_run(std::string_view body) const;

    void mount(httplib::Server& server) const;
    const ArtifactStore& store() const noexcept { return store_; }

private:
    ServiceOptions options_;
    ArtifactStore store_;
};

struct BindAddress {
    std::string host = "127.0.0.1";
    int port = 8080;
};

BindAddress parse_bind_address(std::string_view text);

/// Blocks serving `service` until the process is stopped.
void serve(const RunService& service, const BindAddress& bind);

}  // namespace synthint
