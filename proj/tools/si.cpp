// si: command-line driver for the synthetic interventions engine.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "synthint/commands.hpp"
#include "synthint/service.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual trajectories under every intervention via synthetic interventions"};
    app.require_subcommand(1);

    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    synthint::RunCommand run;
    std::string run_output;
    unsigned run_threads = 0;
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline and write an artifact");
    run_cmd->add_option("--config", run.config_path, "Run configuration (JSON)")->required();
    run_cmd->add_option("--output", run_output, "Artifact path (overrides the config)");
    run_cmd->add_option("--threads", run_threads, "Worker threads for estimation")->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Self-validation metrics and top donors per unit");
    validate_cmd->add_option("artifact", validate_path, "Run artifact")->required();

    std::string project_path;
    int horizon = 30;
    auto* project_cmd = app.add_subcommand("project", "Exponential projections for less restrictive interventions");
    project_cmd->add_option("artifact", project_path, "Run artifact")->required();
    project_cmd->add_option("--horizon", horizon, "Days to project past the post-period")->check(CLI::PositiveNumber);

    synthint::ServiceOptions service;
    std::string bind = "127.0.0.1:8080";
    int timeout_s = 120;
    auto* serve_cmd = app.add_subcommand("serve", "Serve stored runs over HTTP/JSON");
    serve_cmd->add_option("--dir", service.artifact_dir, "Artifact directory")->required();
    serve_cmd->add_option("--bind", bind, "host:port");
    serve_cmd->add_option("--data-root", service.data_root, "Base directory for relative input paths");
    serve_cmd->add_option("--timeout", timeout_s, "Seconds allowed per POST /runs")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("si"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (*run_cmd) {
        if (!run_output.empty()) run.output = run_output;
        if (run_threads > 0) run.threads = run_threads;
        return synthint::cmd_run(run, std::cout, std::cerr);
    }
    if (*validate_cmd) return synthint::cmd_validate(validate_path, std::cout, std::cerr);
    if (*project_cmd) return synthint::cmd_project(project_path, horizon, std::cout, std::cerr);
    if (*serve_cmd) {
        try {
            service.run_timeout = std::chrono::seconds{timeout_s};
            const synthint::RunService svc(service);
            synthint::serve(svc, synthint::parse_bind_address(bind));
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 0;
}
