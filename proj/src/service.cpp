#include "synthint/service.hpp"

#include <charconv>
#include <cmath>
#include <future>
#include <memory>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "synthint/pipeline.hpp"

namespace synthint {

using nlohmann::json;

namespace {

ServiceResponse reply(int status, const json& body) { return {status, canonical_dump(body)}; }

ServiceResponse error_reply(int status, ErrorCode code, const std::string& message) {
    return reply(status, {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}});
}

json reals(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    return out;
}

}  // namespace

RunService::RunService(ServiceOptions options) : options_(std::move(options)), store_(options_.artifact_dir) {}

ServiceResponse RunService::list_runs() const {
    json runs = json::array();
    for (const auto& id : store_.list()) {
        try {
            runs.push_back({{"id", id}, {"config", store_.get(id).config}});
        } catch (const Error& e) {
            spdlog::warn("skipping unreadable artifact {}: {}", id, e.what());
        }
    }
    return reply(200, {{"runs", runs}});
}

ServiceResponse RunService::get_run(std::string_view id) const {
    if (!store_.contains(id)) return error_reply(404, ErrorCode::FileNotFound, "unknown run id");
    return {200, write_run(store_.get(id))};
}

ServiceResponse RunService::get_counterfactuals(std::string_view id, std::string_view unit) const {
    if (!store_.contains(id)) return error_reply(404, ErrorCode::FileNotFound, "unknown run id");
    if (unit.empty()) return error_reply(400, ErrorCode::InvalidArgument, "query parameter 'unit' is required");
    const RunArtifact a = store_.get(id);
    const AlignedUnitRecord* row = nullptr;
    for (const auto& u : a.panel.units) {
        if (u.unit_id == unit) row = &u;
    }
    const auto* pu = a.find_unit(unit);
    if (row == nullptr || pu == nullptr) return error_reply(404, ErrorCode::InvalidArgument, "unknown unit");

    json trajectories = json::object();
    json donors = json::object();
    for (const auto& label : a.partition.labels) {
        if (const auto* t = a.find_counterfactual(unit, label)) trajectories[label] = reals(t->values);
        for (const auto& m : a.diagnostics.models) {
            if (m.unit_id != unit || m.label != label) continue;
            json top = json::array();
            for (const auto& d : m.top_donors) top.push_back({{"donor_id", d.donor_id}, {"weight", d.weight}});
            donors[label] = top;
        }
    }
    const auto t0 = static_cast<std::size_t>(a.panel.t0_index);
    std::vector<int> post_days(a.panel.day_labels.begin() + static_cast<std::ptrdiff_t>(t0), a.panel.day_labels.end());
    return reply(200, {{"run_id", std::string(id)},
                       {"unit_id", std::string(unit)},
                       {"own_label", pu->label},
                       {"day0_date", row->day0_date},
                       {"labels", a.partition.labels},
                       {"day_labels", a.panel.day_labels},
                       {"observed", reals(row->values)},
                       {"post_days", post_days},
                       {"trajectories", trajectories},
                       {"top_donors", donors}});
}

ServiceResponse RunService::get_diagnostics(std::string_view id) const {
    if (!store_.contains(id)) return error_reply(404, ErrorCode::FileNotFound, "unknown run id");
    const json doc = to_document(store_.get(id));
    json body = doc.at("diagnostics");
    body["exclusions"] = doc.at("panel").at("exclusions");
    return reply(200, body);
}

ServiceResponse RunService::get_projections(std::string_view id, std::string_view unit) const {
    if (!store_.contains(id)) return error_reply(404, ErrorCode::FileNotFound, "unknown run id");
    const json doc = to_document(store_.get(id));
    json rows = json::array();
    for (const auto& p : doc.at("diagnostics").at("projections")) {
        if (unit.empty() || p.at("unit_id") == unit) rows.push_back(p);
    }
    return reply(200, {{"run_id", std::string(id)}, {"projections", rows}});
}

ServiceResponse RunService::post_run(std::string_view body) const {
    RunConfig config;
    try {
        config = parse_run_config(json::parse(body), options_.data_root);
    } catch (const json::parse_error& e) {
        return error_reply(400, ErrorCode::InvalidConfig, e.what());
    } catch (const Error& e) {
        return error_reply(400, e.code(), e.what());
    }
    RunInputs inputs;
    try {
        inputs = load_inputs(config);
    } catch (const Error& e) {
        return error_reply(400, e.code(), e.what());
    }

    // The worker owns copies of everything it touches so that it can outlive
    // a timed-out request.
    auto task = std::make_shared<std::packaged_task<ArtifactStore::PutResult()>>(
        [config, inputs = std::move(inputs), store = store_] { return store.put(run_pipeline(config, inputs)); });
    auto result = task->get_future();
    std::thread([task] { (*task)(); }).detach();
    if (result.wait_for(options_.run_timeout) != std::future_status::ready) {
        return error_reply(504, ErrorCode::RunTimeout, "run exceeded the configured timeout");
    }
    try {
        const auto put = result.get();
        return reply(put.created ? 201 : 200, {{"id", put.id}, {"created", put.created}});
    } catch (const Error& e) {
        return error_reply(422, e.code(), e.what());
    } catch (const std::exception& e) {
        return error_reply(422, ErrorCode::InvalidArgument, e.what());
    }
}

void RunService::mount(httplib::Server& server) const {
    auto send = [](httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/runs", [this, send](const httplib::Request&, httplib::Response& res) { send(res, list_runs()); });
    server.Get(R"(/runs/([0-9a-f]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_run(req.matches[1].str()));
    });
    server.Get(R"(/runs/([0-9a-f]+)/counterfactuals)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_counterfactuals(req.matches[1].str(), req.get_param_value("unit")));
    });
    server.Get(R"(/runs/([0-9a-f]+)/diagnostics)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_diagnostics(req.matches[1].str()));
    });
    server.Get(R"(/runs/([0-9a-f]+)/projections)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_projections(req.matches[1].str(), req.get_param_value("unit")));
    });
    server.Post("/runs", [this, send](const httplib::Request& req, httplib::Response& res) {
        const auto r = post_run(req.body);
        spdlog::info("POST /runs -> {}", r.status);
        send(res, r);
    });
}

BindAddress parse_bind_address(std::string_view text) {
    BindAddress bind;
    const auto colon = text.rfind(':');
    std::string_view port = text;
    if (colon != std::string_view::npos) {
        if (colon > 0) bind.host = std::string(text.substr(0, colon));
        port = text.substr(colon + 1);
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (ec != std::errc{} || ptr != port.data() + port.size() || value < 0 || value > 65535) {
        throw Error(ErrorCode::InvalidArgument, "bad bind address '" + std::string(text) + "'");
    }
    bind.port = value;
    return bind;
}

void serve(const RunService& service, const BindAddress& bind) {
    httplib::Server server;
    service.mount(server);
    spdlog::info("serving {} stored runs on {}:{}", service.store().list().size(), bind.host, bind.port);
    if (!server.listen(bind.host, bind.port)) {
        throw Error(ErrorCode::InvalidArgument, "cannot listen on " + bind.host + ":" + std::to_string(bind.port));
    }
}

}  // namespace synthint
