#include "synthint/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <openssl/evp.h>

#include "synthint/ingest.hpp"

namespace synthint {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_real(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json reals(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(real(v));
    return out;
}

std::vector<double> get_reals(const json& j) {
    std::vector<double> out;
    for (const auto& v : j) out.push_back(get_real(v));
    return out;
}

void dump_number(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

void dump_value(std::string& out, const json& j, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            // nlohmann::json keeps object keys in a std::map, so iteration is sorted.
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                out += json(it.key()).dump();
                out += ": ";
                dump_value(out, it.value(), indent + 2);
            }
            out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                dump_value(out, v, indent + 2);
            }
            out += "\n" + std::string(static_cast<std::size_t>(indent), ' ') + "]";
            return;
        }
        case json::value_t::number_float:
            dump_number(out, j.get<double>());
            return;
        default:
            out += j.dump();
            return;
    }
}

json issue_json(const IssueRecord& r) {
    return {{"unit_id", r.unit_id}, {"label", r.label}, {"code", r.code}, {"message", r.message}};
}

IssueRecord issue_from(const json& j) {
    return {j.at("unit_id").get<std::string>(), j.at("label").get<std::string>(), j.at("code").get<std::string>(),
            j.at("message").get<std::string>()};
}

json peak_json(const PeakPoint& p) {
    return {{"day", real(p.day)}, {"value", real(p.value)}, {"source", p.from_projection ? "projected" : "observed"}};
}

PeakPoint peak_from(const json& j) {
    return {get_real(j.at("day")), get_real(j.at("value")), j.at("source").get<std::string>() == "projected"};
}

}  // namespace

const TrajectoryRecord* RunArtifact::find_counterfactual(std::string_view unit_id, std::string_view label) const {
    for (const auto& t : counterfactuals) {
        if (t.unit_id == unit_id && t.label == label) return &t;
    }
    return nullptr;
}

const PartitionUnitRecord* RunArtifact::find_unit(std::string_view unit_id) const {
    for (const auto& u : partition.units) {
        if (u.unit_id == unit_id) return &u;
    }
    return nullptr;
}

std::string canonical_dump(const json& doc) {
    std::string out;
    dump_value(out, doc, 0);
    out += "\n";
    return out;
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::InvalidArgument, "sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

json to_document(const RunArtifact& a) {
    json doc;
    doc["schema_version"] = a.schema_version;
    doc["config"] = a.config;

    json units = json::array();
    for (const auto& u : a.panel.units) {
        units.push_back({{"unit_id", u.unit_id}, {"day0_date", u.day0_date}, {"values", reals(u.values)}});
    }
    json exclusions = json::array();
    for (const auto& e : a.panel.exclusions) {
        exclusions.push_back({{"unit_id", e.unit_id}, {"stage", e.stage}, {"reason", e.reason}, {"message", e.message}});
    }
    doc["panel"] = {{"outcome_name", a.panel.outcome_name},
                    {"t0_index", a.panel.t0_index},
                    {"day_labels", a.panel.day_labels},
                    {"units", units},
                    {"exclusions", exclusions}};

    json punits = json::array();
    for (const auto& u : a.partition.units) {
        punits.push_back({{"unit_id", u.unit_id},
                          {"label", u.label},
                          {"score", real(u.score)},
                          {"coverage", real(u.coverage)},
                          {"low_coverage", u.low_coverage}});
    }
    doc["partition"] = {{"labels", a.partition.labels},
                        {"edges", reals(a.partition.edges)},
                        {"units", punits},
                        {"groups", a.partition.groups}};

    json cfs = json::array();
    for (const auto& t : a.counterfactuals) {
        cfs.push_back({{"unit_id", t.unit_id}, {"label", t.label}, {"values", reals(t.values)}});
    }
    doc["counterfactuals"] = cfs;

    const auto& d = a.diagnostics;
    json models = json::array();
    for (const auto& m : d.models) {
        json top = json::array();
        for (const auto& dw : m.top_donors) top.push_back({{"donor_id", dw.donor_id}, {"weight", real(dw.weight)}});
        models.push_back({{"unit_id", m.unit_id},
                          {"label", m.label},
                          {"donor_ids", m.donor_ids},
                          {"weights", reals(m.weights)},
                          {"pre_fit_rmse", real(m.pre_fit_rmse)},
                          {"rank_pre", m.rank_pre},
                          {"rank_post", m.rank_post},
                          {"top_donors", top}});
    }
    json validation = json::array();
    for (const auto& v : d.validation) {
        validation.push_back({{"unit_id", v.unit_id},
                              {"label", v.label},
                              {"rmse", real(v.rmse)},
                              {"mape", real(v.mape)},
                              {"r2", real(v.r2)},
                              {"observed_days", v.observed_days}});
    }
    auto issues = [](const std::vector<IssueRecord>& list) {
        json out = json::array();
        for (const auto& r : list) out.push_back(issue_json(r));
        return out;
    };
    json projections = json::array();
    for (const auto& p : d.projections) {
        projections.push_back({{"unit_id", p.unit_id},
                               {"current_label", p.current_label},
                               {"label", p.label},
                               {"fit",
                                {{"a", real(p.fit.a)},
                                 {"b", real(p.fit.b)},
                                 {"first_day", real(p.fit.first_day)},
                                 {"last_day", real(p.fit.last_day)},
                                 {"r2_log", real(p.fit.r2_log)},
                                 {"points_used", p.fit.points_used},
                                 {"points_excluded", p.fit.points_excluded}}},
                               {"horizon_days", p.horizon_days},
                               {"projected_days", reals(p.projected_days)},
                               {"projected", reals(p.projected)},
                               {"fitted_peak", peak_json(p.fitted_peak)},
                               {"raw_peak", peak_json(p.raw_peak)}});
    }
    doc["diagnostics"] = {{"models", models},
                          {"validation", validation},
                          {"validation_skipped", issues(d.validation_skipped)},
                          {"failures", issues(d.failures)},
                          {"warnings", d.warnings},
                          {"projections", projections},
                          {"projection_issues", issues(d.projection_issues)}};
    return doc;
}

RunArtifact from_document(const json& doc) {
    RunArtifact a;
    if (!doc.is_object() || !doc.contains("schema_version")) {
        throw Error(ErrorCode::SchemaVersionMismatch, "document has no schema_version");
    }
    a.schema_version = doc.at("schema_version").get<int>();
    if (a.schema_version != kSchemaVersion) {
        throw Error(ErrorCode::SchemaVersionMismatch, "schema_version " + std::to_string(a.schema_version) +
                                                          ", expected " + std::to_string(kSchemaVersion));
    }
    try {
        a.config = doc.at("config");

        const auto& panel = doc.at("panel");
        a.panel.outcome_name = panel.at("outcome_name").get<std::string>();
        a.panel.t0_index = panel.at("t0_index").get<int>();
        a.panel.day_labels = panel.at("day_labels").get<std::vector<int>>();
        for (const auto& u : panel.at("units")) {
            a.panel.units.push_back({u.at("unit_id").get<std::string>(), u.at("day0_date").get<std::string>(),
                                     get_reals(u.at("values"))});
        }
        for (const auto& e : panel.at("exclusions")) {
            a.panel.exclusions.push_back({e.at("unit_id").get<std::string>(), e.at("stage").get<std::string>(),
                                          e.at("reason").get<std::string>(), e.at("message").get<std::string>()});
        }

        const auto& part = doc.at("partition");
        a.partition.labels = part.at("labels").get<std::vector<std::string>>();
        a.partition.edges = get_reals(part.at("edges"));
        for (const auto& u : part.at("units")) {
            a.partition.units.push_back({u.at("unit_id").get<std::string>(), u.at("label").get<std::string>(),
                                         get_real(u.at("score")), get_real(u.at("coverage")),
                                         u.at("low_coverage").get<bool>()});
        }
        a.partition.groups = part.at("groups").get<std::map<std::string, std::vector<std::string>>>();

        for (const auto& t : doc.at("counterfactuals")) {
            a.counterfactuals.push_back(
                {t.at("unit_id").get<std::string>(), t.at("label").get<std::string>(), get_reals(t.at("values"))});
        }

        const auto& diag = doc.at("diagnostics");
        auto& d = a.diagnostics;
        for (const auto& m : diag.at("models")) {
            ModelRecord r;
            r.unit_id = m.at("unit_id").get<std::string>();
            r.label = m.at("label").get<std::string>();
            r.donor_ids = m.at("donor_ids").get<std::vector<std::string>>();
            r.weights = get_reals(m.at("weights"));
            r.pre_fit_rmse = get_real(m.at("pre_fit_rmse"));
            r.rank_pre = m.at("rank_pre").get<int>();
            r.rank_post = m.at("rank_post").get<int>();
            for (const auto& dw : m.at("top_donors")) {
                r.top_donors.push_back({dw.at("donor_id").get<std::string>(), get_real(dw.at("weight"))});
            }
            d.models.push_back(std::move(r));
        }
        for (const auto& v : diag.at("validation")) {
            ValidationMetrics m;
            m.unit_id = v.at("unit_id").get<std::string>();
            m.label = v.at("label").get<std::string>();
            m.rmse = get_real(v.at("rmse"));
            m.mape = get_real(v.at("mape"));
            m.r2 = get_real(v.at("r2"));
            m.observed_days = v.at("observed_days").get<std::size_t>();
            d.validation.push_back(std::move(m));
        }
        for (const auto& r : diag.at("validation_skipped")) d.validation_skipped.push_back(issue_from(r));
        for (const auto& r : diag.at("failures")) d.failures.push_back(issue_from(r));
        d.warnings = diag.at("warnings").get<std::vector<std::string>>();
        for (const auto& p : diag.at("projections")) {
            ProjectionRecord r;
            r.unit_id = p.at("unit_id").get<std::string>();
            r.current_label = p.at("current_label").get<std::string>();
            r.label = p.at("label").get<std::string>();
            const auto& f = p.at("fit");
            r.fit.a = get_real(f.at("a"));
            r.fit.b = get_real(f.at("b"));
            r.fit.first_day = get_real(f.at("first_day"));
            r.fit.last_day = get_real(f.at("last_day"));
            r.fit.r2_log = get_real(f.at("r2_log"));
            r.fit.points_used = f.at("points_used").get<std::size_t>();
            r.fit.points_excluded = f.at("points_excluded").get<std::size_t>();
            r.horizon_days = p.at("horizon_days").get<int>();
            r.projected_days = get_reals(p.at("projected_days"));
            r.projected = get_reals(p.at("projected"));
            r.fitted_peak = peak_from(p.at("fitted_peak"));
            r.raw_peak = peak_from(p.at("raw_peak"));
            d.projections.push_back(std::move(r));
        }
        for (const auto& r : diag.at("projection_issues")) d.projection_issues.push_back(issue_from(r));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaVersionMismatch, std::string("artifact does not match schema: ") + e.what());
    }
    if (doc.contains("content_hash")) a.content_hash = doc.at("content_hash").get<std::string>();
    return a;
}

std::string compute_content_hash(const RunArtifact& artifact) {
    return sha256_hex(canonical_dump(to_document(artifact)));
}

std::string write_run(const RunArtifact& artifact) {
    json doc = to_document(artifact);
    doc["content_hash"] = sha256_hex(canonical_dump(doc));
    return canonical_dump(doc);
}

RunArtifact read_run(std::string_view bytes, bool verify_hash) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaVersionMismatch, std::string("artifact is not valid JSON: ") + e.what());
    }
    RunArtifact a = from_document(doc);
    if (verify_hash) {
        const auto expected = compute_content_hash(a);
        if (a.content_hash != expected) {
            throw Error(ErrorCode::HashMismatch,
                        "content_hash '" + a.content_hash + "' does not match content (" + expected + ")");
        }
    }
    return a;
}

CounterfactualSet counterfactual_set_from(const RunArtifact& a) {
    CounterfactualSet cf;
    cf.labels = a.partition.labels;
    const auto t0 = static_cast<std::size_t>(a.panel.t0_index);
    const std::size_t post = a.panel.day_labels.size() - t0;
    for (std::size_t c = 0; c < post; ++c) cf.post_days.push_back(static_cast<int>(c));

    std::vector<const AlignedUnitRecord*> rows;
    for (const auto& u : a.panel.units) {
        const auto* pu = a.find_unit(u.unit_id);
        if (pu == nullptr) continue;
        cf.unit_ids.push_back(u.unit_id);
        cf.own_labels.push_back(pu->label);
        rows.push_back(&u);
    }
    cf.observed.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(post));
    cf.observed_mask.resize(cf.observed.rows(), cf.observed.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < post; ++c) {
            const double v = rows[i]->values.at(t0 + c);
            cf.observed(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
            cf.observed_mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::isfinite(v);
        }
    }
    for (const auto& t : a.counterfactuals) {
        CounterfactualEntry e;
        e.unit_id = t.unit_id;
        e.label = t.label;
        e.trajectory = Eigen::Map<const Eigen::VectorXd>(t.values.data(), static_cast<Eigen::Index>(t.values.size()));
        for (const auto& m : a.diagnostics.models) {
            if (m.unit_id == t.unit_id && m.label == t.label) {
                e.model.target_id = m.unit_id;
                e.model.label = m.label;
                e.model.donor_ids = m.donor_ids;
                e.model.weights =
                    Eigen::Map<const Eigen::VectorXd>(m.weights.data(), static_cast<Eigen::Index>(m.weights.size()));
                e.model.pre_fit_rmse = m.pre_fit_rmse;
                e.model.rank_pre = m.rank_pre;
                e.model.rank_post = m.rank_post;
                break;
            }
        }
        cf.entries.push_back(std::move(e));
    }
    return cf;
}

namespace {

bool valid_id(std::string_view id) {
    return id.size() == 64 && std::all_of(id.begin(), id.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

}  // namespace

ArtifactStore::ArtifactStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ArtifactStore::path_of(std::string_view id) const {
    return dir_ / (std::string(id) + ".json");
}

ArtifactStore::PutResult ArtifactStore::put(const RunArtifact& artifact) const {
    const std::string bytes = write_run(artifact);
    const std::string id = compute_content_hash(artifact);
    PutResult result{id, false};
    if (!contains(id)) {
        write_file_atomic(path_of(id), bytes);
        result.created = true;
    }
    return result;
}

bool ArtifactStore::contains(std::string_view id) const {
    return valid_id(id) && std::filesystem::exists(path_of(id));
}

RunArtifact ArtifactStore::get(std::string_view id) const {
    if (!contains(id)) throw Error(ErrorCode::FileNotFound, "unknown run id '" + std::string(id) + "'");
    return read_run(read_file(path_of(id)));
}

std::vector<std::string> ArtifactStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        auto stem = entry.path().stem().string();
        if (valid_id(stem)) ids.push_back(std::move(stem));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace synthint
