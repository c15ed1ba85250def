#include "synthint/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "synthint/ingest.hpp"

namespace synthint {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad_config(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
            bad_config("unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        bad_config(where + "." + key + " has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

ExclusionRecord exclusion(const std::string& unit, const std::string& stage, ErrorCode code, const std::string& msg) {
    return {unit, stage, std::string(to_string(code)), msg};
}

IssueRecord issue(const PairIssue& p) { return {p.unit_id, p.label, std::string(to_string(p.code)), p.message}; }

std::string fmt_real(double v, int precision = 4) {
    if (!std::isfinite(v)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "config",
               {"deaths", "mobility", "alignment", "mobility_score", "bucket_preset", "buckets", "svt", "horizon_days",
                "top_k", "output", "threads"});
    RunConfig c;
    if (!doc.contains("deaths") || !doc.at("deaths").is_string()) bad_config("config.deaths must be a path");
    if (!doc.contains("mobility") || !doc.at("mobility").is_string()) bad_config("config.mobility must be a path");
    c.deaths_path = resolve(base_dir, doc.at("deaths").get<std::string>());
    c.mobility_path = resolve(base_dir, doc.at("mobility").get<std::string>());

    try {
        if (doc.contains("alignment")) {
            const auto& a = doc.at("alignment");
            check_keys(a, "alignment", {"event_threshold", "pre_window_days", "post_window_days", "smooth"});
            c.alignment.event_threshold = get_or(a, "event_threshold", c.alignment.event_threshold, "alignment");
            c.alignment.pre_window_days = get_or(a, "pre_window_days", c.alignment.pre_window_days, "alignment");
            c.alignment.post_window_days = get_or(a, "post_window_days", c.alignment.post_window_days, "alignment");
            c.alignment.smooth = get_or(a, "smooth", c.alignment.smooth, "alignment");
        }
        c.alignment.validate();

        if (doc.contains("mobility_score")) {
            const auto& m = doc.at("mobility_score");
            check_keys(m, "mobility_score", {"categories", "lag_window"});
            c.mobility.categories = get_or(m, "categories", c.mobility.categories, "mobility_score");
            if (m.contains("lag_window")) {
                auto lag = get_or(m, "lag_window", std::vector<int>{}, "mobility_score");
                if (lag.size() != 2) bad_config("mobility_score.lag_window must be [first, last]");
                c.mobility.lag_first = lag[0];
                c.mobility.lag_last = lag[1];
            }
        }
        c.mobility.validate();

        const bool has_preset = doc.contains("bucket_preset");
        const bool has_spec = doc.contains("buckets");
        if (has_preset == has_spec) bad_config("exactly one of bucket_preset or buckets is required");
        if (has_preset) {
            const auto name = get_or(doc, "bucket_preset", std::string{}, "config");
            auto preset = BucketSpec::preset(name);
            if (!preset) bad_config("unknown bucket preset '" + name + "'");
            c.bucket_preset = name;
            c.buckets = *preset;
        } else {
            const auto& b = doc.at("buckets");
            check_keys(b, "buckets", {"edges", "labels"});
            c.buckets = BucketSpec(get_or(b, "edges", std::vector<double>{}, "buckets"),
                                   get_or(b, "labels", std::vector<std::string>{}, "buckets"));
        }

        if (doc.contains("svt")) {
            const auto& s = doc.at("svt");
            check_keys(s, "svt", {"rule", "fraction", "rank", "min_rank"});
            const auto rule = get_or(s, "rule", std::string("energy"), "svt");
            if (rule == "energy") {
                c.svt.rule = EnergyRank{get_or(s, "fraction", 0.90, "svt")};
            } else if (rule == "fixed") {
                if (!s.contains("rank")) bad_config("svt.rank is required for the fixed rule");
                c.svt.rule = FixedRank{get_or(s, "rank", 1, "svt")};
            } else {
                bad_config("svt.rule must be 'energy' or 'fixed'");
            }
            c.svt.min_rank = get_or(s, "min_rank", 1, "svt");
        }
        c.svt.validate();

        c.horizon_days = get_or(doc, "horizon_days", c.horizon_days, "config");
        if (c.horizon_days < 1) bad_config("horizon_days must be >= 1");
        const int top_k = get_or(doc, "top_k", 4, "config");
        if (top_k < 1) bad_config("top_k must be >= 1");
        c.top_k = static_cast<std::size_t>(top_k);
        if (doc.contains("output")) c.output = resolve(base_dir, get_or(doc, "output", std::string{}, "config"));
        const int threads = get_or(doc, "threads", 1, "config");
        if (threads < 1) bad_config("threads must be >= 1");
        c.threads = static_cast<unsigned>(threads);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidConfig) throw;
        bad_config(e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        bad_config("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

json config_echo(const RunConfig& c, const std::string& deaths_bytes, const std::string& mobility_bytes) {
    json svt;
    if (const auto* f = std::get_if<FixedRank>(&c.svt.rule)) {
        svt = {{"rule", "fixed"}, {"rank", f->rank}, {"min_rank", c.svt.min_rank}};
    } else {
        svt = {{"rule", "energy"}, {"fraction", std::get<EnergyRank>(c.svt.rule).fraction}, {"min_rank", c.svt.min_rank}};
    }
    return {
        {"inputs", {{"deaths_sha256", sha256_hex(deaths_bytes)}, {"mobility_sha256", sha256_hex(mobility_bytes)}}},
        {"alignment",
         {{"event_threshold", c.alignment.event_threshold},
          {"pre_window_days", c.alignment.pre_window_days},
          {"post_window_days", c.alignment.post_window_days},
          {"smooth", c.alignment.smooth}}},
        {"mobility_score",
         {{"categories", c.mobility.categories}, {"lag_window", {c.mobility.lag_first, c.mobility.lag_last}}}},
        {"buckets",
         {{"preset", c.bucket_preset ? json(*c.bucket_preset) : json(nullptr)},
          {"edges", c.buckets.edges()},
          {"labels", c.buckets.labels()}}},
        {"svt", svt},
        {"horizon_days", c.horizon_days},
        {"top_k", c.top_k},
    };
}

RunInputs load_inputs(const RunConfig& config) {
    return {read_file(config.deaths_path), read_file(config.mobility_path)};
}

ProjectionTable compute_projections(const CounterfactualSet& cf, int horizon_days) {
    ProjectionTable table;
    for (std::size_t i = 0; i < cf.unit_ids.size(); ++i) {
        const auto& unit = cf.unit_ids[i];
        const auto& own = cf.own_labels[i];
        const auto own_level = static_cast<std::size_t>(
            std::find(cf.labels.begin(), cf.labels.end(), own) - cf.labels.begin());
        if (own_level == 0) {
            table.warnings.push_back("'" + unit + "' already received the least restrictive intervention");
            continue;
        }
        for (std::size_t level = own_level; level-- > 0;) {
            const auto& label = cf.labels[level];
            const auto* entry = cf.find(unit, label);
            if (entry == nullptr) {
                table.issues.push_back({unit, label, std::string(to_string(ErrorCode::EmptyDonorGroup)),
                                        "no counterfactual to project"});
                continue;
            }
            try {
                ProjectionRecord r;
                r.unit_id = unit;
                r.current_label = own;
                r.label = label;
                r.fit = fit_exponential(entry->trajectory);
                Projection p = project_peak(r.fit, entry->trajectory, horizon_days);
                r.horizon_days = horizon_days;
                r.projected_days = std::move(p.days);
                r.projected = std::move(p.projected);
                r.fitted_peak = p.peak;
                Eigen::Index arg = 0;
                const double raw = entry->trajectory.maxCoeff(&arg);
                r.raw_peak = {static_cast<double>(arg), raw, false};
                table.rows.push_back(std::move(r));
            } catch (const Error& e) {
                table.issues.push_back({unit, label, std::string(to_string(e.code())), e.what()});
            }
        }
    }
    return table;
}

RunArtifact run_pipeline(const RunConfig& config, const RunInputs& inputs) {
    RunArtifact artifact;
    artifact.config = config_echo(config, inputs.deaths_csv, inputs.mobility_csv);
    auto& diag = artifact.diagnostics;

    DeathsParseResult deaths = parse_deaths_csv(inputs.deaths_csv);
    for (const auto& r : deaths.rejected) {
        diag.warnings.push_back("deaths line " + std::to_string(r.line_no) + " rejected: " + r.reason);
    }
    MobilityParseResult mobility = parse_mobility_csv(inputs.mobility_csv);
    for (const auto& r : mobility.rejected) {
        diag.warnings.push_back("mobility line " + std::to_string(r.line_no) + " rejected: " + r.reason);
    }

    AlignmentResult aligned = build_aligned_panel(deaths.panel, config.alignment);
    for (const auto& e : aligned.exclusions) {
        artifact.panel.exclusions.push_back(exclusion(e.unit_id, "alignment", e.reason, e.message));
    }

    std::vector<UnitScore> scores;
    std::map<std::string, MobilityScore> score_detail;
    for (std::size_t i = 0; i < aligned.panel.unit_ids.size(); ++i) {
        const auto& id = aligned.panel.unit_ids[i];
        auto it = mobility.series.find(id);
        if (it == mobility.series.end()) {
            artifact.panel.exclusions.push_back(
                exclusion(id, "mobility", ErrorCode::NoMobilityData, "no mobility series for this unit"));
            continue;
        }
        try {
            MobilityScore s = mobility_score(it->second, aligned.panel.day0_dates[i], config.mobility);
            scores.push_back({id, s.value});
            score_detail[id] = s;
            if (s.low_coverage) {
                diag.warnings.push_back("'" + id + "' mobility coverage " + fmt_real(s.coverage, 2) + " below 0.5");
            }
        } catch (const Error& e) {
            artifact.panel.exclusions.push_back(exclusion(id, "mobility", e.code(), e.what()));
        }
    }
    if (scores.empty()) throw Error(ErrorCode::NoMobilityData, "no aligned unit has mobility data in its lag window");

    const InterventionPartition partition = bucket_interventions(scores, config.buckets);
    std::vector<std::string> kept;
    for (const auto& s : scores) kept.push_back(s.unit_id);
    const AlignedPanel panel = aligned.panel.select(kept);

    artifact.panel.outcome_name = deaths.panel.outcome_name();
    artifact.panel.t0_index = panel.t0_index;
    artifact.panel.day_labels = panel.day_labels;
    for (Eigen::Index r = 0; r < panel.rows(); ++r) {
        AlignedUnitRecord u;
        u.unit_id = panel.unit_ids[static_cast<std::size_t>(r)];
        u.day0_date = format_date(panel.day0_dates[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < panel.matrix.cols(); ++c) u.values.push_back(panel.matrix(r, c));
        artifact.panel.units.push_back(std::move(u));
    }

    artifact.partition.labels = partition.labels;
    artifact.partition.edges = config.buckets.edges();
    artifact.partition.groups = partition.groups;
    for (const auto& s : scores) {
        const auto& detail = score_detail.at(s.unit_id);
        artifact.partition.units.push_back(
            {s.unit_id, partition.label_of(s.unit_id), s.score, detail.coverage, detail.low_coverage});
    }

    RunSiOptions options;
    options.svt = config.svt;
    options.threads = config.threads;
    const CounterfactualSet cf = run_si(panel, partition, options);

    for (const auto& e : cf.entries) {
        artifact.counterfactuals.push_back(
            {e.unit_id, e.label, std::vector<double>(e.trajectory.data(), e.trajectory.data() + e.trajectory.size())});
        ModelRecord m;
        m.unit_id = e.unit_id;
        m.label = e.label;
        m.donor_ids = e.model.donor_ids;
        m.weights.assign(e.model.weights.data(), e.model.weights.data() + e.model.weights.size());
        m.pre_fit_rmse = e.model.pre_fit_rmse;
        m.rank_pre = e.model.rank_pre;
        m.rank_post = e.model.rank_post;
        m.top_donors = top_donors(e.model, config.top_k);
        diag.models.push_back(std::move(m));
    }
    for (const auto& f : cf.failures) diag.failures.push_back(issue(f));
    diag.warnings.insert(diag.warnings.end(), cf.warnings.begin(), cf.warnings.end());

    ValidationReport validation = self_validation(cf);
    diag.validation = std::move(validation.rows);
    for (const auto& s : validation.skipped) diag.validation_skipped.push_back(issue(s));

    ProjectionTable projections = compute_projections(cf, config.horizon_days);
    diag.projections = std::move(projections.rows);
    diag.projection_issues = std::move(projections.issues);
    diag.warnings.insert(diag.warnings.end(), projections.warnings.begin(), projections.warnings.end());

    artifact.content_hash = compute_content_hash(artifact);
    return artifact;
}

RunArtifact run_pipeline(const RunConfig& config) { return run_pipeline(config, load_inputs(config)); }

ValidationTable validation_table(const RunArtifact& artifact, std::size_t top_k) {
    const CounterfactualSet cf = counterfactual_set_from(artifact);
    ValidationReport report = self_validation(cf);
    ValidationTable table;
    for (auto& m : report.rows) {
        ValidationRow row;
        if (const auto* e = cf.find(m.unit_id, m.label)) row.top_donors = top_donors(e->model, top_k);
        row.metrics = std::move(m);
        table.rows.push_back(std::move(row));
    }
    for (const auto& s : report.skipped) table.skipped.push_back(issue(s));
    return table;
}

std::string format_validation_table(const ValidationTable& table) {
    std::ostringstream out;
    out << "unit\tintervention\trmse\tmape\tr2\tdays\ttop_donors\n";
    for (const auto& row : table.rows) {
        const auto& m = row.metrics;
        out << m.unit_id << '\t' << m.label << '\t' << fmt_real(m.rmse) << '\t' << fmt_real(m.mape) << '\t'
            << fmt_real(m.r2) << '\t' << m.observed_days << '\t';
        for (std::size_t i = 0; i < row.top_donors.size(); ++i) {
            if (i > 0) out << ", ";
            out << row.top_donors[i].donor_id << ':' << fmt_real(row.top_donors[i].weight, 3);
        }
        out << '\n';
    }
    for (const auto& s : table.skipped) out << "# skipped " << s.unit_id << " (" << s.code << "): " << s.message << '\n';
    return out.str();
}

std::string format_projection_table(const ProjectionTable& table) {
    std::ostringstream out;
    out << "unit\tcurrent\tintervention\ta\tb\tr2_log\tpeak_day\tpeak_value\tpeak_source\traw_peak_day\traw_peak\n";
    for (const auto& r : table.rows) {
        out << r.unit_id << '\t' << r.current_label << '\t' << r.label << '\t' << fmt_real(r.fit.a) << '\t'
            << fmt_real(r.fit.b) << '\t' << fmt_real(r.fit.r2_log) << '\t' << fmt_real(r.fitted_peak.day, 0) << '\t'
            << fmt_real(r.fitted_peak.value) << '\t' << (r.fitted_peak.from_projection ? "projected" : "observed")
            << '\t' << fmt_real(r.raw_peak.day, 0) << '\t' << fmt_real(r.raw_peak.value) << '\n';
    }
    for (const auto& s : table.issues) out << "# " << s.unit_id << '/' << s.label << " (" << s.code << "): " << s.message << '\n';
    return out.str();
}

std::string run_summary(const RunArtifact& artifact) {
    std::ostringstream out;
    out << "run " << artifact.content_hash << '\n';
    out << "units analysed: " << artifact.panel.units.size() << ", excluded: " << artifact.panel.exclusions.size()
        << '\n';
    for (const auto& label : artifact.partition.labels) {
        auto it = artifact.partition.groups.find(label);
        out << "  " << label << ": " << (it == artifact.partition.groups.end() ? 0 : it->second.size()) << '\n';
    }
    out << "counterfactuals: " << artifact.counterfactuals.size()
        << ", failed pairs: " << artifact.diagnostics.failures.size() << '\n';
    std::vector<double> rmse;
    for (const auto& v : artifact.diagnostics.validation) rmse.push_back(v.rmse);
    if (!rmse.empty()) {
        std::sort(rmse.begin(), rmse.end());
        const auto n = rmse.size();
        const double median = n % 2 == 1 ? rmse[n / 2] : 0.5 * (rmse[n / 2 - 1] + rmse[n / 2]);
        out << "median validation rmse: " << fmt_real(median) << '\n';
    }
    return out.str();
}

}  // namespace synthint
