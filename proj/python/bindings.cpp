#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>

#include "synthint/artifact.hpp"
#include "synthint/engine.hpp"
#include "synthint/ingest.hpp"
#include "synthint/pipeline.hpp"
#include "synthint/projection.hpp"
#include "synthint/svt.hpp"

namespace py = pybind11;
using namespace synthint;

namespace {

py::object value_or_none(double v) { return std::isfinite(v) ? py::object(py::float_(v)) : py::object(py::none()); }

UnitSeries series_from(const std::string& id, const std::vector<std::optional<double>>& values,
                       const std::string& start) {
    auto date = parse_date(start);
    if (!date) throw Error(ErrorCode::InvalidArgument, "bad date '" + start + "'");
    std::vector<double> vals;
    std::vector<bool> mask;
    for (const auto& v : values) {
        vals.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
        mask.push_back(v.has_value());
    }
    return UnitSeries(id, std::move(vals), *date, std::move(mask));
}

py::dict series_dict(const UnitSeries& s) {
    py::list values;
    for (std::size_t i = 0; i < s.size(); ++i) values.append(s.observed[i] ? value_or_none(s.values[i]) : py::none());
    py::dict d;
    d["start"] = format_date(s.calendar_start);
    d["values"] = values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Synthetic interventions: counterfactual trajectories under every intervention";

    static py::exception<Error> error_type(m, "SynthIntError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string message = std::string(to_string(e.code())) + ": " + e.what();
            PyErr_SetString(error_type.ptr(), message.c_str());
        }
    });

    py::class_<SvtConfig>(m, "SvtConfig")
        .def_static("fixed", &SvtConfig::fixed, py::arg("rank"))
        .def_static("energy", &SvtConfig::energy, py::arg("fraction") = 0.90)
        .def_readwrite("min_rank", &SvtConfig::min_rank);

    py::class_<AlignmentSpec>(m, "AlignmentSpec")
        .def(py::init([](double threshold, int pre, int post, bool smooth) {
                 AlignmentSpec s{threshold, pre, post, smooth};
                 s.validate();
                 return s;
             }),
             py::arg("event_threshold") = 80.0, py::arg("pre_window_days") = 20, py::arg("post_window_days") = 15,
             py::arg("smooth") = false)
        .def_readonly("event_threshold", &AlignmentSpec::event_threshold)
        .def_readonly("pre_window_days", &AlignmentSpec::pre_window_days)
        .def_readonly("post_window_days", &AlignmentSpec::post_window_days);

    m.def(
        "align_to_event",
        [](const std::vector<std::optional<double>>& daily, const AlignmentSpec& spec, const std::string& start) {
            const AlignedRow row = align_to_event(series_from("unit", daily, start), spec);
            py::list values;
            for (std::size_t i = 0; i < row.values.size(); ++i) {
                values.append(row.observed[i] ? value_or_none(row.values[i]) : py::none());
            }
            py::dict d;
            d["day0_index"] = row.day0_index;
            d["day0_date"] = format_date(row.day0_date);
            d["values"] = values;
            return d;
        },
        py::arg("daily"), py::arg("spec"), py::arg("start") = "2020-01-01",
        "Window of daily values around the first day the cumulative sum reaches the threshold.");

    py::class_<BucketSpec>(m, "BucketSpec")
        .def(py::init<std::vector<double>, std::vector<std::string>>(), py::arg("edges"), py::arg("labels"))
        .def_static("memo3", &BucketSpec::memo3)
        .def_static("paper4", &BucketSpec::paper4)
        .def_property_readonly("edges", &BucketSpec::edges)
        .def_property_readonly("labels", &BucketSpec::labels)
        .def("label_for_score", &BucketSpec::label_for_score, py::arg("score"));

    m.def("select_rank", &select_rank, py::arg("singular_values"), py::arg("config"));
    m.def(
        "svt",
        [](const Eigen::MatrixXd& matrix, const SvtConfig& config) {
            DenoisedBlock b = svt(matrix, config);
            return py::make_tuple(b.matrix, b.rank_used, b.singular_values);
        },
        py::arg("matrix"), py::arg("config"), "Truncated-SVD denoising; returns (matrix, rank, singular_values).");
    m.def(
        "fit_weights",
        [](const Eigen::VectorXd& target_pre, const Eigen::MatrixXd& donor_pre) {
            DenoisedBlock block;
            block.matrix = donor_pre;
            WeightFit fit = fit_weights(target_pre, block);
            return py::make_tuple(fit.weights, fit.pre_fit_rmse);
        },
        py::arg("target_pre"), py::arg("donor_pre"),
        "Minimum-norm least-squares weights over already-denoised donor rows; returns (weights, rmse).");
    m.def(
        "predict_counterfactual",
        [](const Eigen::VectorXd& weights, const Eigen::MatrixXd& donor_post) {
            DenoisedBlock block;
            block.matrix = donor_post;
            return predict_counterfactual(weights, block);
        },
        py::arg("weights"), py::arg("donor_post"));

    m.def(
        "run_si",
        [](const Eigen::MatrixXd& matrix, int t0, const std::vector<std::string>& unit_ids,
           const std::vector<std::string>& assignment, const std::vector<std::string>& labels, const SvtConfig& config) {
            if (static_cast<Eigen::Index>(unit_ids.size()) != matrix.rows() || assignment.size() != unit_ids.size()) {
                throw Error(ErrorCode::DimensionMismatch, "unit_ids/assignment must match matrix rows");
            }
            AlignedPanel panel;
            panel.matrix = matrix;
            panel.mask = matrix.array().isFinite();
            panel.t0_index = t0;
            panel.unit_ids = unit_ids;
            for (Eigen::Index c = 0; c < matrix.cols(); ++c) panel.day_labels.push_back(static_cast<int>(c) - t0);
            panel.day0_dates.assign(unit_ids.size(), Date{});
            InterventionPartition partition;
            partition.labels = labels;
            for (std::size_t i = 0; i < unit_ids.size(); ++i) {
                partition.assignment[unit_ids[i]] = assignment[i];
                partition.groups[assignment[i]].push_back(unit_ids[i]);
            }
            RunSiOptions options;
            options.svt = config;
            const CounterfactualSet cf = run_si(panel, partition, options);
            py::dict out;
            for (const auto& e : cf.entries) out[py::make_tuple(e.unit_id, e.label)] = e.trajectory;
            py::list failures;
            for (const auto& f : cf.failures) {
                failures.append(py::make_tuple(f.unit_id, f.label, std::string(to_string(f.code))));
            }
            return py::make_tuple(out, failures);
        },
        py::arg("matrix"), py::arg("t0"), py::arg("unit_ids"), py::arg("assignment"), py::arg("labels"),
        py::arg("config") = SvtConfig{},
        "Counterfactual trajectories keyed by (unit, label), plus the list of failed pairs.");

    py::class_<ExpFit>(m, "ExpFit")
        .def_readonly("a", &ExpFit::a)
        .def_readonly("b", &ExpFit::b)
        .def_readonly("r2_log", &ExpFit::r2_log)
        .def_readonly("points_used", &ExpFit::points_used)
        .def_readonly("points_excluded", &ExpFit::points_excluded)
        .def("__call__", &ExpFit::operator(), py::arg("t"));
    m.def("fit_exponential", &fit_exponential, py::arg("values"), py::arg("first_day") = 0.0);
    m.def(
        "project_peak",
        [](const ExpFit& fit, const Eigen::VectorXd& observed, int horizon_days) {
            Projection p = project_peak(fit, observed, horizon_days);
            return py::make_tuple(p.peak.day, p.peak.value, p.peak.from_projection ? "projected" : "observed");
        },
        py::arg("fit"), py::arg("observed"), py::arg("horizon_days") = kDefaultHorizonDays,
        "Returns (peak_day, peak_value, source).");

    m.def(
        "parse_deaths_csv",
        [](const std::string& text) {
            DeathsParseResult r = parse_deaths_csv(text);
            py::dict out;
            for (const auto& u : r.panel.units()) out[py::str(u.unit_id)] = series_dict(u);
            return py::make_tuple(out, r.rejected.size());
        },
        py::arg("text"));
    m.def(
        "parse_mobility_csv",
        [](const std::string& text) {
            MobilityParseResult r = parse_mobility_csv(text);
            py::dict out;
            for (const auto& [country, cats] : r.series) {
                py::dict per;
                for (const auto& [cat, s] : cats) per[py::str(cat)] = series_dict(s);
                out[py::str(country)] = per;
            }
            return py::make_tuple(out, r.rejected.size());
        },
        py::arg("text"));

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path) {
            return write_run(run_pipeline(load_run_config(config_path)));
        },
        py::arg("config_path"), "Runs the full pipeline and returns the canonical artifact text.");
    m.def(
        "artifact_hash", [](const std::string& text) { return read_run(text).content_hash; }, py::arg("text"),
        "Verifies an artifact and returns its content hash.");
}
