#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "synthint/error.hpp"
#include "synthint/panel.hpp"
#include "synthint/svt.hpp"

namespace synthint {

/// Singular values below this fraction of the largest are dropped when
/// forming the pseudo-inverse.
inline constexpr double kPinvRelativeCutoff = 1e-10;

struct WeightFit {
    Eigen::VectorXd weights;
    double pre_fit_rmse = 0.0;
};

struct SiModel {
    std::string target_id;
    std::string label;
    std::vector<std::string> donor_ids;
    Eigen::VectorXd weights;
    double pre_fit_rmse = 0.0;
    int rank_pre = 0;
    int rank_post = 0;
};

/// Minimum-norm least-squares weights expressing `target_pre` as a linear
/// combination of the rows of the denoised donor block.
WeightFit fit_weights(const Eigen::VectorXd& target_pre, const DenoisedBlock& donor_pre);

Eigen::VectorXd predict_counterfactual(const Eigen::VectorXd& weights, const DenoisedBlock& donor_post);
Eigen::VectorXd predict_counterfactual(const SiModel& model, const DenoisedBlock& donor_post);

struct DonorWeight {
    std::string donor_id;
    double weight = 0.0;
};

/// Donors by descending |weight|; ties keep donor order.
std::vector<DonorWeight> top_donors(const SiModel& model, std::size_t k);

struct CounterfactualEntry {
    std::string unit_id;
    std::string label;
    Eigen::VectorXd trajectory;
    SiModel model;
};

struct PairIssue {
    std::string unit_id;
    std::string label;
    ErrorCode code;
    std::string message;
};

struct CounterfactualSet {
    std::vector<std::string> unit_ids;
    std::vector<std::string> labels;
    /// Intervention each unit actually received, parallel to `unit_ids`.
    std::vector<std::string> own_labels;
    /// Post-period day labels (0 .. T - T0 - 1).
    std::vector<int> post_days;
    /// Observed post-period rows, parallel to `unit_ids`; missing cells are NaN.
    Eigen::MatrixXd observed;
    BoolMatrix observed_mask;
    /// Sorted by (unit order, label order).
    std::vector<CounterfactualEntry> entries;
    std::vector<PairIssue> failures;
    std::vector<std::string> warnings;

    const CounterfactualEntry* find(std::string_view unit_id, std::string_view label) const;
    std::optional<std::size_t> unit_index(std::string_view unit_id) const;
};

struct RunSiOptions {
    SvtConfig svt;
    /// Groups with fewer donors than this produce a warning.
    std::size_t donor_warning_threshold = 5;
    unsigned threads = 1;
};

/// Predicts every unit's post-period trajectory under every intervention with
/// a nonempty donor group. Per-pair failures are collected in `failures`; the
/// call throws only if no pair succeeds.
CounterfactualSet run_si(const AlignedPanel& aligned, const InterventionPartition& partition,
                         const RunSiOptions& options = {});

struct ValidationMetrics {
    std::string unit_id;
    std::string label;
    double rmse = 0.0;
    double mape = 0.0;
    double r2 = 0.0;
    std::size_t observed_days = 0;
};

/// Error metrics over observed cells only. MAPE skips zero observations and
/// R^2 is NaN when the observed values are constant and the fit is not exact.
ValidationMetrics validation_metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& mask);

struct ValidationReport {
    std::vector<ValidationMetrics> rows;
    std::vector<PairIssue> skipped;
};

ValidationReport self_validation(const CounterfactualSet& cf);

}  // namespace synthint
