#include "synthint/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <thread>

namespace synthint {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& source, const std::vector<Eigen::Index>& rows,
                            Eigen::Index first_col, Eigen::Index cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = source.block(rows[i], first_col, 1, cols);
    }
    return out;
}

struct PairTask {
    Eigen::Index target_row;
    std::size_t label_index;
};

struct PairResult {
    std::optional<CounterfactualEntry> entry;
    std::optional<PairIssue> issue;
};

}  // namespace

WeightFit fit_weights(const Eigen::VectorXd& target_pre, const DenoisedBlock& donor_pre) {
    const auto& donors = donor_pre.matrix;
    if (donors.rows() == 0) throw Error(ErrorCode::EmptyDonorGroup, "no donors to fit against");
    if (target_pre.size() == 0 || donors.cols() != target_pre.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "target has " + std::to_string(target_pre.size()) + " pre-period values, donors have " +
                        std::to_string(donors.cols()));
    }
    if (!target_pre.allFinite() || !donors.allFinite()) {
        throw Error(ErrorCode::NonFiniteInput, "weight fit input contains non-finite entries");
    }

    // The regression design is donors^T (T0 x N). With donors = U S V^T its
    // pseudo-inverse is U S^+ V^T.
    WeightFit fit;
    fit.weights = Eigen::VectorXd::Zero(donors.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(donors, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    if (sigma.size() > 0 && sigma[0] > 0.0) {
        const double cutoff = kPinvRelativeCutoff * sigma[0];
        const Eigen::VectorXd projected = svd.matrixV().transpose() * target_pre;
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma[i] <= cutoff) break;
            fit.weights += svd.matrixU().col(i) * (projected[i] / sigma[i]);
        }
    }
    const Eigen::VectorXd residual = target_pre - donors.transpose() * fit.weights;
    fit.pre_fit_rmse = std::sqrt(residual.squaredNorm() / static_cast<double>(residual.size()));
    return fit;
}

Eigen::VectorXd predict_counterfactual(const Eigen::VectorXd& weights, const DenoisedBlock& donor_post) {
    if (donor_post.matrix.rows() != weights.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(weights.size()) + " weights for " + std::to_string(donor_post.matrix.rows()) +
                        " donor rows");
    }
    return donor_post.matrix.transpose() * weights;
}

Eigen::VectorXd predict_counterfactual(const SiModel& model, const DenoisedBlock& donor_post) {
    return predict_counterfactual(model.weights, donor_post);
}

std::vector<DonorWeight> top_donors(const SiModel& model, std::size_t k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(model.weights.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(model.weights[static_cast<Eigen::Index>(a)]) >
               std::abs(model.weights[static_cast<Eigen::Index>(b)]);
    });
    order.resize(std::min(k, order.size()));
    std::vector<DonorWeight> out;
    for (auto i : order) {
        out.push_back({i < model.donor_ids.size() ? model.donor_ids[i] : std::to_string(i),
                       model.weights[static_cast<Eigen::Index>(i)]});
    }
    return out;
}

const CounterfactualEntry* CounterfactualSet::find(std::string_view unit_id, std::string_view label) const {
    for (const auto& e : entries) {
        if (e.unit_id == unit_id && e.label == label) return &e;
    }
    return nullptr;
}

std::optional<std::size_t> CounterfactualSet::unit_index(std::string_view unit_id) const {
    auto it = std::find(unit_ids.begin(), unit_ids.end(), unit_id);
    if (it == unit_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - unit_ids.begin());
}

CounterfactualSet run_si(const AlignedPanel& aligned, const InterventionPartition& partition,
                         const RunSiOptions& options) {
    options.svt.validate();
    partition.validate();
    const Eigen::Index t0 = aligned.t0_index;
    const Eigen::Index post = aligned.matrix.cols() - t0;
    if (t0 < 1 || post < 1) throw Error(ErrorCode::DimensionMismatch, "aligned panel needs pre and post columns");
    for (const auto& [unit, label] : partition.assignment) {
        if (!aligned.row_of(unit)) {
            throw Error(ErrorCode::InvalidArgument, "partitioned unit '" + unit + "' has no aligned row");
        }
    }

    CounterfactualSet cf;
    cf.labels = partition.labels;
    for (Eigen::Index c = 0; c < post; ++c) cf.post_days.push_back(static_cast<int>(c));

    std::vector<Eigen::Index> target_rows;
    for (Eigen::Index r = 0; r < aligned.rows(); ++r) {
        const auto& id = aligned.unit_ids[static_cast<std::size_t>(r)];
        if (partition.assignment.count(id) == 0) continue;
        target_rows.push_back(r);
        cf.unit_ids.push_back(id);
        cf.own_labels.push_back(partition.label_of(id));
    }
    cf.observed = gather_rows(aligned.matrix, target_rows, t0, post);
    cf.observed_mask.resize(cf.observed.rows(), post);
    for (std::size_t i = 0; i < target_rows.size(); ++i) {
        cf.observed_mask.row(static_cast<Eigen::Index>(i)) = aligned.mask.block(target_rows[i], t0, 1, post);
    }

    // Donors must be fully observed over the post-period to be denoised.
    std::vector<std::vector<Eigen::Index>> donor_rows(cf.labels.size());
    for (std::size_t l = 0; l < cf.labels.size(); ++l) {
        const auto* group = partition.group(cf.labels[l]);
        if (group == nullptr) {
            cf.warnings.push_back("intervention '" + cf.labels[l] + "' has no units");
            continue;
        }
        for (const auto& id : *group) {
            const Eigen::Index r = *aligned.row_of(id);
            if (aligned.mask.row(r).all()) {
                donor_rows[l].push_back(r);
            } else {
                cf.warnings.push_back("donor '" + id + "' dropped from '" + cf.labels[l] +
                                      "': incomplete post-period");
            }
        }
        if (!donor_rows[l].empty() && donor_rows[l].size() < options.donor_warning_threshold) {
            cf.warnings.push_back("intervention '" + cf.labels[l] + "' has only " +
                                  std::to_string(donor_rows[l].size()) + " donors");
        }
    }

    std::vector<PairTask> tasks;
    for (auto r : target_rows) {
        for (std::size_t l = 0; l < cf.labels.size(); ++l) {
            if (partition.group(cf.labels[l]) != nullptr) tasks.push_back({r, l});
        }
    }

    auto solve = [&](const PairTask& task) -> PairResult {
        const auto& target_id = aligned.unit_ids[static_cast<std::size_t>(task.target_row)];
        const auto& label = cf.labels[task.label_index];
        PairResult result;
        try {
            std::vector<Eigen::Index> rows;
            for (auto r : donor_rows[task.label_index]) {
                if (r != task.target_row) rows.push_back(r);
            }
            if (rows.empty()) throw Error(ErrorCode::EmptyDonorGroup, "no donors left after excluding the target");

            const DenoisedBlock pre = svt(gather_rows(aligned.matrix, rows, 0, t0), options.svt);
            const DenoisedBlock post_block = svt(gather_rows(aligned.matrix, rows, t0, post), options.svt);
            const Eigen::VectorXd target_pre = aligned.matrix.block(task.target_row, 0, 1, t0).transpose();
            WeightFit fit = fit_weights(target_pre, pre);

            CounterfactualEntry entry;
            entry.unit_id = target_id;
            entry.label = label;
            entry.model.target_id = target_id;
            entry.model.label = label;
            for (auto r : rows) entry.model.donor_ids.push_back(aligned.unit_ids[static_cast<std::size_t>(r)]);
            entry.model.weights = std::move(fit.weights);
            entry.model.pre_fit_rmse = fit.pre_fit_rmse;
            entry.model.rank_pre = pre.rank_used;
            entry.model.rank_post = post_block.rank_used;
            entry.trajectory = predict_counterfactual(entry.model, post_block);
            result.entry = std::move(entry);
        } catch (const Error& e) {
            result.issue = PairIssue{target_id, label, e.code(), e.what()};
        }
        return result;
    };

    std::vector<PairResult> results(tasks.size());
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(tasks.size())));
    if (threads <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = solve(tasks[i]);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < tasks.size(); i += threads) results[i] = solve(tasks[i]);
            });
        }
    }

    for (auto& r : results) {
        if (r.entry) cf.entries.push_back(std::move(*r.entry));
        if (r.issue) cf.failures.push_back(std::move(*r.issue));
    }
    if (cf.entries.empty()) {
        throw Error(ErrorCode::NoSuccessfulPairs, "no (unit, intervention) pair could be estimated");
    }
    return cf;
}

ValidationMetrics validation_metrics(const Eigen::VectorXd& predicted, const Eigen::VectorXd& observed,
                                     const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
    if (predicted.size() != observed.size() || mask.size() != observed.size()) {
        throw Error(ErrorCode::DimensionMismatch, "predicted/observed lengths differ");
    }
    ValidationMetrics m;
    double sq = 0.0, ape = 0.0, mean = 0.0;
    std::size_t n = 0, ape_n = 0;
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
        if (!mask[i]) continue;
        const double err = predicted[i] - observed[i];
        sq += err * err;
        mean += observed[i];
        if (observed[i] != 0.0) {
            ape += std::abs(err / observed[i]);
            ++ape_n;
        }
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::NoObservedPostData, "no observed post-period values");
    mean /= static_cast<double>(n);
    double total = 0.0;
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
        if (mask[i]) total += (observed[i] - mean) * (observed[i] - mean);
    }
    m.observed_days = n;
    m.rmse = std::sqrt(sq / static_cast<double>(n));
    m.mape = ape_n > 0 ? ape / static_cast<double>(ape_n) : kNaN;
    if (total > 0.0) {
        m.r2 = 1.0 - sq / total;
    } else {
        m.r2 = sq == 0.0 ? 1.0 : kNaN;
    }
    return m;
}

ValidationReport self_validation(const CounterfactualSet& cf) {
    ValidationReport report;
    for (std::size_t i = 0; i < cf.unit_ids.size(); ++i) {
        const auto& id = cf.unit_ids[i];
        const auto& own = cf.own_labels[i];
        const auto* entry = cf.find(id, own);
        if (entry == nullptr) {
            report.skipped.push_back({id, own, ErrorCode::EmptyDonorGroup, "no own-intervention prediction"});
            continue;
        }
        const auto r = static_cast<Eigen::Index>(i);
        try {
            ValidationMetrics m = validation_metrics(entry->trajectory, cf.observed.row(r).transpose(),
                                                     cf.observed_mask.row(r).transpose());
            m.unit_id = id;
            m.label = own;
            report.rows.push_back(std::move(m));
        } catch (const Error& e) {
            report.skipped.push_back({id, own, e.code(), e.what()});
        }
    }
    return report;
}

}  // namespace synthint
