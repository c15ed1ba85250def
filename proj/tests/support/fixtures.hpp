// Builders that turn plain matrices into library inputs for tests.
#pragma once

#include <string>
#include <vector>

#include "oracles.hpp"
#include "synthint/engine.hpp"
#include "synthint/panel.hpp"

namespace fixture {

inline std::string unit_name(int i) { return "u" + std::to_string(100 + i); }
inline std::string label_name(int d) { return "d" + std::to_string(d); }

inline synthint::AlignedPanel aligned_from(const Eigen::MatrixXd& y, int t0) {
    synthint::AlignedPanel p;
    p.matrix = y;
    p.mask = synthint::BoolMatrix::Constant(y.rows(), y.cols(), true);
    p.t0_index = t0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) p.unit_ids.push_back(unit_name(static_cast<int>(i)));
    for (Eigen::Index c = 0; c < y.cols(); ++c) p.day_labels.push_back(static_cast<int>(c) - t0);
    p.day0_dates.assign(static_cast<std::size_t>(y.rows()), synthint::Date{});
    return p;
}

inline synthint::InterventionPartition partition_from(const std::vector<int>& assignment, int d) {
    synthint::InterventionPartition part;
    for (int k = 0; k < d; ++k) part.labels.push_back(label_name(k));
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const std::string id = unit_name(static_cast<int>(i));
        part.assignment[id] = label_name(assignment[i]);
        part.groups[label_name(assignment[i])].push_back(id);
    }
    return part;
}

// Largest relative error of any counterfactual against the factor-model ground truth.
inline double max_relative_error(const synthint::CounterfactualSet& cf, const oracle::FactorModel& fm) {
    double worst = 0.0;
    for (const auto& e : cf.entries) {
        const int n = std::stoi(e.unit_id.substr(1)) - 100;
        const int d = std::stoi(e.label.substr(1));
        const Eigen::VectorXd truth = fm.outcomes[static_cast<std::size_t>(d)].row(n).tail(fm.t - fm.t0).transpose();
        worst = std::max(worst, ((e.trajectory - truth).array().abs() / truth.array().abs()).maxCoeff());
    }
    return worst;
}

}  // namespace fixture
