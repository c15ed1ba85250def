#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "synthint/error.hpp"

namespace synthint {

/// y(t) = a * exp(b * t), fitted by least squares in log space.
struct ExpFit {
    double a = 1.0;
    double b = 0.0;
    double first_day = 0.0;
    double last_day = 0.0;
    double r2_log = 1.0;
    std::size_t points_used = 0;
    std::size_t points_excluded = 0;

    double operator()(double t) const;
};

/// `values[i]` is observed on day `first_day + i`. Nonpositive and non-finite
/// values are skipped. Throws InsufficientPositivePoints with fewer than two
/// usable points.
ExpFit fit_exponential(const Eigen::VectorXd& values, double first_day = 0.0);

inline constexpr int kDefaultHorizonDays = 30;

struct PeakPoint {
    double day = 0.0;
    double value = 0.0;
    bool from_projection = false;
};

struct Projection {
    int horizon_days = kDefaultHorizonDays;
    /// Days following the last observed day, parallel to `projected`.
    std::vector<double> days;
    std::vector<double> projected;
    PeakPoint peak;
};

/// Extends `fit` for `horizon_days` past the last observed day and takes the
/// peak over the observed values and the extension. `observed[i]` is day
/// `first_day + i`; non-finite observed values are ignored.
Projection project_peak(const ExpFit& fit, const Eigen::VectorXd& observed, int horizon_days,
                        double first_day = 0.0);

}  // namespace synthint
