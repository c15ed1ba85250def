#include "synthint/projection.hpp"

#include <cmath>
#include <string>

#include "synthint/error.hpp"

namespace synthint {

double ExpFit::operator()(double t) const { return a * std::exp(b * t); }

ExpFit fit_exponential(const Eigen::VectorXd& values, double first_day) {
    std::vector<double> ts, logs;
    std::size_t excluded = 0;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (std::isfinite(values[i]) && values[i] > 0.0) {
            ts.push_back(first_day + static_cast<double>(i));
            logs.push_back(std::log(values[i]));
        } else {
            ++excluded;
        }
    }
    if (ts.size() < 2) {
        throw Error(ErrorCode::InsufficientPositivePoints,
                    std::to_string(ts.size()) + " positive values, need at least 2");
    }

    const auto n = static_cast<double>(ts.size());
    double t_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        t_mean += ts[i];
        y_mean += logs[i];
    }
    t_mean /= n;
    y_mean /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double dt = ts[i] - t_mean, dy = logs[i] - y_mean;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }

    ExpFit fit;
    fit.b = sxy / sxx;
    fit.a = std::exp(y_mean - fit.b * t_mean);
    fit.first_day = ts.front();
    fit.last_day = ts.back();
    fit.points_used = ts.size();
    fit.points_excluded = excluded;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = logs[i] - (std::log(fit.a) + fit.b * ts[i]);
        ss_res += r * r;
    }
    fit.r2_log = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

Projection project_peak(const ExpFit& fit, const Eigen::VectorXd& observed, int horizon_days, double first_day) {
    if (horizon_days < 1) throw Error(ErrorCode::InvalidArgument, "horizon_days must be >= 1");
    Projection p;
    p.horizon_days = horizon_days;
    bool have_peak = false;
    for (Eigen::Index i = 0; i < observed.size(); ++i) {
        if (!std::isfinite(observed[i])) continue;
        if (!have_peak || observed[i] > p.peak.value) {
            p.peak = {first_day + static_cast<double>(i), observed[i], false};
            have_peak = true;
        }
    }
    const double last_day = first_day + static_cast<double>(observed.size()) - 1.0;
    for (int k = 1; k <= horizon_days; ++k) {
        const double day = last_day + k;
        const double value = fit(day);
        p.days.push_back(day);
        p.projected.push_back(value);
        if (!have_peak || value > p.peak.value) {
            p.peak = {day, value, true};
            have_peak = true;
        }
    }
    return p;
}

}  // namespace synthint
