#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synthint/error.hpp"

namespace synthint {

using Date = std::chrono::sys_days;

/// Parses a calendar day in ISO-8601 `YYYY-MM-DD` form.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

/// One unit's observations. `observed[i] == false` marks a missing value;
/// the corresponding entry in `values` is ignored.
struct UnitSeries {
    std::string unit_id;
    std::vector<double> values;
    Date calendar_start{};
    std::vector<bool> observed;

    UnitSeries() = default;
    UnitSeries(std::string id, std::vector<double> vals, Date start);
    UnitSeries(std::string id, std::vector<double> vals, Date start, std::vector<bool> mask);

    std::size_t size() const noexcept { return values.size(); }
    Date date_at(std::size_t index) const { return calendar_start + std::chrono::days{static_cast<int>(index)}; }
};

class Panel {
public:
    Panel() = default;
    Panel(std::vector<UnitSeries> units, std::string outcome_name);

    const std::vector<UnitSeries>& units() const noexcept { return units_; }
    const std::string& outcome_name() const noexcept { return outcome_name_; }
    bool empty() const noexcept { return units_.empty(); }
    const UnitSeries* find(std::string_view unit_id) const;

private:
    std::vector<UnitSeries> units_;
    std::string outcome_name_ = "daily_deaths";
};

struct AlignmentSpec {
    double event_threshold = 80.0;
    int pre_window_days = 20;
    int post_window_days = 15;
    /// Centered 3-day moving average applied to the daily series before alignment.
    bool smooth = false;

    void validate() const;
    int total_days() const noexcept { return pre_window_days + post_window_days; }
};

/// A single unit's window around its event day. Missing cells hold NaN.
struct AlignedRow {
    std::vector<double> values;
    std::vector<bool> observed;
    std::size_t day0_index = 0;
    Date day0_date{};
};

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct AlignedPanel {
    Eigen::MatrixXd matrix;
    BoolMatrix mask;
    int t0_index = 0;
    std::vector<std::string> unit_ids;
    std::vector<int> day_labels;
    std::vector<Date> day0_dates;

    Eigen::Index rows() const noexcept { return matrix.rows(); }
    int post_days() const noexcept { return static_cast<int>(matrix.cols()) - t0_index; }
    std::optional<Eigen::Index> row_of(std::string_view unit_id) const;
    /// Keeps only the listed units, in the order given.
    AlignedPanel select(const std::vector<std::string>& ids) const;
};

struct Exclusion {
    std::string unit_id;
    ErrorCode reason;
    std::string message;
};

struct AlignmentResult {
    AlignedPanel panel;
    std::vector<Exclusion> exclusions;
};

UnitSeries smooth_centered3(const UnitSeries& series);

/// Day 0 is the first index whose running cumulative sum reaches the
/// threshold. Missing days contribute nothing to the sum.
AlignedRow align_to_event(const UnitSeries& series, const AlignmentSpec& spec);

AlignmentResult build_aligned_panel(const Panel& panel, const AlignmentSpec& spec);

inline constexpr std::string_view kMobilityCategories[] = {
    "retail_and_recreation", "grocery_and_pharmacy", "parks",
    "transit_stations",      "workplaces",           "residential",
};

bool is_mobility_category(std::string_view name);

/// Per-category percent-change series for one unit, keyed by category name.
using MobilitySeries = std::map<std::string, UnitSeries>;

struct MobilityScoreSpec {
    std::vector<std::string> categories{"retail_and_recreation", "transit_stations"};
    int lag_first = -20;
    int lag_last = -1;

    void validate() const;
};

struct MobilityScore {
    double value = 0.0;
    double coverage = 0.0;
    std::size_t observed_cells = 0;
    bool low_coverage = false;
};

/// Mean of percent-change values over the selected categories and the lag
/// window, scaled to a fraction. Negative means reduced mobility.
MobilityScore mobility_score(const MobilitySeries& mobility, Date day0, const MobilityScoreSpec& spec);

class BucketSpec {
public:
    BucketSpec(std::vector<double> edges, std::vector<std::string> labels);

    /// 3 levels split at 10% and 40% reduction.
    static BucketSpec memo3();
    /// 4 levels split at 5%, 30% and 50% reduction.
    static BucketSpec paper4();
    static std::optional<BucketSpec> preset(std::string_view name);

    const std::vector<double>& edges() const noexcept { return edges_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    /// Label for a mobility score; increases in mobility count as zero reduction.
    const std::string& label_for_score(double score) const;
    std::optional<std::size_t> level_of(std::string_view label) const;

private:
    std::vector<double> edges_;
    std::vector<std::string> labels_;
};

struct UnitScore {
    std::string unit_id;
    double score = 0.0;
};

struct InterventionPartition {
    /// Every label of the bucket spec, least to most restrictive.
    std::vector<std::string> labels;
    std::map<std::string, std::string> assignment;
    /// Only labels with at least one unit appear here.
    std::map<std::string, std::vector<std::string>> groups;

    const std::vector<std::string>* group(std::string_view label) const;
    const std::string& label_of(std::string_view unit_id) const;
    std::size_t level_of(std::string_view label) const;
    void validate() const;
};

InterventionPartition bucket_interventions(const std::vector<UnitScore>& scores, const BucketSpec& spec);

}  // namespace synthint
