#include "synthint/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace synthint {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool parse_uint(std::string_view text, unsigned& out) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    unsigned y = 0, m = 0, d = 0;
    if (!parse_uint(text.substr(0, 4), y) || !parse_uint(text.substr(5, 2), m) ||
        !parse_uint(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

UnitSeries::UnitSeries(std::string id, std::vector<double> vals, Date start)
    : UnitSeries(std::move(id), vals, start, std::vector<bool>(vals.size(), true)) {}

UnitSeries::UnitSeries(std::string id, std::vector<double> vals, Date start, std::vector<bool> mask)
    : unit_id(std::move(id)), values(std::move(vals)), calendar_start(start), observed(std::move(mask)) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "series '" + unit_id + "' is empty");
    if (values.size() != observed.size()) {
        throw Error(ErrorCode::DimensionMismatch, "series '" + unit_id + "' values/mask length differ");
    }
}

Panel::Panel(std::vector<UnitSeries> units, std::string outcome_name)
    : units_(std::move(units)), outcome_name_(std::move(outcome_name)) {
    std::set<std::string_view> seen;
    for (const auto& u : units_) {
        if (u.values.empty() || u.values.size() != u.observed.size()) {
            throw Error(ErrorCode::InvalidArgument, "malformed series '" + u.unit_id + "'");
        }
        if (!seen.insert(u.unit_id).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate unit id '" + u.unit_id + "'");
        }
    }
}

const UnitSeries* Panel::find(std::string_view unit_id) const {
    for (const auto& u : units_) {
        if (u.unit_id == unit_id) return &u;
    }
    return nullptr;
}

void AlignmentSpec::validate() const {
    if (!(event_threshold >= 0.0) || !std::isfinite(event_threshold)) {
        throw Error(ErrorCode::InvalidArgument, "event_threshold must be a nonnegative finite number");
    }
    if (pre_window_days < 1) throw Error(ErrorCode::InvalidArgument, "pre_window_days must be >= 1");
    if (post_window_days < 1) throw Error(ErrorCode::InvalidArgument, "post_window_days must be >= 1");
}

std::optional<Eigen::Index> AlignedPanel::row_of(std::string_view unit_id) const {
    auto it = std::find(unit_ids.begin(), unit_ids.end(), unit_id);
    if (it == unit_ids.end()) return std::nullopt;
    return static_cast<Eigen::Index>(it - unit_ids.begin());
}

AlignedPanel AlignedPanel::select(const std::vector<std::string>& ids) const {
    AlignedPanel out;
    out.t0_index = t0_index;
    out.day_labels = day_labels;
    out.matrix.resize(static_cast<Eigen::Index>(ids.size()), matrix.cols());
    out.mask.resize(static_cast<Eigen::Index>(ids.size()), matrix.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto row = row_of(ids[i]);
        if (!row) throw Error(ErrorCode::InvalidArgument, "unit '" + ids[i] + "' not in aligned panel");
        const auto r = static_cast<Eigen::Index>(i);
        out.matrix.row(r) = matrix.row(*row);
        out.mask.row(r) = mask.row(*row);
        out.unit_ids.push_back(ids[i]);
        out.day0_dates.push_back(day0_dates[static_cast<std::size_t>(*row)]);
    }
    return out;
}

UnitSeries smooth_centered3(const UnitSeries& series) {
    UnitSeries out = series;
    const std::size_t n = series.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!series.observed[i]) continue;
        double sum = 0.0;
        int count = 0;
        for (std::size_t j = (i == 0 ? 0 : i - 1); j <= std::min(n - 1, i + 1); ++j) {
            if (series.observed[j]) {
                sum += series.values[j];
                ++count;
            }
        }
        out.values[i] = sum / count;
    }
    return out;
}

AlignedRow align_to_event(const UnitSeries& series, const AlignmentSpec& spec) {
    spec.validate();
    std::optional<std::size_t> day0;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series.observed[i]) cumulative += series.values[i];
        if (cumulative >= spec.event_threshold) {
            day0 = i;
            break;
        }
    }
    if (!day0) {
        throw Error(ErrorCode::NeverReachedThreshold,
                    "cumulative total " + std::to_string(cumulative) + " below threshold");
    }
    const auto pre = static_cast<std::size_t>(spec.pre_window_days);
    if (*day0 < pre) {
        throw Error(ErrorCode::InsufficientPreHistory,
                    std::to_string(*day0) + " observations precede Day 0, need " + std::to_string(pre));
    }

    AlignedRow row;
    row.day0_index = *day0;
    row.day0_date = series.date_at(*day0);
    const std::size_t start = *day0 - pre;
    const auto total = static_cast<std::size_t>(spec.total_days());
    row.values.assign(total, kNaN);
    row.observed.assign(total, false);
    for (std::size_t k = 0; k < total; ++k) {
        const std::size_t src = start + k;
        if (src < series.size() && series.observed[src]) {
            row.values[k] = series.values[src];
            row.observed[k] = true;
        }
    }
    for (std::size_t k = 0; k < pre; ++k) {
        if (!row.observed[k]) {
            throw Error(ErrorCode::MissingPreData,
                        "missing observation on " + format_date(series.date_at(start + k)) + " in pre-period");
        }
    }
    return row;
}

AlignmentResult build_aligned_panel(const Panel& panel, const AlignmentSpec& spec) {
    spec.validate();
    AlignmentResult result;
    std::vector<AlignedRow> rows;
    std::vector<std::string> ids;
    for (const auto& unit : panel.units()) {
        try {
            rows.push_back(align_to_event(spec.smooth ? smooth_centered3(unit) : unit, spec));
            ids.push_back(unit.unit_id);
        } catch (const Error& e) {
            result.exclusions.push_back({unit.unit_id, e.code(), e.what()});
        }
    }
    if (rows.empty()) {
        throw Error(ErrorCode::EmptyPanelAfterAlignment, "no unit survived event alignment");
    }

    auto& out = result.panel;
    const auto cols = static_cast<Eigen::Index>(spec.total_days());
    out.matrix.resize(static_cast<Eigen::Index>(rows.size()), cols);
    out.mask.resize(static_cast<Eigen::Index>(rows.size()), cols);
    out.t0_index = spec.pre_window_days;
    for (int d = -spec.pre_window_days; d < spec.post_window_days; ++d) out.day_labels.push_back(d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (Eigen::Index c = 0; c < cols; ++c) {
            out.matrix(r, c) = rows[i].values[static_cast<std::size_t>(c)];
            out.mask(r, c) = rows[i].observed[static_cast<std::size_t>(c)];
        }
        out.day0_dates.push_back(rows[i].day0_date);
    }
    out.unit_ids = std::move(ids);
    return result;
}

bool is_mobility_category(std::string_view name) {
    return std::find(std::begin(kMobilityCategories), std::end(kMobilityCategories), name) !=
           std::end(kMobilityCategories);
}

void MobilityScoreSpec::validate() const {
    if (categories.empty()) throw Error(ErrorCode::InvalidArgument, "mobility categories must be nonempty");
    for (const auto& c : categories) {
        if (!is_mobility_category(c)) throw Error(ErrorCode::InvalidArgument, "unknown mobility category '" + c + "'");
    }
    if (lag_last >= 0) throw Error(ErrorCode::InvalidArgument, "lag window must end before Day 0");
    if (lag_first > lag_last) throw Error(ErrorCode::InvalidArgument, "lag window is empty");
}

MobilityScore mobility_score(const MobilitySeries& mobility, Date day0, const MobilityScoreSpec& spec) {
    spec.validate();
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& category : spec.categories) {
        auto it = mobility.find(category);
        if (it == mobility.end()) continue;
        const UnitSeries& s = it->second;
        for (int lag = spec.lag_first; lag <= spec.lag_last; ++lag) {
            const auto offset = (day0 + std::chrono::days{lag} - s.calendar_start).count();
            if (offset < 0 || static_cast<std::size_t>(offset) >= s.size()) continue;
            const auto idx = static_cast<std::size_t>(offset);
            if (!s.observed[idx]) continue;
            sum += s.values[idx];
            ++count;
        }
    }
    if (count == 0) throw Error(ErrorCode::NoMobilityData, "no mobility observations in the lag window");
    MobilityScore score;
    score.value = sum / static_cast<double>(count) / 100.0;
    score.observed_cells = count;
    const auto cells = spec.categories.size() * static_cast<std::size_t>(spec.lag_last - spec.lag_first + 1);
    score.coverage = static_cast<double>(count) / static_cast<double>(cells);
    score.low_coverage = score.coverage < 0.5;
    return score;
}

BucketSpec::BucketSpec(std::vector<double> edges, std::vector<std::string> labels)
    : edges_(std::move(edges)), labels_(std::move(labels)) {
    if (labels_.size() != edges_.size() + 1) {
        throw Error(ErrorCode::InvalidArgument, "bucket spec needs exactly one more label than edges");
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (!(edges_[i] > 0.0 && edges_[i] < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "bucket edges must lie in (0, 1)");
        }
        if (i > 0 && !(edges_[i] > edges_[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "bucket edges must be strictly increasing");
        }
    }
    std::set<std::string_view> seen;
    for (const auto& l : labels_) {
        if (l.empty() || !seen.insert(l).second) {
            throw Error(ErrorCode::InvalidArgument, "bucket labels must be nonempty and distinct");
        }
    }
}

BucketSpec BucketSpec::memo3() { return BucketSpec({0.10, 0.40}, {"low", "moderate", "severe"}); }

BucketSpec BucketSpec::paper4() {
    return BucketSpec({0.05, 0.30, 0.50}, {"none", "moderate", "strict", "very_strict"});
}

std::optional<BucketSpec> BucketSpec::preset(std::string_view name) {
    if (name == "memo3") return memo3();
    if (name == "paper4") return paper4();
    return std::nullopt;
}

const std::string& BucketSpec::label_for_score(double score) const {
    const double reduction = std::max(0.0, -score);
    // First edge strictly above the reduction; equal values fall into the upper bucket.
    auto it = std::upper_bound(edges_.begin(), edges_.end(), reduction);
    return labels_[static_cast<std::size_t>(it - edges_.begin())];
}

std::optional<std::size_t> BucketSpec::level_of(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

const std::vector<std::string>* InterventionPartition::group(std::string_view label) const {
    auto it = groups.find(std::string(label));
    return it == groups.end() ? nullptr : &it->second;
}

const std::string& InterventionPartition::label_of(std::string_view unit_id) const {
    auto it = assignment.find(std::string(unit_id));
    if (it == assignment.end()) {
        throw Error(ErrorCode::InvalidArgument, "unit '" + std::string(unit_id) + "' has no intervention");
    }
    return it->second;
}

std::size_t InterventionPartition::level_of(std::string_view label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw Error(ErrorCode::InvalidArgument, "unknown label '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

void InterventionPartition::validate() const {
    std::size_t members = 0;
    for (const auto& [label, ids] : groups) {
        level_of(label);
        if (ids.empty()) throw Error(ErrorCode::InvalidArgument, "group '" + label + "' is empty");
        for (const auto& id : ids) {
            auto it = assignment.find(id);
            if (it == assignment.end() || it->second != label) {
                throw Error(ErrorCode::InvalidArgument, "unit '" + id + "' inconsistent with assignment");
            }
        }
        members += ids.size();
    }
    if (members != assignment.size()) {
        throw Error(ErrorCode::InvalidArgument, "groups do not cover the assignment exactly once");
    }
}

InterventionPartition bucket_interventions(const std::vector<UnitScore>& scores, const BucketSpec& spec) {
    InterventionPartition p;
    p.labels = spec.labels();
    for (const auto& s : scores) {
        if (!std::isfinite(s.score)) {
            throw Error(ErrorCode::NonFiniteInput, "mobility score for '" + s.unit_id + "' is not finite");
        }
        const auto& label = spec.label_for_score(s.score);
        if (!p.assignment.emplace(s.unit_id, label).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate unit id '" + s.unit_id + "'");
        }
        p.groups[label].push_back(s.unit_id);
    }
    return p;
}

}  // namespace synthint
