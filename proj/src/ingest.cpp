#include "synthint/ingest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <unistd.h>

namespace synthint {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(ws) - first + 1);
}

std::optional<double> parse_number(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

/// Iterates over non-blank records, skipping a UTF-8 byte-order mark.
class LineReader {
public:
    explicit LineReader(std::string_view bytes) : bytes_(bytes) {
        if (bytes_.substr(0, 3) == "\xEF\xBB\xBF") bytes_.remove_prefix(3);
    }

    bool next(std::string_view& line, std::size_t& line_no) {
        while (pos_ < bytes_.size()) {
            const auto end = bytes_.find('\n', pos_);
            const auto stop = end == std::string_view::npos ? bytes_.size() : end;
            std::string_view raw = bytes_.substr(pos_, stop - pos_);
            pos_ = stop + 1;
            ++line_no_;
            if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
            if (trim(raw).empty()) continue;
            line = raw;
            line_no = line_no_;
            return true;
        }
        return false;
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

[[noreturn]] void unparseable(std::size_t line_no, const std::string& why) {
    throw Error(ErrorCode::UnparseableRow, "line " + std::to_string(line_no) + ": " + why);
}

void expect_header(LineReader& reader, std::string_view expected) {
    std::string_view line;
    std::size_t line_no = 0;
    if (!reader.next(line, line_no) || line != expected) {
        throw Error(ErrorCode::MalformedHeader, "expected header '" + std::string(expected) + "'");
    }
}

struct DatedValue {
    Date date;
    std::optional<double> value;
};

/// Builds a gap-free daily series from unordered dated values.
UnitSeries densify(const std::string& id, std::vector<DatedValue> points) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    const auto span = (points.back().date - points.front().date).count() + 1;
    std::vector<double> values(static_cast<std::size_t>(span), std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> observed(static_cast<std::size_t>(span), false);
    for (const auto& p : points) {
        const auto i = static_cast<std::size_t>((p.date - points.front().date).count());
        if (p.value) {
            values[i] = *p.value;
            observed[i] = true;
        }
    }
    return UnitSeries(id, std::move(values), points.front().date, std::move(observed));
}

}  // namespace

bool split_csv_line(std::string_view line, std::vector<std::string>& fields) {
    fields.clear();
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (quoted) return false;
    fields.push_back(std::move(current));
    return true;
}

DeathsParseResult parse_deaths_csv(std::string_view bytes) {
    LineReader reader(bytes);
    expect_header(reader, "country,date,new_deaths");

    DeathsParseResult result;
    std::vector<std::string> order;
    std::map<std::string, std::vector<DatedValue>> points;
    std::set<std::pair<std::string, Date>> seen;
    std::vector<std::string> fields;
    std::string_view line;
    std::size_t line_no = 0;
    while (reader.next(line, line_no)) {
        if (!split_csv_line(line, fields) || fields.size() != 3) unparseable(line_no, "expected 3 fields");
        const std::string country(trim(fields[0]));
        if (country.empty()) unparseable(line_no, "empty country");
        const auto date = parse_date(trim(fields[1]));
        if (!date) unparseable(line_no, "bad date '" + fields[1] + "'");
        std::optional<double> value;
        if (!trim(fields[2]).empty()) {
            value = parse_number(fields[2]);
            if (!value) unparseable(line_no, "bad number '" + fields[2] + "'");
            if (*value < 0.0) {
                result.rejected.push_back({line_no, "negative new_deaths"});
                continue;
            }
        }
        if (!seen.emplace(country, *date).second) {
            result.rejected.push_back({line_no, "duplicate (country, date)"});
            continue;
        }
        auto [it, inserted] = points.try_emplace(country);
        if (inserted) order.push_back(country);
        it->second.push_back({*date, value});
    }

    std::vector<UnitSeries> units;
    for (const auto& country : order) units.push_back(densify(country, std::move(points[country])));
    result.panel = Panel(std::move(units), "daily_deaths");
    return result;
}

MobilityParseResult parse_mobility_csv(std::string_view bytes) {
    LineReader reader(bytes);
    expect_header(reader, "country,date,category,pct_change");

    MobilityParseResult result;
    std::map<std::string, std::map<std::string, std::vector<DatedValue>>> points;
    std::set<std::tuple<std::string, Date, std::string>> seen;
    std::vector<std::string> fields;
    std::string_view line;
    std::size_t line_no = 0;
    while (reader.next(line, line_no)) {
        if (!split_csv_line(line, fields) || fields.size() != 4) unparseable(line_no, "expected 4 fields");
        const std::string country(trim(fields[0]));
        if (country.empty()) unparseable(line_no, "empty country");
        const auto date = parse_date(trim(fields[1]));
        if (!date) unparseable(line_no, "bad date '" + fields[1] + "'");
        std::optional<double> value;
        if (!trim(fields[3]).empty()) {
            value = parse_number(fields[3]);
            if (!value) unparseable(line_no, "bad number '" + fields[3] + "'");
        }
        const std::string category(trim(fields[2]));
        if (!is_mobility_category(category)) {
            result.rejected.push_back({line_no, "unknown category '" + category + "'"});
            continue;
        }
        if (!seen.emplace(country, *date, category).second) {
            result.rejected.push_back({line_no, "duplicate (country, date, category)"});
            continue;
        }
        auto [it, inserted] = points.try_emplace(country);
        if (inserted) result.countries.push_back(country);
        it->second[category].push_back({*date, value});
    }

    for (auto& [country, categories] : points) {
        auto& out = result.series[country];
        for (auto& [category, pts] : categories) out.emplace(category, densify(country, std::move(pts)));
    }
    return result;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::FileNotFound, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    static std::atomic<unsigned long> counter{0};
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid()) + "." +
           std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
           std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::FileNotFound, "cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::FileNotFound, "short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace synthint
