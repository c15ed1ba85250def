#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "synthint/panel.hpp"

namespace synthint {

/// A data row that parsed but was refused (negative count, unknown category,
/// duplicate key). Line numbers are 1-based and count the header.
struct RejectedRow {
    std::size_t line_no = 0;
    std::string reason;
};

struct DeathsParseResult {
    Panel panel;
    std::vector<RejectedRow> rejected;
};

struct MobilityParseResult {
    /// Countries in order of first appearance.
    std::vector<std::string> countries;
    std::map<std::string, MobilitySeries> series;
    std::vector<RejectedRow> rejected;
};

/// Splits one CSV record into fields, honouring double-quoted fields.
/// Returns false on an unterminated quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);

/// Header must be exactly `country,date,new_deaths`. Dates within a country
/// may have gaps; they become missing observations.
DeathsParseResult parse_deaths_csv(std::string_view bytes);

/// Header must be exactly `country,date,category,pct_change`. A blank
/// pct_change is a missing observation.
MobilityParseResult parse_mobility_csv(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace synthint
