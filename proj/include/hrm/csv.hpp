#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hrm::csv {

struct Row {
    std::size_t line = 0;  // 1-based line number in the source
    std::vector<std::string> cells;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column index for `name`, or throws DataError("schema").
    std::size_t column(std::string_view name) const;
};

/// RFC 4180-style parsing: comma separated, optional double-quoted cells,
/// "" escapes a quote inside a quoted cell. Blank lines are skipped.
Table parse(std::string_view text);
Table read(const std::filesystem::path& path);

/// Quote a cell if it contains a comma, quote, or newline.
std::string escape(std::string_view cell);

/// Strict decimal parse of a whole cell. Throws std::invalid_argument on
/// anything but a finite number.
double to_double(std::string_view cell);

}  // namespace hrm::csv
