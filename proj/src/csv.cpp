#include "hrm/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hrm/error.hpp"

namespace hrm::csv {

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw DataError("schema", "missing column '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Table parse(std::string_view text) {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    std::vector<Row> records;
    Row current;
    std::string cell;
    bool in_quotes = false;
    bool cell_quoted = false;
    std::size_t line = 1;
    current.line = 1;

    auto finish_cell = [&] {
        current.cells.push_back(cell_quoted ? cell : trim(cell));
        cell.clear();
        cell_quoted = false;
    };
    auto finish_row = [&] {
        finish_cell();
        const bool blank = current.cells.size() == 1 && current.cells[0].empty();
        if (!blank) records.push_back(std::move(current));
        current = Row{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                cell_quoted = true;
                break;
            case ',':
                finish_cell();
                break;
            case '\n':
                finish_row();
                ++line;
                current.line = line;
                break;
            case '\r':
                break;
            default:
                cell.push_back(c);
        }
    }
    if (in_quotes) throw DataError("malformed_csv", "unterminated quoted cell");
    if (!cell.empty() || !current.cells.empty()) finish_row();

    Table table;
    if (records.empty()) throw DataError("schema", "missing header row");
    table.header = std::move(records.front().cells);
    records.erase(records.begin());
    table.rows = std::move(records);
    return table;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing_file", "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string escape(std::string_view cell) {
    if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double to_double(std::string_view cell) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (begin != end && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (cell.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw std::invalid_argument("not a number: '" + std::string(cell) + "'");
    }
    return value;
}

}  // namespace hrm::csv
