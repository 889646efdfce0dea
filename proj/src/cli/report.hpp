#pragma once

// Row/column report rendered as an aligned table, CSV, or JSON.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ecol2::cli {

enum class Format { table, csv, json };

[[nodiscard]] Format parse_format(std::string_view s);

/// Missing values render as "-" in tables, empty in CSV, null in JSON.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

struct Report {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    void render(std::ostream& out, Format format) const;
};

/// Three significant digits in compact scientific form, e.g. 4.78e-4.
[[nodiscard]] std::string sci3(double v);

}  // namespace ecol2::cli
