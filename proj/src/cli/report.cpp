#include "report.hpp"

#include "ecol2/csv.hpp"
#include "ecol2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace ecol2::cli {

Format parse_format(std::string_view s) {
    if (s == "table") return Format::table;
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ParameterError("format must be table, csv or json");
}

std::string sci3(double v) {
    if (!std::isfinite(v)) {
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
    if (v == 0.0) {
        return "0";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    // %e always writes a signed, zero-padded exponent; strip the padding.
    std::string s(buf);
    const auto e = s.find('e');
    std::string mantissa = s.substr(0, e);
    const char sign = s[e + 1];
    std::string digits = s.substr(e + 2);
    digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
    return mantissa + "e" + (sign == '-' ? "-" : "+") + digits;
}

void Report::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw Error("report row has " + std::to_string(row.size()) + " cells for " +
                    std::to_string(columns.size()) + " columns");
    }
    rows.push_back(std::move(row));
}

namespace {

std::string table_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "-";
            } else if constexpr (std::is_same_v<T, double>) {
                return sci3(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "yes" : "no";
            } else {
                return v;
            }
        },
        c);
}

std::string csv_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                return csv::format_double(v);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else {
                return csv::escape(v);
            }
        },
        c);
}

nlohmann::ordered_json json_value(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
                return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
            } else {
                return v;
            }
        },
        c);
}

}  // namespace

void Report::render(std::ostream& out, Format format) const {
    switch (format) {
        case Format::table: {
            std::vector<std::vector<std::string>> text;
            std::vector<std::size_t> width(columns.size());
            for (std::size_t i = 0; i < columns.size(); ++i) {
                width[i] = columns[i].size();
            }
            for (const auto& row : rows) {
                auto& t = text.emplace_back();
                for (std::size_t i = 0; i < row.size(); ++i) {
                    t.push_back(table_text(row[i]));
                    width[i] = std::max(width[i], t.back().size());
                }
            }
            auto line = [&](const std::vector<std::string>& cells) {
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    out << (i ? "  " : "") << cells[i];
                    if (i + 1 < cells.size()) {
                        out << std::string(width[i] - cells[i].size(), ' ');
                    }
                }
                out << '\n';
            };
            line(columns);
            for (const auto& t : text) {
                line(t);
            }
            break;
        }
        case Format::csv: {
            for (std::size_t i = 0; i < columns.size(); ++i) {
                out << (i ? "," : "") << csv::escape(columns[i]);
            }
            out << '\n';
            for (const auto& row : rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    out << (i ? "," : "") << csv_text(row[i]);
                }
                out << '\n';
            }
            break;
        }
        case Format::json: {
            nlohmann::ordered_json doc = nlohmann::ordered_json::array();
            for (const auto& row : rows) {
                nlohmann::ordered_json obj = nlohmann::ordered_json::object();
                for (std::size_t i = 0; i < row.size(); ++i) {
                    obj[columns[i]] = json_value(row[i]);
                }
                doc.push_back(std::move(obj));
            }
            out << doc.dump(2) << '\n';
            break;
        }
    }
}

}  // namespace ecol2::cli
