#pragma once

// Minimal RFC-4180 reader/writer shared by the region registry, importers and dataset files.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ecol2::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or -1.
    [[nodiscard]] int column(std::string_view name) const;
};

/// Parses CSV text. Handles quoted fields, doubled quotes, CRLF and a UTF-8 BOM.
/// When has_header is false every record lands in rows.
[[nodiscard]] Table parse(std::string_view text, bool has_header = true);
[[nodiscard]] Table read_file(const std::filesystem::path& path, bool has_header = true);

/// Quotes a field when it contains a separator, quote or newline.
[[nodiscard]] std::string escape(std::string_view field);

/// Shortest decimal that round-trips the double exactly.
[[nodiscard]] std::string format_double(double v);
/// Fixed 17-significant-digit scientific form, used for dataset matrices.
[[nodiscard]] std::string format_double17(double v);

/// Strict double parse of a whole field (surrounding whitespace allowed). Throws IoError.
[[nodiscard]] double parse_double(std::string_view field);

/// Numeric matrix file (no header); rows must all share one length.
[[nodiscard]] std::vector<std::vector<double>> read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows);

}  // namespace ecol2::csv
