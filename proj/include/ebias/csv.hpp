#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ebias::csv {

/// RFC-4180-ish field quoting: quotes applied when the value contains a
/// comma, quote, or newline.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

/// Splits one CSV record (no embedded newlines split across calls; the
/// reader below handles multi-line quoted fields).
std::vector<std::string> split_row(std::string_view line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, -1 when absent.
    int column(std::string_view name) const;
};

Table read_file(const std::string& path);
void write_file(const std::string& path, const Table& table);

} // namespace ebias::csv
