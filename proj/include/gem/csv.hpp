#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gem::csv {

using Row = std::vector<std::string>;

/// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
/// A leading UTF-8 BOM is skipped. Throws DataError when a row's field count
/// differs from the first row's, naming the file and the 1-based row.
std::vector<Row> read(const std::filesystem::path& file);
std::vector<Row> parse(std::string_view text, std::string_view origin);

/// Quotes a field when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

}  // namespace gem::csv
