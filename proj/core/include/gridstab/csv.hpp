#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridstab {

/// Shortest round-trip decimal representation (std::to_chars), so that
/// identical doubles always produce identical bytes. inf/nan print as
/// "inf", "-inf", "nan".
std::string format_double(double value);

/// Parses a number written by format_double; throws SchemaError on junk.
double parse_double(std::string_view text);
unsigned long long parse_unsigned(std::string_view text);

/// Minimal comma-separated table without quoting (all fields are numeric
/// or identifiers).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a named column; throws SchemaError when absent.
    std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Writes `content` to `path` through a temporary file and rename, so that
/// readers never observe a half-written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace gridstab
