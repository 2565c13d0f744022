#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace prethermal::io {

/// Rounds to the given number of significant digits (round-trips through "%.*g").
double round_significant(double value, int digits);

/// Shortest "%.17g"-style text that parses back to the same double.
std::string format_double(double value);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Writes the whole file; failures throw ErrorKind::io naming the path.
void write_text(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace prethermal::io
