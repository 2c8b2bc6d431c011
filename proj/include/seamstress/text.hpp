#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace seamstress {

namespace fs = std::filesystem;

/// Splits text into lines without their terminators. A trailing newline does
/// not produce an extra empty line; "" yields no lines.
std::vector<std::string> split_lines(std::string_view text);

/// Inverse of split_lines for newline-terminated text: every line gets '\n'.
std::string join_lines(const std::vector<std::string>& lines);

/// Number of lines split_lines would return.
std::size_t count_lines(std::string_view text);

std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

/// Replaces invalid UTF-8 sequences with U+FFFD. Returns true if anything was
/// replaced.
bool sanitize_utf8(std::string& text);

std::string read_file(const fs::path& path);

/// Reads a C source file as UTF-8; invalid bytes are replaced and a warning
/// is appended.
std::string read_source_file(const fs::path& path, std::vector<std::string>& warnings);

/// Write-temp-then-rename. Creates parent directories.
void write_file_atomic(const fs::path& path, std::string_view content);

std::string fnv1a64_hex(std::string_view data);
std::string sha256_hex(std::string_view data);

/// Lowercase with '_' inserted at lower/digit -> upper boundaries:
/// "insertNode" -> "insert_node", "MAX" -> "max", "HTTPServer" -> "httpserver".
std::string to_snake_case(std::string_view name);

/// Path of `p` relative to `base` using '/' separators.
std::string relative_string(const fs::path& p, const fs::path& base);

}  // namespace seamstress
