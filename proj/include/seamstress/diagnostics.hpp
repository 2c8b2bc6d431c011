#pragma once

// cargo invocation, diagnostic parsing and the error category table.

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seamstress/workspace.hpp"

namespace seamstress {

enum class ErrorCategory {
  syntax,
  generics,
  lifetime,
  modules,
  constants,
  attributes,
  type,
  traits,
  ownership,
  name_resolution,
};

inline constexpr std::array<ErrorCategory, 10> kErrorCategories = {
    ErrorCategory::syntax,     ErrorCategory::generics, ErrorCategory::lifetime,
    ErrorCategory::modules,    ErrorCategory::constants, ErrorCategory::attributes,
    ErrorCategory::type,       ErrorCategory::traits,   ErrorCategory::ownership,
    ErrorCategory::name_resolution};

/// Display name: "Syntax", ..., "Name Resolution".
std::string_view to_string(ErrorCategory c);
std::optional<ErrorCategory> parse_error_category(std::string_view s);

struct Classification {
  ErrorCategory category = ErrorCategory::type;
  bool from_table = false;  // false: fallback rule, worth adding to the table
};

/// Code table first (e.g. "E0432"); codeless messages by wording; anything
/// else Syntax when it reads like a parse error, Type otherwise.
Classification classify_error(std::string_view code, std::string_view message);

struct Diagnostic {
  std::string level;  // "error", "warning", ...
  std::string code;   // "" when rustc gives none
  std::string message;
  std::string file;   // workspace-relative, "" when unknown
  int line = 0;
  ErrorCategory category = ErrorCategory::type;
  std::string rendered;

  bool is_error() const { return level == "error"; }
};

struct CompileReport {
  bool success = false;
  std::string raw_log;  // rendered diagnostics followed by cargo's own stderr
  std::vector<Diagnostic> diagnostics;
  std::chrono::milliseconds duration{0};
  std::vector<std::string> unmapped_codes;

  std::vector<const Diagnostic*> errors() const;
  /// Rendered error diagnostics only, or the raw log when there are none.
  std::string error_log() const;
  /// Workspace files named by error diagnostics, in first-seen order.
  std::vector<std::string> error_files() const;
};

/// Parses `cargo --message-format=json` stdout. `stderr_text` is appended to
/// the raw log; an error there without any JSON error (manifest problems)
/// becomes a Modules diagnostic on Cargo.toml.
CompileReport parse_cargo_output(std::string_view json_lines, std::string_view stderr_text, int exit_code);

std::map<ErrorCategory, int> category_histogram(const std::vector<Diagnostic>& diagnostics);

struct CompileOptions {
  std::optional<std::filesystem::path> cargo;  // default: PATH, then $CARGO_HOME/bin
  std::chrono::seconds timeout{300};
  std::optional<std::filesystem::path> target_dir;  // default <root>/../target
  bool full_build = false;                          // cargo build instead of cargo check
};

/// ToolchainMissing when cargo cannot be found, CompileTimeout on timeout.
CompileReport compile_workspace(const Workspace& ws, const CompileOptions& options = {});

std::filesystem::path locate_cargo(const std::optional<std::filesystem::path>& configured);

}  // namespace seamstress
