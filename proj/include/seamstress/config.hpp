#pragma once

// Run settings from seamstress.toml, overridden by command-line flags.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace seamstress {

struct RunConfig {
  std::filesystem::path project_root;
  std::filesystem::path out_dir;
  std::string backend = "gpt-4o";  // profile name or replay:<dir>
  std::string replay_profile = "replay";  // window sizes for replay runs
  std::optional<int> cap;
  int floor = 30;
  int max_repair_attempts = 20;
  int max_format_retries = 20;
  int compile_timeout = 300;  // seconds
  std::vector<std::string> defines;
  std::optional<std::filesystem::path> rules;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> record;  // transcript dir for live runs
  std::vector<std::string> allowed_dependencies;
  std::string report_format = "text";
  std::string cargo;
  std::string crate_name;  // "" derives it from the project directory
  bool force = false;

  /// ConfigError when out_dir equals project_root, a limit is below 1, or
  /// report_format is unknown.
  void validate() const;
  /// "replay:<dir>" -> dir
  std::optional<std::filesystem::path> replay_dir() const;
};

/// Applies the keys of a seamstress.toml on top of `cfg`. Relative paths are
/// taken from the file's directory. Unknown keys and wrong types raise
/// ConfigError.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& file);
void apply_config_text(RunConfig& cfg, std::string_view text, const std::filesystem::path& base_dir);

}  // namespace seamstress
