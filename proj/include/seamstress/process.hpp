#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace seamstress {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal
  std::string out;
  std::string err;
  bool timed_out = false;
  std::chrono::milliseconds duration{0};
};

struct ProcessOptions {
  std::filesystem::path cwd;
  std::map<std::string, std::string> env;  // added to / overriding the inherited environment
  std::optional<std::chrono::milliseconds> timeout;
};

/// Runs argv[0] (searched in PATH) and captures both streams. The child is
/// killed on timeout. Throws std::system_error when it cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

/// First match of `name` in PATH, then in `extra_dirs`.
std::optional<std::filesystem::path> find_executable(const std::string& name,
                                                     const std::vector<std::filesystem::path>& extra_dirs = {});

}  // namespace seamstress
