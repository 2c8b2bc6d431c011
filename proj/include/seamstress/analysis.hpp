#pragma once

// Per-file size and element counts of a C project, before any rewriting.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "seamstress/c_model.hpp"

namespace seamstress {

struct FileAnalysis {
  std::string path;  // project-relative
  std::size_t lines = 0;
  std::map<ElementKind, int> elements;  // definitions only, declarations excluded

  int total_elements() const;
};

struct ProjectAnalysis {
  std::vector<FileAnalysis> files;  // sorted by path
  std::size_t lines = 0;
  std::map<ElementKind, int> elements;
  std::vector<std::string> warnings;

  int total_elements() const;
  nlohmann::ordered_json to_json() const;
  std::string render_text() const;
};

/// Every .c/.h under `root`, minus the `exclude` directories. Files that do
/// not scan are skipped with a warning.
ProjectAnalysis analyze_project(const std::filesystem::path& root,
                                const std::vector<std::filesystem::path>& exclude = {});

}  // namespace seamstress
