#pragma once

// Turns a C project into one merged, declaration-stripped, reference-ordered
// source per root .c file.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seamstress/c_model.hpp"

namespace seamstress {

struct PreprocessOptions {
  std::vector<std::filesystem::path> include_dirs;
  /// Macros assumed defined for include resolution, on top of the project's
  /// own #defines.
  std::vector<std::string> defines;
  /// Directories under the project root to ignore (e.g. an output dir).
  std::vector<std::filesystem::path> exclude;
};

/// One line of a module with its origin. An empty file marks a synthetic line.
struct SourceLine {
  std::string text;
  std::string file;
  int line = 0;

  bool operator==(const SourceLine&) const = default;
};

struct OriginRange {
  int start_line = 0;  // module lines, 1-based inclusive
  int end_line = 0;
  std::string file;  // empty for synthetic lines
  int source_start = 0;
  int source_end = 0;

  bool synthetic() const { return file.empty(); }
  bool operator==(const OriginRange&) const = default;
};

struct FeatureRecord {
  std::string macro_name;
  bool originally_defined = false;
  std::string file;
  int line = 0;

  /// Cargo feature / cfg name.
  std::string feature() const;
  bool operator==(const FeatureRecord&) const = default;
};

/// A declaration kept because its definition lives in another module.
struct CrossModuleRef {
  std::string name;
  std::string module;
  int line = 0;
};

struct ModuleSource {
  std::string name;       // Rust module identifier
  std::string root_file;  // project-relative path of the root .c file
  std::vector<SourceLine> lines;

  // Derived by rescan().
  ScannedFile scan;

  std::vector<FeatureRecord> features;
  std::vector<std::string> feature_defines;  // macro names whose #define was extracted
  std::map<std::string, std::string> renames;  // static uniquification, old -> new
  std::vector<CrossModuleRef> externs;
  std::vector<std::string> depends_on;  // other module names, sorted
  std::vector<std::string> warnings;

  /// Element file id used for every element of this module.
  std::string file_id() const { return name + ".c"; }
  std::string text() const;
  const std::vector<CodeElement>& elements() const { return scan.elements; }
  std::vector<OriginRange> origin_map() const;

  /// Re-lexes and re-scans the current lines.
  void rescan();
};

/// Project files loaded once and shared by every module.
struct Project {
  std::filesystem::path root;
  IncludeGraph graph;
  std::map<std::string, std::string> texts;  // relative path -> text
  std::set<std::string> defined_macros;      // every #define name, include guards excluded
  std::vector<std::string> roots;            // .c files, sorted
  std::vector<std::string> warnings;
};

Project load_project(const std::filesystem::path& root, const PreprocessOptions& options = {});

/// Rust-safe module identifier for a root file stem.
std::string module_name_for_stem(std::string_view stem);

/// Inlines the transitive quoted-include closure of `root_c`. Each header is
/// inserted at its first include only; include guards are dropped.
ModuleSource merge_includes(const Project& project, const std::string& root_c,
                            const PreprocessOptions& options = {});

/// Top-level names defined (not merely declared) by each module.
struct SymbolTable {
  std::map<std::string, std::set<std::string>> definers;  // name -> modules
  std::map<std::string, std::set<std::string>> statics;   // name -> modules with a static
};

SymbolTable build_symbol_table(const std::vector<ModuleSource>& modules);

/// Renames statics that collide with a top-level name of any other module
/// to NAME__<module>.
ModuleSource uniquify_statics(ModuleSource module, const SymbolTable& symbols);

/// Removes declarations whose definition is in the same module. Others are
/// kept and recorded in `externs` when another module defines them.
ModuleSource strip_declarations(ModuleSource module, const SymbolTable& symbols);

/// Stable topological reorder at atom level (conditional blocks move whole).
ModuleSource reorder_elements(ModuleSource module);

/// Removes valueless #defines used only as conditional guards and records
/// every guard as a feature.
ModuleSource extract_cfg_macros(ModuleSource module, const std::set<std::string>& project_defines,
                                const std::set<std::string>& assumed_defines = {});

struct PreprocessResult {
  std::vector<ModuleSource> modules;  // in dependency order
  std::vector<FeatureRecord> features;  // merged across modules, by name
  std::vector<std::string> warnings;
};

PreprocessResult preprocess_project(const std::filesystem::path& root,
                                    const PreprocessOptions& options = {});

/// Atom-level references that point forward across SCCs (0 for a valid order).
std::size_t count_forward_references(const ModuleSource& module);

/// Writes preprocessed/<name>.c, preprocessed/<name>.origin.json and features.json.
void write_preprocess_outputs(const PreprocessResult& result, const std::filesystem::path& out_dir);

}  // namespace seamstress
