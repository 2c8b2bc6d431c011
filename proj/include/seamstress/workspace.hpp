#pragma once

// The generated Cargo package: scaffold, per-unit files, line-range patches
// and snapshots for rollback.

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seamstress/preprocess.hpp"
#include "seamstress/segment.hpp"

namespace seamstress {

struct RepairPatch {
  std::string file;  // workspace-relative
  int start_line = 1;
  int end_line = 1;
  std::string replacement;  // empty deletes the range

  bool operator==(const RepairPatch&) const = default;
};

/// Lines the patch removes from a file of `file_lines` lines: 0 for a pure
/// insertion at the end (start = end = length + 1).
int patch_span(const RepairPatch& p, int file_lines);

/// PatchOutOfRange unless 1 <= start <= end <= length + 1;
/// OverlappingPatches when two ranges share a line.
void validate_patches(const std::vector<RepairPatch>& patches, int file_lines);

/// Validates, then applies in descending start order. The result is
/// newline-terminated.
std::string apply_patches(std::string_view text, std::vector<RepairPatch> patches);

/// Patches of one repair answer (`patches` array) for `file`.
std::vector<RepairPatch> patches_from_json(const nlohmann::json& doc, const std::string& file);

/// Dependencies declared in a manifest that are not in `allowed`. FormatError
/// when the manifest does not parse.
std::vector<std::string> disallowed_dependencies(std::string_view manifest_text,
                                                 const std::set<std::string>& allowed);

struct Workspace {
  std::filesystem::path root;
  std::string crate_name;
  std::vector<std::string> modules;
  /// Unit files per module in declaration order, workspace-relative.
  std::map<std::string, std::vector<std::string>> unit_files;
  bool has_build_script = false;

  std::filesystem::path manifest() const { return root / "Cargo.toml"; }
  std::filesystem::path lib_root() const { return root / "src" / "lib.rs"; }
  std::filesystem::path path_of(const std::string& rel) const { return root / rel; }
  std::string read(const std::string& rel) const;
  void write(const std::string& rel, std::string_view text) const;
  bool exists(const std::string& rel) const;

  /// Every file of the package (target directories excluded), relative,
  /// sorted.
  std::vector<std::string> files() const;
  std::vector<std::string> rust_files() const;

  /// Writes the unit file and declares it in its module. Returns its path.
  std::string add_unit(const TranslationUnit& unit, std::string_view rust_code);
  void remove_unit(const std::string& rel);
};

/// src/<module>/unit_<ordinal>.rs
std::string unit_file_name(const TranslationUnit& unit);

/// Package name derived from a directory name.
std::string crate_name_for(std::string_view name);

struct ScaffoldOptions {
  std::string crate_name = "translated";
  bool force = false;  // replace an existing workspace
};

/// Creates root/{Cargo.toml, build.rs?, src/lib.rs, src/<module>/mod.rs}.
/// build.rs only when some feature was originally defined. WorkspaceExists
/// when root is non-empty and force is off.
Workspace scaffold_workspace(const std::filesystem::path& root,
                             const std::vector<ModuleSource>& modules,
                             const std::vector<FeatureRecord>& features,
                             const ScaffoldOptions& options = {});

std::string render_manifest(const std::string& crate_name, const std::vector<FeatureRecord>& features);
std::string render_build_script(const std::vector<FeatureRecord>& features);

/// Content of every workspace file; restore() puts the tree back exactly.
struct WorkspaceSnapshot {
  std::map<std::string, std::string> files;
  std::map<std::string, std::vector<std::string>> unit_files;
};

WorkspaceSnapshot take_snapshot(const Workspace& ws);
void restore_snapshot(Workspace& ws, const WorkspaceSnapshot& snap);

}  // namespace seamstress
