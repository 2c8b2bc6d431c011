#pragma once

// Per-unit C element records, parsed Rust elements, the C <-> Rust mapping
// and prompt context selection. Persisted as metadata.json.

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seamstress/c_model.hpp"
#include "seamstress/preprocess.hpp"
#include "seamstress/segment.hpp"

namespace seamstress {

struct ElementRecord {
  ElementKind kind = ElementKind::other;
  std::string name;
  /// Function signature, or the full definition for types and macros, or a
  /// declaration (initializer dropped) for variables.
  std::string signature_or_definition;
  int start_line = 0;
  int end_line = 0;
  bool is_static = false;
  bool is_declaration = false;  // kept cross-module seam; never mapped
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const ElementRecord&) const = default;
};

struct UnitMetadata {
  std::string unit_id;
  std::string module;
  std::vector<ElementRecord> elements;
  std::vector<std::string> imports_needed;  // sorted
  nlohmann::json extra = nlohmann::json::object();

  const ElementRecord* element(std::string_view name) const;
  bool operator==(const UnitMetadata&) const = default;
};

enum class RustKind { function, macro_function, struct_or_enum, macro_variable, static_or_constant, other };

std::string_view to_string(RustKind k);
std::optional<RustKind> parse_rust_kind(std::string_view s);

struct RustElementRecord {
  RustKind kind = RustKind::other;
  std::string name;  // impl methods are "Type::method"
  std::string signature;
  std::string file;
  std::string unit_id;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const RustElementRecord&) const = default;
};

enum class MappingConfidence { llm, exact_name };

std::string_view to_string(MappingConfidence c);

struct MappingEntry {
  std::string c_name;
  std::string c_unit;
  std::string rust_name;
  std::string rust_file;
  MappingConfidence confidence = MappingConfidence::llm;
  std::string note;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const MappingEntry&) const = default;
};

struct Tombstone {
  std::string c_name;
  std::string c_unit;
  std::string note;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Tombstone&) const = default;
};

inline constexpr int kMetadataSchema = 1;

struct MetadataStore {
  int schema = kMetadataSchema;
  std::vector<UnitMetadata> units;
  std::vector<RustElementRecord> rust_elements;
  std::vector<MappingEntry> mappings;
  std::vector<Tombstone> tombstones;
  nlohmann::json extra = nlohmann::json::object();  // unknown top-level fields

  const UnitMetadata* unit(std::string_view unit_id) const;
  void put_unit(UnitMetadata meta);
  /// Replaces the records previously parsed from `file`.
  void put_rust_elements(const std::string& file, std::vector<RustElementRecord> records);
  const MappingEntry* mapping_for(std::string_view c_name, std::string_view c_unit) const;
  const RustElementRecord* rust_element(std::string_view name, std::string_view file) const;
  bool is_tombstoned(std::string_view c_name, std::string_view c_unit) const;

  std::string to_json() const;
  static MetadataStore from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static MetadataStore load(const std::filesystem::path& path);

  bool operator==(const MetadataStore&) const = default;
};

/// Where each top-level name is defined across the plan.
struct ProjectIndex {
  struct Definition {
    std::string unit_id;
    std::string module;
    std::string element_id;
    ElementKind kind;
    bool is_static;
  };
  std::map<std::string, std::vector<Definition>> by_name;

  /// Visible definitions of `name` from a unit of `module` (statics only
  /// within their module).
  std::vector<const Definition*> visible(std::string_view name, std::string_view module) const;
};

ProjectIndex build_project_index(const SegmentPlan& plan, std::span<const ModuleSource> modules);

/// Context summary of one C element.
std::string summarize_element(const CodeElement& e, const std::vector<std::string>& lines);

UnitMetadata emit_unit_metadata(const TranslationUnit& unit, const ModuleSource& module,
                                const ProjectIndex& index);

/// Top-level Rust items. Throws ScanFailure(file) on unbalanced braces.
std::vector<RustElementRecord> parse_rust_elements(std::string_view source, const std::string& file,
                                                   const std::string& unit_id = "");

struct ContextItem {
  std::string name;
  std::string text;
  std::string note;  // "defined in <rust file>" or the C origin
  bool rust = false;
  int priority = 0;  // 0 functions, 1 types, 2 everything else
};

struct ContextBundle {
  std::vector<ContextItem> items;
  std::vector<std::string> warnings;
  std::size_t est_tokens = 0;

  bool empty() const { return items.empty(); }
  std::string render() const;
};

enum class ContextMode { translate, repair };

/// Context for `meta.imports_needed`. Rust signatures where a mapping exists,
/// C text otherwise (translate mode only). Items are dropped lowest priority
/// first until the rendered bundle fits `budget_tokens`.
ContextBundle select_context(const UnitMetadata& meta, const MetadataStore& store, ContextMode mode,
                             std::size_t budget_tokens);

/// One entry of a mapping response.
struct MappingReport {
  std::string c_name;
  std::string rust_name;
  std::string rust_file;
  bool removed = false;
  std::string note;
};

std::vector<MappingReport> parse_mapping_response(const nlohmann::json& doc);

/// Applies a mapping response for one unit; returns warnings
/// (UnknownCElement, UnknownRustElement). Unreported C elements whose
/// snake_case name matches a Rust item of `rust_files` are added as
/// exact-name mappings.
std::vector<std::string> record_mapping(MetadataStore& store, const UnitMetadata& unit,
                                        const std::vector<std::string>& rust_files,
                                        const std::vector<MappingReport>& reports);

/// Covered when at least one mapping exists and no tombstone.
bool element_covered(const MetadataStore& store, std::string_view c_name, std::string_view c_unit);

}  // namespace seamstress
