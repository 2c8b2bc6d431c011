#pragma once

// LCov / ElemCov and the error category histogram.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "seamstress/diagnostics.hpp"
#include "seamstress/metadata.hpp"
#include "seamstress/segment.hpp"

namespace seamstress {

struct Ratio {
  long num = 0;
  long den = 0;
  double value() const { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
  bool operator==(const Ratio&) const = default;
};

struct ModuleCoverage {
  std::string module;
  Ratio lines;
  Ratio elements;
  int units = 0;
  int compiled = 0;
  int aborted = 0;
};

struct CoverageReport {
  std::vector<ModuleCoverage> modules;
  Ratio lines;
  Ratio elements;
  int units = 0;
  int compiled = 0;
  int aborted = 0;
  std::map<ErrorCategory, int> histogram;
  int total_errors = 0;
  std::vector<std::string> unmapped_codes;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
  std::string render_text() const;
};

/// What coverage needs to know about a unit.
struct UnitSummary {
  std::string id;
  std::string module;
  int lines = 0;
  UnitStatus status = UnitStatus::pending;
};

std::vector<UnitSummary> summarize_units(const SegmentPlan& plan);
/// From a stored plan.json, without the module sources.
std::vector<UnitSummary> summarize_units_json(std::string_view plan_json);

/// LCov = compiled unit lines / all unit lines. ElemCov = named,
/// non-declaration elements of compiled units that have a mapping and no
/// tombstone / all such elements of all units. Modules appear in `units` order.
CoverageReport compute_coverage(const std::vector<UnitSummary>& units, const MetadataStore& store,
                                const std::vector<Diagnostic>& errors);

/// Recomputes the report from plan.json, metadata.json and run.jsonl in
/// `out_dir`. IoError when plan.json is missing.
CoverageReport coverage_from_outputs(const std::filesystem::path& out_dir);

/// "0.500"
std::string format_ratio(const Ratio& r);

}  // namespace seamstress
