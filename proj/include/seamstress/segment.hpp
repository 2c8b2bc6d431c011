#pragma once

// Splits preprocessed modules into translation units under a line cap and
// applies the shrink policy when prompts overflow or units stop compiling.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seamstress/preprocess.hpp"

namespace seamstress {

enum class UnitStatus { pending, translated, compiled, failed, aborted };

std::string_view to_string(UnitStatus s);
std::optional<UnitStatus> parse_unit_status(std::string_view s);

struct TranslationUnit {
  std::string module;
  int ordinal = 0;  // stable within a module; new units get fresh ordinals
  int start_line = 0;  // module lines, inclusive
  int end_line = 0;
  std::vector<std::string> element_ids;
  std::string text;
  std::size_t est_tokens = 0;
  UnitStatus status = UnitStatus::pending;
  bool oversized = false;

  std::string id() const { return module + "." + std::to_string(ordinal); }
  int line_count() const { return end_line - start_line + 1; }
  bool operator==(const TranslationUnit&) const = default;
};

enum class ResizeTrigger { initial, context_overflow, compile_stall };

std::string_view to_string(ResizeTrigger t);
std::optional<ResizeTrigger> parse_resize_trigger(std::string_view s);

struct CapChange {
  int cap = 0;
  ResizeTrigger trigger = ResizeTrigger::initial;
  bool operator==(const CapChange&) const = default;
};

inline constexpr int kDefaultFloorLines = 30;
inline constexpr int kDefaultMaxCapLines = 5000;

struct SegmentPlan {
  int cap_lines = 0;
  int floor_lines = kDefaultFloorLines;
  std::vector<CapChange> history;
  /// Units of every module, grouped by module in processing order, then by
  /// start line.
  std::vector<TranslationUnit> units;

  std::vector<TranslationUnit*> units_of(std::string_view module);
  TranslationUnit* find(std::string_view unit_id);
  const TranslationUnit* find(std::string_view unit_id) const;
  bool operator==(const SegmentPlan&) const = default;
};

/// A contiguous, indivisible run of module lines.
struct AtomGroup {
  int start_line = 0;
  int end_line = 0;
  std::vector<std::size_t> elements;  // indices into module.elements()
  int line_count() const { return end_line - start_line + 1; }
};

/// Atoms of the module with every multi-node call-graph SCC (and anything
/// between its members) fused into one group.
std::vector<AtomGroup> group_sccs(const ModuleSource& module);

/// Greedy packing of lines [from_line, to_line] (default: whole module).
/// Free lines travel with the group below them; the last unit absorbs
/// trailing lines.
std::vector<TranslationUnit> plan_segments(const ModuleSource& module, int cap_lines,
                                           int from_line = 1, int to_line = -1,
                                           int first_ordinal = 1);

/// cap = min(max_cap, floor(0.5 * window / 15)), never below floor.
int initial_cap_lines(std::size_t context_window, int max_cap = kDefaultMaxCapLines,
                      int floor_lines = kDefaultFloorLines);

SegmentPlan make_plan(std::span<const ModuleSource> modules, int cap_lines,
                      int floor_lines = kDefaultFloorLines);

int next_cap_for_overflow(int cap, int floor_lines);  // floor(cap * 7 / 8)
int next_cap_for_stall(int cap, int floor_lines);     // max(floor, round_half_up(cap / 2))

/// Both shrinks throw FloorReached when the new cap would fall below the
/// floor or stop decreasing. Compiled units are kept; every maximal run of
/// other units is re-planned at the new cap.
SegmentPlan shrink_for_overflow(SegmentPlan plan, std::span<const ModuleSource> modules);
SegmentPlan shrink_for_stall(SegmentPlan plan, std::span<const ModuleSource> modules);

/// plan.json round trip (unit texts are not stored; they are rebuilt from the
/// modules on load).
std::string plan_to_json(const SegmentPlan& plan);
SegmentPlan plan_from_json(std::string_view json, std::span<const ModuleSource> modules);

/// Writes segments/<unit id>.c for every unit and plan.json.
void write_plan_outputs(const SegmentPlan& plan, const std::filesystem::path& out_dir);

}  // namespace seamstress
