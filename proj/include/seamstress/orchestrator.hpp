#pragma once

// Sequential translate -> compile -> repair over the segment plan, with
// mapping after each compiled unit and the unit/module abort policy.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seamstress/diagnostics.hpp"
#include "seamstress/llm_backend.hpp"
#include "seamstress/metadata.hpp"
#include "seamstress/preprocess.hpp"
#include "seamstress/prompts.hpp"
#include "seamstress/report.hpp"
#include "seamstress/segment.hpp"
#include "seamstress/workspace.hpp"

namespace seamstress {

struct PipelineConfig {
  std::filesystem::path out_dir;
  int max_repair_attempts = 20;
  int max_format_failures = 20;
  int stall_threshold = 10;  // consecutive unit aborts before halving the cap
  std::set<std::string> allowed_dependencies;  // empty: standard library only
  CompileOptions compile;
  bool final_build = true;
  bool force = false;
  std::string crate_name = "translated";
  PromptTemplates templates = PromptTemplates::defaults();
};

struct RepairAttemptLog {
  std::string unit_id;
  int attempt = 0;
  std::vector<std::string> files_patched;
  std::map<ErrorCategory, int> errors_before;
  std::map<ErrorCategory, int> errors_after;
};

/// One JSON object per line in <out>/run.jsonl.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path);
  void event(const std::string& name, nlohmann::ordered_json fields = nlohmann::ordered_json::object());
  int count() const { return seq_; }

 private:
  std::ofstream out_;
  int seq_ = 0;
};

struct PipelineResult {
  SegmentPlan plan;
  MetadataStore store;
  std::vector<RepairAttemptLog> attempts;
  std::vector<Diagnostic> errors;  // every error diagnostic of every compile
  CoverageReport coverage;
  std::optional<bool> final_build_ok;
  std::vector<std::string> warnings;

  int aborted_units() const;
};

/// Candidates are the files named by errors, the current unit file and the
/// manifest. One candidate is returned as is; otherwise the LLM picks, and
/// unknown names are dropped. Falls back to the files named by errors (or
/// the unit file) when the answer is unusable.
std::vector<std::string> choose_repair_files(const CompileReport& report, const Workspace& ws,
                                             const std::string& unit_id, const std::string& unit_file,
                                             LlmClient& client, ConversationMemory& memory,
                                             const PromptTemplates& templates, int max_format_failures,
                                             std::vector<std::string>& warnings);

/// Runs every unit of `plan` (modules in `pre.modules` order). Writes
/// <out>/rust, plan.json, metadata.json, run.jsonl, report.json and
/// memory/. Unit failures end up as aborts; transport, replay and toolchain
/// errors propagate.
PipelineResult run_pipeline(const PreprocessResult& pre, SegmentPlan plan, const PipelineConfig& config,
                            LlmClient& client);

}  // namespace seamstress
