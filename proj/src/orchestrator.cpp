#include "seamstress/orchestrator.hpp"

#include <algorithm>
#include <spdlog/spdlog.h>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

namespace seamstress {

using nlohmann::json;
using nlohmann::ordered_json;

RunLog::RunLog(const fs::path& path) {
  fs::create_directories(path.parent_path());
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_) throw IoError("cannot write " + path.string());
}

void RunLog::event(const std::string& name, ordered_json fields) {
  ordered_json j;
  j["seq"] = ++seq_;
  j["event"] = name;
  for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
  out_ << j.dump() << '\n';
  out_.flush();
}

int PipelineResult::aborted_units() const {
  return static_cast<int>(std::count_if(plan.units.begin(), plan.units.end(),
                                        [](const auto& u) { return u.status == UnitStatus::aborted; }));
}

namespace {

ordered_json histogram_json(const std::map<ErrorCategory, int>& h) {
  ordered_json j = ordered_json::object();
  for (const auto& [c, n] : h)
    if (n) j[std::string(to_string(c))] = n;
  return j;
}

// unit id for a workspace file, "" for files that belong to no unit.
std::string unit_of_file(const std::string& rel) {
  auto p = fs::path(rel);
  auto stem = p.stem().string();
  if (stem.rfind("unit_", 0) != 0 || p.parent_path().parent_path() != "src") return "";
  return p.parent_path().filename().string() + "." + stem.substr(5);
}

}  // namespace

std::vector<std::string> choose_repair_files(const CompileReport& report, const Workspace& ws,
                                             const std::string& unit_id, const std::string& unit_file,
                                             LlmClient& client, ConversationMemory& memory,
                                             const PromptTemplates& templates, int max_format_failures,
                                             std::vector<std::string>& warnings) {
  std::vector<std::string> named;
  for (const auto& f : report.error_files())
    if (ws.exists(f)) named.push_back(f);
  std::vector<std::string> candidates = named;
  for (const auto& f : {unit_file, std::string("Cargo.toml")})
    if (std::find(candidates.begin(), candidates.end(), f) == candidates.end()) candidates.push_back(f);
  auto fallback = named.empty() ? std::vector<std::string>{unit_file} : named;
  if (candidates.size() == 1) return candidates;

  try {
    PromptBudget budget{client.profile().context_window, client.profile().output_limit,
                        memory.est_tokens_total()};
    auto env = build_select_files_prompt(unit_id, report.error_log(), candidates, templates, budget);
    auto doc = request_json(client, env, memory, templates, max_format_failures);
    std::vector<std::string> chosen;
    for (const auto& f : doc.at("files")) {
      auto name = f.get<std::string>();
      if (std::find(candidates.begin(), candidates.end(), name) == candidates.end()) {
        warnings.push_back(unit_id + ": file selection named unknown file " + name + "; ignored");
        continue;
      }
      if (std::find(chosen.begin(), chosen.end(), name) == chosen.end()) chosen.push_back(name);
    }
    if (!chosen.empty()) return chosen;
    warnings.push_back(unit_id + ": file selection named no usable file; using the files with errors");
  } catch (const GiveUp& e) {
    warnings.push_back(std::string("file selection failed: ") + e.what());
  } catch (const BudgetExceeded& e) {
    warnings.push_back(std::string("file selection skipped: ") + e.what());
  } catch (const ContextOverflow& e) {
    warnings.push_back(std::string("file selection skipped: ") + e.what());
  }
  return fallback;
}

namespace {

class Pipeline {
 public:
  Pipeline(const PreprocessResult& pre, SegmentPlan plan, const PipelineConfig& cfg, LlmClient& client)
      : pre_(pre), plan_(std::move(plan)), cfg_(cfg), client_(client), log_(cfg.out_dir / "run.jsonl") {}

  PipelineResult run();

 private:
  enum class Outcome { compiled, aborted, overflow };

  Outcome process_unit(TranslationUnit& u);
  Outcome abort_unit(TranslationUnit& u, const std::string& reason, const WorkspaceSnapshot& snap);
  Outcome overflow(TranslationUnit& u, const std::string& what, const WorkspaceSnapshot& snap);
  PromptEnvelope translation_envelope(const TranslationUnit& u, const UnitMetadata& meta);
  PromptEnvelope repair_envelope(const TranslationUnit& u, const UnitMetadata& meta,
                                 const CompileReport& report, const SourceFile& target);
  void check_patch_answer(const SourceFile& target, const json& doc) const;
  CompileReport compile(const std::string& unit_id);
  void refresh_rust_elements();
  void map_unit(const TranslationUnit& u, const UnitMetadata& meta, const std::string& file);
  bool shrink(ResizeTrigger trigger, const std::string& unit_id);
  void reindex();
  void save_state();
  void warn(std::string w) {
    spdlog::warn("{}", w);
    warnings_.push_back(std::move(w));
  }

  const PreprocessResult& pre_;
  SegmentPlan plan_;
  const PipelineConfig& cfg_;
  LlmClient& client_;
  RunLog log_;
  Workspace ws_;
  MetadataStore store_;
  ConversationMemory memory_;
  std::vector<RepairAttemptLog> attempts_;
  std::vector<Diagnostic> errors_;
  std::vector<std::string> warnings_;
};

PipelineResult Pipeline::run() {
  ScaffoldOptions so;
  so.crate_name = cfg_.crate_name;
  so.force = cfg_.force;
  ws_ = scaffold_workspace(cfg_.out_dir / "rust", pre_.modules, pre_.features, so);
  log_.event("start", {{"modules", pre_.modules.size()}, {"units", plan_.units.size()}, {"cap", plan_.cap_lines}});
  reindex();
  save_state();

  int stall = 0;
  bool restart = true;
  while (restart) {
    restart = false;
    for (const auto& m : pre_.modules) {
      bool module_aborted = false;
      for (std::size_t i = 0;; ++i) {
        auto units = plan_.units_of(m.name);
        if (i >= units.size()) break;
        TranslationUnit& u = *units[i];
        if (u.status == UnitStatus::compiled) continue;
        if (module_aborted) {
          u.status = UnitStatus::aborted;
          log_.event("abort", {{"unit", u.id()}, {"reason", "an earlier unit of the module was aborted"},
                               {"propagated", true}});
          continue;
        }
        auto outcome = process_unit(u);
        if (outcome == Outcome::compiled) {
          stall = 0;
          continue;
        }
        if (outcome == Outcome::overflow) {
          if (shrink(ResizeTrigger::context_overflow, u.id())) {
            stall = 0;
            restart = true;
            break;
          }
          u.status = UnitStatus::aborted;
          log_.event("abort", {{"unit", u.id()}, {"reason", "prompt does not fit even at the floor cap"},
                               {"propagated", false}});
        }
        module_aborted = true;
        if (++stall >= cfg_.stall_threshold) {
          stall = 0;
          if (shrink(ResizeTrigger::compile_stall, u.id())) {
            restart = true;
            break;
          }
        }
      }
      if (restart) break;
    }
  }
  memory_ = clear_memory(memory_, "", cfg_.out_dir / "memory");

  PipelineResult result;
  bool any_compiled = std::any_of(plan_.units.begin(), plan_.units.end(),
                                  [](const auto& u) { return u.status == UnitStatus::compiled; });
  if (cfg_.final_build && any_compiled) {
    auto opts = cfg_.compile;
    opts.full_build = true;
    auto r = compile_workspace(ws_, opts);
    result.final_build_ok = r.success;
    log_.event("build", {{"success", r.success}, {"errors", r.errors().size()}});
    if (!r.success) warn("final cargo build failed although every unit passed cargo check:\n" + r.error_log());
  }
  result.coverage = compute_coverage(summarize_units(plan_), store_, errors_);
  save_state();
  write_file_atomic(cfg_.out_dir / "report.json", result.coverage.to_json().dump(2) + "\n");
  log_.event("done", {{"lcov", format_ratio(result.coverage.lines)},
                      {"elemcov", format_ratio(result.coverage.elements)},
                      {"compiled", result.coverage.compiled},
                      {"aborted", result.coverage.aborted}});
  result.plan = plan_;
  result.store = store_;
  result.attempts = attempts_;
  result.errors = errors_;
  result.warnings = warnings_;
  return result;
}

Pipeline::Outcome Pipeline::process_unit(TranslationUnit& u) {
  memory_ = clear_memory(memory_, u.id(), cfg_.out_dir / "memory");
  auto snap = take_snapshot(ws_);
  const UnitMetadata meta = *store_.unit(u.id());

  json doc;
  PromptEnvelope env;
  try {
    env = translation_envelope(u, meta);
    doc = request_json(client_, env, memory_, cfg_.templates, cfg_.max_format_failures, [](const json& d) {
      if (trim(d.at("rust_code").get<std::string>()).empty()) throw FormatError("rust_code is empty");
    });
  } catch (const BudgetExceeded& e) {
    return overflow(u, e.what(), snap);
  } catch (const ContextOverflow& e) {
    return overflow(u, e.what(), snap);
  } catch (const GiveUp& e) {
    return abort_unit(u, e.what(), snap);
  }
  auto file = ws_.add_unit(u, doc.at("rust_code").get<std::string>());
  u.status = UnitStatus::translated;
  log_.event("translate", {{"unit", u.id()}, {"file", file}, {"prompt", env.digest()},
                           {"c_lines", u.line_count()}, {"context_items", meta.imports_needed.size()}});

  auto report = compile(u.id());
  for (int attempt = 1; !report.success; ++attempt) {
    if (attempt > cfg_.max_repair_attempts)
      return abort_unit(u, "still failing after " + std::to_string(cfg_.max_repair_attempts) + " repair attempts",
                        snap);
    RepairAttemptLog rec;
    rec.unit_id = u.id();
    rec.attempt = attempt;
    rec.errors_before = category_histogram(report.diagnostics);
    try {
      auto files = choose_repair_files(report, ws_, u.id(), file, client_, memory_, cfg_.templates,
                                       cfg_.max_format_failures, warnings_);
      log_.event("select", {{"unit", u.id()}, {"attempt", attempt}, {"files", files}});
      for (const auto& f : files) {
        SourceFile target{f, ws_.exists(f) ? ws_.read(f) : std::string()};
        auto renv = repair_envelope(u, meta, report, target);
        auto answer = request_json(client_, renv, memory_, cfg_.templates, cfg_.max_format_failures,
                                   [&](const json& d) { check_patch_answer(target, d); });
        auto patches = patches_from_json(answer, f);
        auto text = apply_patches(target.text, patches);
        ws_.write(f, text);
        rec.files_patched.push_back(f);
        log_.event("patch", {{"unit", u.id()}, {"attempt", attempt}, {"file", f}, {"patches", patches.size()},
                             {"lines_before", count_lines(target.text)}, {"lines_after", count_lines(text)}});
      }
    } catch (const BudgetExceeded& e) {
      return overflow(u, e.what(), snap);
    } catch (const ContextOverflow& e) {
      return overflow(u, e.what(), snap);
    } catch (const GiveUp& e) {
      return abort_unit(u, e.what(), snap);
    }
    report = compile(u.id());
    rec.errors_after = category_histogram(report.diagnostics);
    log_.event("repair", {{"unit", u.id()}, {"attempt", attempt}, {"files", rec.files_patched},
                          {"errors_before", histogram_json(rec.errors_before)},
                          {"errors_after", histogram_json(rec.errors_after)}, {"success", report.success}});
    attempts_.push_back(std::move(rec));
  }

  u.status = UnitStatus::compiled;
  refresh_rust_elements();
  map_unit(u, meta, file);
  save_state();
  return Outcome::compiled;
}

Pipeline::Outcome Pipeline::abort_unit(TranslationUnit& u, const std::string& reason,
                                       const WorkspaceSnapshot& snap) {
  restore_snapshot(ws_, snap);
  refresh_rust_elements();
  u.status = UnitStatus::aborted;
  log_.event("abort", {{"unit", u.id()}, {"reason", reason}, {"propagated", false}});
  save_state();
  return Outcome::aborted;
}

Pipeline::Outcome Pipeline::overflow(TranslationUnit& u, const std::string& what, const WorkspaceSnapshot& snap) {
  restore_snapshot(ws_, snap);
  refresh_rust_elements();
  u.status = UnitStatus::pending;
  log_.event("overflow", {{"unit", u.id()}, {"reason", what}});
  return Outcome::overflow;
}

PromptEnvelope Pipeline::translation_envelope(const TranslationUnit& u, const UnitMetadata& meta) {
  const auto& p = client_.profile();
  PromptBudget budget{p.context_window, p.output_limit, memory_.est_tokens_total()};
  auto bare = build_translation_prompt(u, {}, cfg_.templates, budget);
  if (meta.imports_needed.empty()) return bare;
  auto used = bare.est_tokens + bare.projected_output_tokens;
  std::size_t room = budget.available() > used ? budget.available() - used : 0;
  for (int i = 0; i < 4 && room > 0; ++i, room /= 2) {
    auto ctx = select_context(meta, store_, ContextMode::translate, room);
    for (auto& w : ctx.warnings) warn(u.id() + ": " + w);
    try {
      return build_translation_prompt(u, ctx, cfg_.templates, budget);
    } catch (const BudgetExceeded&) {
    }
  }
  return bare;
}

PromptEnvelope Pipeline::repair_envelope(const TranslationUnit& u, const UnitMetadata& meta,
                                         const CompileReport& report, const SourceFile& target) {
  const auto& p = client_.profile();
  PromptBudget budget{p.context_window, p.output_limit, memory_.est_tokens_total()};
  auto log = report.error_log();
  auto bare = build_repair_prompt(u.id(), log, target, {}, cfg_.templates, budget);
  if (meta.imports_needed.empty()) return bare;
  std::size_t room = budget.available() > bare.est_tokens ? budget.available() - bare.est_tokens : 0;
  for (int i = 0; i < 4 && room > 0; ++i, room /= 2) {
    auto ctx = select_context(meta, store_, ContextMode::repair, room);
    if (ctx.empty()) break;
    try {
      auto env = build_repair_prompt(u.id(), log, target, ctx, cfg_.templates, budget);
      // Context must not push the log out.
      if (env.text.find("earlier lines of the compiler log truncated") == std::string::npos ||
          bare.text.find("earlier lines of the compiler log truncated") != std::string::npos)
        return env;
    } catch (const BudgetExceeded&) {
    }
  }
  return bare;
}

void Pipeline::check_patch_answer(const SourceFile& target, const json& doc) const {
  std::string text;
  try {
    text = apply_patches(target.text, patches_from_json(doc, target.path));
  } catch (const PatchOutOfRange& e) {
    throw FormatError(e.what());
  } catch (const OverlappingPatches& e) {
    throw FormatError(e.what());
  }
  if (target.path == "Cargo.toml") {
    auto bad = disallowed_dependencies(text, cfg_.allowed_dependencies);
    if (!bad.empty()) {
      std::string names;
      for (const auto& b : bad) names += (names.empty() ? "" : ", ") + b;
      throw FormatError("DisallowedDependency: " + names +
                        " cannot be added; only the standard library is available");
    }
  } else if (fs::path(target.path).extension() == ".rs") {
    bool parsed_before = true;
    try {
      parse_rust_elements(target.text, target.path);
    } catch (const ScanFailure&) {
      parsed_before = false;
    }
    if (parsed_before) {
      try {
        parse_rust_elements(text, target.path);
      } catch (const ScanFailure& e) {
        throw FormatError(std::string("the patched file would no longer parse: ") + e.what());
      }
    }
  }
}

CompileReport Pipeline::compile(const std::string& unit_id) {
  auto r = compile_workspace(ws_, cfg_.compile);
  ordered_json errs = ordered_json::array();
  for (const auto* d : r.errors()) {
    errors_.push_back(*d);
    errs.push_back({{"code", d->code}, {"category", to_string(d->category)}, {"file", d->file},
                    {"line", d->line}, {"message", d->message}});
  }
  for (const auto& c : r.unmapped_codes) warn("error classified by fallback rule, add it to the table: " + c);
  log_.event("compile", {{"unit", unit_id}, {"success", r.success}, {"errors", errs}});
  return r;
}

void Pipeline::refresh_rust_elements() {
  auto files = ws_.rust_files();
  std::set<std::string> present(files.begin(), files.end());
  std::set<std::string> stored;
  for (const auto& r : store_.rust_elements) stored.insert(r.file);
  for (const auto& f : stored)
    if (!present.count(f)) store_.put_rust_elements(f, {});
  for (const auto& f : files) {
    try {
      store_.put_rust_elements(f, parse_rust_elements(ws_.read(f), f, unit_of_file(f)));
    } catch (const ScanFailure& e) {
      warn(std::string("cannot index ") + f + ": " + e.what());
    }
  }
}

void Pipeline::map_unit(const TranslationUnit& u, const UnitMetadata& meta, const std::string& file) {
  std::vector<MappingReport> reports;
  ConversationMemory mem(u.id());
  try {
    auto env = build_mapping_prompt(meta, u.text, {{file, ws_.read(file)}}, cfg_.templates);
    auto doc = request_json(client_, env, mem, cfg_.templates, cfg_.max_format_failures);
    reports = parse_mapping_response(doc);
  } catch (const GiveUp& e) {
    warn(u.id() + ": mapping answer unusable, keeping exact-name matches only: " + e.what());
  } catch (const ContextOverflow& e) {
    warn(u.id() + ": mapping prompt too large, keeping exact-name matches only: " + e.what());
  } catch (const FormatError& e) {
    warn(u.id() + ": mapping answer rejected: " + e.what());
  }
  auto w = record_mapping(store_, meta, {file}, reports);
  for (auto& x : w) warn(u.id() + ": " + x);
  int mapped = 0, removed = 0;
  for (const auto& e : meta.elements) {
    if (e.is_declaration || e.name.empty()) continue;
    mapped += element_covered(store_, e.name, u.id());
    removed += store_.is_tombstoned(e.name, u.id());
  }
  log_.event("mapping", {{"unit", u.id()}, {"mapped", mapped}, {"tombstones", removed}, {"warnings", w}});
}

bool Pipeline::shrink(ResizeTrigger trigger, const std::string& unit_id) {
  int from = plan_.cap_lines;
  try {
    plan_ = trigger == ResizeTrigger::context_overflow ? shrink_for_overflow(std::move(plan_), pre_.modules)
                                                       : shrink_for_stall(std::move(plan_), pre_.modules);
  } catch (const FloorReached& e) {
    log_.event("shrink", {{"trigger", to_string(trigger)}, {"unit", unit_id}, {"from", from},
                          {"refused", e.what()}});
    return false;
  }
  log_.event("shrink", {{"trigger", to_string(trigger)}, {"unit", unit_id}, {"from", from},
                        {"to", plan_.cap_lines}, {"units", plan_.units.size()}});
  reindex();
  save_state();
  return true;
}

void Pipeline::reindex() {
  auto index = build_project_index(plan_, pre_.modules);
  std::set<std::string> live;
  for (const auto& u : plan_.units) {
    live.insert(u.id());
    if (u.status == UnitStatus::compiled && store_.unit(u.id())) continue;
    auto m = std::find_if(pre_.modules.begin(), pre_.modules.end(),
                          [&](const auto& x) { return x.name == u.module; });
    store_.put_unit(emit_unit_metadata(u, *m, index));
  }
  std::erase_if(store_.units, [&](const UnitMetadata& m) { return !live.count(m.unit_id); });
}

void Pipeline::save_state() {
  write_plan_outputs(plan_, cfg_.out_dir);
  store_.save(cfg_.out_dir / "metadata.json");
}

}  // namespace

PipelineResult run_pipeline(const PreprocessResult& pre, SegmentPlan plan, const PipelineConfig& config,
                            LlmClient& client) {
  fs::create_directories(config.out_dir);
  Pipeline p(pre, std::move(plan), config, client);
  return p.run();
}

}  // namespace seamstress
