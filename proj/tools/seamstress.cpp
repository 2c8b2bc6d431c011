// seamstress: C -> Rust translation driver.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <spdlog/spdlog.h>

#include "seamstress/analysis.hpp"
#include "seamstress/config.hpp"
#include "seamstress/error.hpp"
#include "seamstress/orchestrator.hpp"
#include "seamstress/text.hpp"

using namespace seamstress;

namespace {

constexpr int kOk = 0;
constexpr int kAborted = 1;
constexpr int kUsage = 2;

struct Flags {
  std::optional<std::string> project, out, backend, replay_profile, rules, templates, record, report_format, config,
      crate_name, cargo;
  std::optional<int> cap, floor, max_repair, max_format_retries, compile_timeout;
  std::vector<std::string> define;
  bool force = false;
  bool verbose = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--project", f.project, "C project directory");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--config", f.config, "config file (default: <project>/seamstress.toml)");
  sub->add_option("--define", f.define, "macros assumed defined (NAME[,NAME...])")->delimiter(',');
  sub->add_flag("-v,--verbose", f.verbose, "debug logging");
}

void add_plan(CLI::App* sub, Flags& f) {
  sub->add_option("--backend", f.backend, "LLM profile name, or replay:DIR");
  sub->add_option("--replay-profile", f.replay_profile, "profile whose window a replay run uses");
  sub->add_option("--cap", f.cap, "initial unit size cap in lines");
  sub->add_option("--floor", f.floor, "smallest cap the shrinks may reach");
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  std::optional<fs::path> file;
  if (f.config) file = *f.config;
  else if (f.project && fs::is_regular_file(fs::path(*f.project) / "seamstress.toml"))
    file = fs::path(*f.project) / "seamstress.toml";
  if (file) apply_config_file(cfg, *file);

  if (f.project) cfg.project_root = *f.project;
  if (f.out) cfg.out_dir = *f.out;
  if (f.backend) cfg.backend = *f.backend;
  if (f.replay_profile) cfg.replay_profile = *f.replay_profile;
  if (f.cap) cfg.cap = *f.cap;
  if (f.floor) cfg.floor = *f.floor;
  if (f.max_repair) cfg.max_repair_attempts = *f.max_repair;
  if (f.max_format_retries) cfg.max_format_retries = *f.max_format_retries;
  if (f.compile_timeout) cfg.compile_timeout = *f.compile_timeout;
  if (!f.define.empty()) cfg.defines = f.define;
  if (f.rules) cfg.rules = *f.rules;
  if (f.templates) cfg.templates = *f.templates;
  if (f.record) cfg.record = *f.record;
  if (f.report_format) cfg.report_format = *f.report_format;
  if (f.crate_name) cfg.crate_name = *f.crate_name;
  if (f.cargo) cfg.cargo = *f.cargo;
  if (f.force) cfg.force = true;
  return cfg;
}

// Held for the life of the command; the kernel drops it on exit.
void lock_out_dir(const fs::path& out) {
  fs::create_directories(out);
  auto path = out / ".seamstress.lock";
  int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot open " + path.string());
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0)
    throw ConfigError(out.string() + " is in use by another seamstress command");
}

BackendProfile profile_named(const std::string& name) {
  auto p = find_profile(name);
  if (!p) {
    std::string names;
    for (const auto& b : builtin_profiles()) names += " " + b.name;
    throw ConfigError("unknown backend profile " + name + " (known:" + names + ")");
  }
  return *p;
}

BackendProfile window_profile(const RunConfig& cfg) {
  return profile_named(cfg.replay_dir() ? cfg.replay_profile : cfg.backend);
}

PreprocessResult preprocess(const RunConfig& cfg) {
  PreprocessOptions opts;
  opts.defines = cfg.defines;
  opts.exclude = {cfg.out_dir};
  auto pre = preprocess_project(cfg.project_root, opts);
  for (const auto& w : pre.warnings) spdlog::warn("{}", w);
  write_preprocess_outputs(pre, cfg.out_dir);
  return pre;
}

SegmentPlan plan_for(const RunConfig& cfg, const PreprocessResult& pre) {
  int cap = cfg.cap.value_or(initial_cap_lines(window_profile(cfg).context_window, kDefaultMaxCapLines, cfg.floor));
  return make_plan(pre.modules, std::max(cap, cfg.floor), cfg.floor);
}

void print(const std::string& s) { std::fwrite(s.data(), 1, s.size(), stdout); }

int cmd_analyze(const RunConfig& cfg) {
  if (cfg.project_root.empty()) throw ConfigError("no project directory given (--project)");
  std::vector<fs::path> exclude;
  if (!cfg.out_dir.empty()) exclude.push_back(cfg.out_dir);
  auto a = analyze_project(cfg.project_root, exclude);
  if (!cfg.out_dir.empty()) {
    lock_out_dir(cfg.out_dir);
    write_file_atomic(cfg.out_dir / "analysis.json", a.to_json().dump(2) + "\n");
  }
  print(cfg.report_format == "json" ? a.to_json().dump(2) + "\n" : a.render_text());
  return kOk;
}

int cmd_preprocess(const RunConfig& cfg) {
  cfg.validate();
  lock_out_dir(cfg.out_dir);
  auto pre = preprocess(cfg);
  std::size_t lines = 0;
  for (const auto& m : pre.modules) lines += m.lines.size();
  print(std::to_string(pre.modules.size()) + " modules, " + std::to_string(lines) + " lines, " +
        std::to_string(pre.features.size()) + " features -> " + (cfg.out_dir / "preprocessed").string() + "\n");
  return kOk;
}

int cmd_segment(const RunConfig& cfg) {
  cfg.validate();
  lock_out_dir(cfg.out_dir);
  auto pre = preprocess(cfg);
  auto plan = plan_for(cfg, pre);
  write_plan_outputs(plan, cfg.out_dir);
  std::string out = "cap " + std::to_string(plan.cap_lines) + " lines, " + std::to_string(plan.units.size()) +
                    " units\n";
  for (const auto& u : plan.units) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-24s lines %5d-%-5d %5d lines  ~%zu tokens%s\n", u.id().c_str(), u.start_line,
                  u.end_line, u.line_count(), u.est_tokens, u.oversized ? "  (oversized)" : "");
    out += buf;
  }
  print(out);
  return kOk;
}

int cmd_translate(const RunConfig& cfg) {
  cfg.validate();
  lock_out_dir(cfg.out_dir);
  auto templates = PromptTemplates::load(cfg.templates, cfg.rules);
  templates.validate();

  std::unique_ptr<LlmClient> client;
  if (auto dir = cfg.replay_dir()) {
    client = std::make_unique<ReplayClient>(profile_named(cfg.replay_profile), *dir);
  } else {
    auto profile = profile_named(cfg.backend);
    client = std::make_unique<ChatClient>(profile, make_http_transport(profile));
  }
  std::optional<TranscriptWriter> transcript;
  if (cfg.record) {
    transcript.emplace(*cfg.record);
    client->set_transcript(&*transcript);
  }

  auto pre = preprocess(cfg);
  auto plan = plan_for(cfg, pre);

  PipelineConfig pc;
  pc.out_dir = cfg.out_dir;
  pc.max_repair_attempts = cfg.max_repair_attempts;
  pc.max_format_failures = cfg.max_format_retries;
  pc.allowed_dependencies = {cfg.allowed_dependencies.begin(), cfg.allowed_dependencies.end()};
  pc.compile.timeout = std::chrono::seconds(cfg.compile_timeout);
  if (!cfg.cargo.empty()) pc.compile.cargo = cfg.cargo;
  pc.force = cfg.force;
  pc.crate_name = cfg.crate_name.empty()
                      ? crate_name_for(fs::weakly_canonical(cfg.project_root).filename().string())
                      : cfg.crate_name;
  pc.templates = templates;
  auto r = run_pipeline(pre, std::move(plan), pc, *client);

  print(cfg.report_format == "json" ? r.coverage.to_json().dump(2) + "\n" : r.coverage.render_text());
  if (r.final_build_ok && !*r.final_build_ok) spdlog::error("cargo build of the finished crate failed");
  int aborted = r.aborted_units();
  if (aborted) spdlog::warn("{} of {} units aborted", aborted, r.plan.units.size());
  return aborted ? kAborted : kOk;
}

int cmd_report(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("no output directory given (--out)");
  if (cfg.report_format != "text" && cfg.report_format != "json")
    throw ConfigError("report format must be text or json, not " + cfg.report_format);
  lock_out_dir(cfg.out_dir);
  auto cov = coverage_from_outputs(cfg.out_dir);
  print(cfg.report_format == "json" ? cov.to_json().dump(2) + "\n" : cov.render_text());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Translate a C project to a Rust crate, one unit at a time, with an LLM."};
  app.require_subcommand(1);
  Flags f;

  auto* analyze = app.add_subcommand("analyze", "count files, lines and elements");
  add_common(analyze, f);
  analyze->add_option("--report-format", f.report_format, "text or json");

  auto* pre = app.add_subcommand("preprocess", "merge includes, extract features, reorder definitions");
  add_common(pre, f);

  auto* seg = app.add_subcommand("segment", "plan translation units");
  add_common(seg, f);
  add_plan(seg, f);

  auto* tr = app.add_subcommand("translate", "run the whole pipeline");
  add_common(tr, f);
  add_plan(tr, f);
  tr->add_option("--max-repair", f.max_repair, "repair attempts per unit");
  tr->add_option("--max-format-retries", f.max_format_retries, "unusable answers before giving up on a prompt");
  tr->add_option("--compile-timeout", f.compile_timeout, "seconds per cargo run");
  tr->add_option("--rules", f.rules, "rules profile, one rule per line");
  tr->add_option("--templates", f.templates, "directory with prompt templates to use instead of the built-in ones");
  tr->add_option("--record", f.record, "write every exchange to this transcript directory");
  tr->add_option("--crate-name", f.crate_name, "name of the generated crate");
  tr->add_option("--cargo", f.cargo, "cargo executable");
  tr->add_option("--report-format", f.report_format, "text or json");
  tr->add_flag("--force", f.force, "replace an existing <out>/rust");

  auto* rep = app.add_subcommand("report", "coverage and error histogram of a finished run");
  rep->add_option("--out", f.out, "output directory of the run")->required();
  rep->add_option("--report-format", f.report_format, "text or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_pattern("%l: %v");
  spdlog::set_level(f.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    auto cfg = resolve(f);
    if (*analyze) return cmd_analyze(cfg);
    if (*pre) return cmd_preprocess(cfg);
    if (*seg) return cmd_segment(cfg);
    if (*tr) return cmd_translate(cfg);
    if (*rep) return cmd_report(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
