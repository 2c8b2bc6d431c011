#include "seamstress/diagnostics.hpp"

#include <algorithm>
#include <cstdlib>
#include <json.hpp>
#include <set>
#include <system_error>
#include <unordered_map>

#include "seamstress/error.hpp"
#include "seamstress/process.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

using nlohmann::json;

namespace {

constexpr std::pair<ErrorCategory, std::string_view> kNames[] = {
    {ErrorCategory::syntax, "Syntax"},         {ErrorCategory::generics, "Generics"},
    {ErrorCategory::lifetime, "Lifetime"},     {ErrorCategory::modules, "Modules"},
    {ErrorCategory::constants, "Constants"},   {ErrorCategory::attributes, "Attributes"},
    {ErrorCategory::type, "Type"},             {ErrorCategory::traits, "Traits"},
    {ErrorCategory::ownership, "Ownership"},   {ErrorCategory::name_resolution, "Name Resolution"},
};

struct CodeRow {
  ErrorCategory category;
  const char* codes;  // space separated
};

// rustc error index, grouped by what usually goes wrong in translated code.
const CodeRow kTable[] = {
    {ErrorCategory::syntax,
     "E0178 E0267 E0268 E0571 E0584 E0585 E0586 E0590 E0670 E0695 E0748 E0758 E0762 E0763 E0765 "
     "E0766 E0768"},
    {ErrorCategory::generics,
     "E0044 E0049 E0091 E0107 E0109 E0128 E0131 E0132 E0207 E0229 E0392 E0393 E0401 E0403 E0747 "
     "E0770 E0771 E0794"},
    {ErrorCategory::lifetime,
     "E0106 E0261 E0262 E0263 E0309 E0310 E0478 E0491 E0495 E0496 E0515 E0521 E0581 E0582 E0597 "
     "E0621 E0623 E0637 E0700 E0712 E0713 E0716 E0726 E0759"},
    {ErrorCategory::modules,
     "E0252 E0254 E0255 E0259 E0260 E0364 E0365 E0429 E0430 E0431 E0432 E0433 E0445 E0446 E0451 "
     "E0463 E0468 E0469 E0583 E0603 E0616 E0624 E0742 E0761"},
    {ErrorCategory::constants,
     "E0010 E0013 E0015 E0017 E0019 E0030 E0080 E0158 E0379 E0435 E0492 E0493 E0744 E0764"},
    {ErrorCategory::attributes,
     "E0084 E0230 E0231 E0232 E0452 E0455 E0458 E0459 E0466 E0517 E0518 E0522 E0536 E0537 E0538 "
     "E0539 E0541 E0552 E0554 E0556 E0557 E0565 E0566 E0587 E0588 E0589 E0658 E0692 E0734 E0736 "
     "E0739 E0774 E0777 E0778 E0779"},
    {ErrorCategory::type,
     "E0005 E0023 E0026 E0027 E0029 E0054 E0057 E0059 E0060 E0061 E0062 E0063 E0067 E0069 E0070 "
     "E0164 E0282 E0308 E0391 E0559 E0560 E0604 E0605 E0606 E0607 E0609 E0610 E0614 E0618 E0620 "
     "E0689"},
    {ErrorCategory::traits,
     "E0038 E0046 E0053 E0117 E0119 E0120 E0184 E0185 E0186 E0191 E0199 E0200 E0204 E0206 E0220 "
     "E0221 E0223 E0225 E0277 E0283 E0323 E0324 E0325 E0368 E0369 E0404 E0407 E0562 E0600 E0608 "
     "E0746"},
    {ErrorCategory::ownership,
     "E0133 E0373 E0381 E0382 E0384 E0499 E0500 E0501 E0502 E0503 E0504 E0505 E0506 E0507 E0508 "
     "E0509 E0510 E0524 E0594 E0596 E0626"},
    {ErrorCategory::name_resolution,
     "E0124 E0405 E0408 E0411 E0412 E0415 E0416 E0422 E0423 E0424 E0425 E0426 E0428 E0434 E0530 "
     "E0531 E0532 E0574 E0575 E0576 E0592 E0599 E0769"},
};

const std::unordered_map<std::string, ErrorCategory>& code_table() {
  static const auto table = [] {
    std::unordered_map<std::string, ErrorCategory> m;
    for (const auto& row : kTable) {
      std::string_view codes = row.codes;
      std::size_t pos = 0;
      while (pos < codes.size()) {
        auto sp = codes.find(' ', pos);
        auto code = codes.substr(pos, sp == std::string_view::npos ? std::string_view::npos : sp - pos);
        if (!code.empty()) m.emplace(std::string(code), row.category);
        if (sp == std::string_view::npos) break;
        pos = sp + 1;
      }
    }
    return m;
  }();
  return table;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

bool contains(std::string_view s, std::string_view p) { return s.find(p) != std::string_view::npos; }

bool reads_like_parse_error(std::string_view m) {
  for (auto p : {"expected ", "unexpected ", "unclosed delimiter", "mismatched closing delimiter",
                 "this file contains an unclosed delimiter", "unknown start of token", "unterminated ",
                 "missing ", "found ", "invalid ", "incorrect ", "no rules expected", "unmatched "})
    if (starts_with(m, p)) return true;
  return false;
}

}  // namespace

std::string_view to_string(ErrorCategory c) {
  for (const auto& [k, v] : kNames)
    if (k == c) return v;
  return "?";
}

std::optional<ErrorCategory> parse_error_category(std::string_view s) {
  for (const auto& [k, v] : kNames)
    if (v == s) return k;
  return std::nullopt;
}

Classification classify_error(std::string_view code, std::string_view message) {
  if (!code.empty()) {
    auto it = code_table().find(std::string(code));
    if (it != code_table().end()) return {it->second, true};
  } else {
    if (starts_with(message, "cannot find attribute") || starts_with(message, "malformed ") ||
        contains(message, "attribute"))
      return {ErrorCategory::attributes, true};
    if (starts_with(message, "cannot find macro") || starts_with(message, "cannot find derive macro"))
      return {ErrorCategory::name_resolution, true};
    if (reads_like_parse_error(message)) return {ErrorCategory::syntax, true};
    if (contains(message, "lifetime")) return {ErrorCategory::lifetime, true};
    if (contains(message, "borrow")) return {ErrorCategory::ownership, true};
  }
  return {reads_like_parse_error(message) ? ErrorCategory::syntax : ErrorCategory::type, false};
}

std::vector<const Diagnostic*> CompileReport::errors() const {
  std::vector<const Diagnostic*> out;
  for (const auto& d : diagnostics)
    if (d.is_error()) out.push_back(&d);
  return out;
}

std::string CompileReport::error_log() const {
  std::string out;
  for (const auto* d : errors()) out += d->rendered.empty() ? d->message + "\n" : d->rendered;
  bool has_rendered = std::any_of(diagnostics.begin(), diagnostics.end(),
                                  [](const Diagnostic& d) { return d.is_error() && !d.rendered.empty(); });
  return has_rendered ? out : raw_log;
}

std::vector<std::string> CompileReport::error_files() const {
  std::vector<std::string> out;
  for (const auto* d : errors())
    if (!d->file.empty() && std::find(out.begin(), out.end(), d->file) == out.end()) out.push_back(d->file);
  return out;
}

CompileReport parse_cargo_output(std::string_view json_lines, std::string_view stderr_text, int exit_code) {
  CompileReport r;
  std::set<std::string> unmapped;
  for (const auto& line : split_lines(json_lines)) {
    if (trim(line).empty() || line[0] != '{') continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || j.value("reason", "") != "compiler-message") continue;
    const auto& m = j["message"];
    Diagnostic d;
    d.level = m.value("level", "");
    d.message = m.value("message", "");
    if (d.level == "error" && (starts_with(d.message, "aborting due to") || starts_with(d.message, "could not compile")))
      continue;
    if (d.level != "error" && d.level != "warning") continue;
    if (m.contains("code") && m["code"].is_object()) d.code = m["code"].value("code", "");
    if (m.contains("rendered") && m["rendered"].is_string()) d.rendered = m["rendered"].get<std::string>();
    if (m.contains("spans"))
      for (const auto& s : m["spans"])
        if (s.value("is_primary", false)) {
          d.file = s.value("file_name", "");
          d.line = s.value("line_start", 0);
          break;
        }
    if (d.is_error()) {
      auto c = classify_error(d.code, d.message);
      d.category = c.category;
      if (!c.from_table) unmapped.insert(d.code.empty() ? d.message : d.code);
    }
    r.raw_log += d.rendered;
    r.diagnostics.push_back(std::move(d));
  }
  r.raw_log += stderr_text;
  bool any_error = std::any_of(r.diagnostics.begin(), r.diagnostics.end(),
                               [](const Diagnostic& d) { return d.is_error(); });
  if (exit_code != 0 && !any_error) {
    // cargo itself failed: bad manifest, unknown dependency, build script.
    Diagnostic d;
    d.level = "error";
    d.file = "Cargo.toml";
    d.category = ErrorCategory::modules;
    for (const auto& l : split_lines(stderr_text))
      if (starts_with(trim(l), "error")) {
        d.message = std::string(trim(l));
        break;
      }
    if (d.message.empty()) d.message = "cargo exited with status " + std::to_string(exit_code);
    r.diagnostics.push_back(std::move(d));
    any_error = true;
  }
  r.success = !any_error;
  r.unmapped_codes.assign(unmapped.begin(), unmapped.end());
  return r;
}

std::map<ErrorCategory, int> category_histogram(const std::vector<Diagnostic>& diagnostics) {
  std::map<ErrorCategory, int> h;
  for (auto c : kErrorCategories) h[c] = 0;
  for (const auto& d : diagnostics)
    if (d.is_error()) ++h[d.category];
  return h;
}

fs::path locate_cargo(const std::optional<fs::path>& configured) {
  if (configured) {
    if (auto p = find_executable(configured->string())) return *p;
    throw ToolchainMissing("cargo not found at " + configured->string());
  }
  std::vector<fs::path> extra;
  if (const char* home = std::getenv("CARGO_HOME")) extra.push_back(fs::path(home) / "bin");
  if (const char* home = std::getenv("HOME")) extra.push_back(fs::path(home) / ".cargo" / "bin");
  if (auto p = find_executable("cargo", extra)) return *p;
  throw ToolchainMissing("cargo not found in PATH; install a Rust toolchain or set cargo in seamstress.toml");
}

CompileReport compile_workspace(const Workspace& ws, const CompileOptions& options) {
  auto cargo = locate_cargo(options.cargo);
  auto target = options.target_dir ? *options.target_dir : ws.root.parent_path() / "target";
  ProcessOptions po;
  po.cwd = ws.root;
  po.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(options.timeout);
  po.env = {{"CARGO_TERM_COLOR", "never"}, {"CARGO_TARGET_DIR", target.string()}};
  std::vector<std::string> argv = {cargo.string(), options.full_build ? "build" : "check",
                                   "--message-format=json", "--quiet", "--offline"};
  ProcessResult res;
  try {
    res = run_process(argv, po);
  } catch (const std::system_error& e) {
    throw ToolchainMissing("cannot run " + cargo.string() + ": " + e.what());
  }
  if (res.timed_out)
    throw CompileTimeout("cargo " + argv[1] + " in " + ws.root.string() + " exceeded " +
                         std::to_string(options.timeout.count()) + " s");
  auto report = parse_cargo_output(res.out, res.err, res.exit_code);
  report.duration = res.duration;
  return report;
}

}  // namespace seamstress
