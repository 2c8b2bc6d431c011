#include "seamstress/prompts.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "seamstress/default_templates.hpp"
#include "seamstress/error.hpp"
#include "seamstress/json_schema.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

namespace seamstress {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(PromptKind k) {
  switch (k) {
    case PromptKind::translate: return "translate";
    case PromptKind::repair: return "repair";
    case PromptKind::map: return "map";
    case PromptKind::select_files: return "select_files";
  }
  return "translate";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view s) {
  for (auto k : {PromptKind::translate, PromptKind::repair, PromptKind::map, PromptKind::select_files})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string PromptEnvelope::canonical() const {
  return "kind: " + std::string(to_string(kind)) + "\nunit: " + unit_id +
         "\nschema: " + response_schema_id + "\n\n" + text;
}

std::string PromptEnvelope::digest() const { return sha256_hex(canonical()); }

ordered_json PromptEnvelope::to_json() const {
  ordered_json j;
  j["kind"] = to_string(kind);
  j["unit_id"] = unit_id;
  j["response_schema_id"] = response_schema_id;
  j["est_tokens"] = est_tokens;
  j["projected_output_tokens"] = projected_output_tokens;
  j["system_rules"] = system_rules;
  j["body_sections"] = ordered_json::array();
  for (const auto& [label, body] : body_sections)
    j["body_sections"].push_back({{"label", label}, {"text", body}});
  j["text"] = text;
  j["digest"] = digest();
  return j;
}

PromptEnvelope PromptEnvelope::from_json(const json& j) {
  PromptEnvelope e;
  try {
    auto kind = parse_prompt_kind(j.at("kind").get<std::string>());
    if (!kind) throw FormatError("envelope: unknown kind");
    e.kind = *kind;
    e.unit_id = j.at("unit_id").get<std::string>();
    e.response_schema_id = j.at("response_schema_id").get<std::string>();
    e.est_tokens = j.at("est_tokens").get<std::size_t>();
    e.projected_output_tokens = j.value("projected_output_tokens", std::size_t{0});
    e.system_rules = j.value("system_rules", std::vector<std::string>{});
    if (j.contains("body_sections"))
      for (const auto& s : j.at("body_sections"))
        e.body_sections.emplace_back(s.at("label").get<std::string>(), s.at("text").get<std::string>());
    e.text = j.at("text").get<std::string>();
  } catch (const json::exception& ex) {
    throw FormatError(std::string("envelope: ") + ex.what());
  }
  return e;
}

std::size_t PromptBudget::available() const {
  auto used = reserved_output + memory_tokens;
  return used >= context_window ? 0 : context_window - used;
}

const std::vector<std::string> kMandatoryRules = {
    "Declare all elements as public (pub), including struct fields.",
    "Use wildcards to import all modules, for example `use crate::module::*;`.",
    "Avoid using unsafe whenever possible.",
};

namespace {

// Lowercased key phrase that identifies each mandatory rule.
const char* const kMandatoryKeys[] = {"declare all elements as public",
                                      "use wildcards to import all modules",
                                      "avoid using unsafe whenever possible"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string embedded(std::string_view file) {
  for (const auto& [name, text] : embedded_templates::files)
    if (name == file) return std::string(text);
  throw TemplateError("no built-in template " + std::string(file));
}

void require_slots(std::string_view name, const std::string& tmpl,
                   std::initializer_list<const char*> slots) {
  for (const char* s : slots)
    if (tmpl.find(std::string("{{") + s + "}}") == std::string::npos)
      throw TemplateError(std::string(name) + ": required slot {{" + s + "}} is missing");
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.translate = embedded("translate.tmpl");
  t.repair = embedded("repair.tmpl");
  t.map = embedded("map.tmpl");
  t.select_files = embedded("select_files.tmpl");
  t.format_retry = embedded("format_retry.tmpl");
  t.continue_response = embedded("continue.tmpl");
  t.rules = ensure_mandatory_rules(parse_rules(embedded("rules.txt")));
  return t;
}

PromptTemplates PromptTemplates::load(const std::optional<fs::path>& dir,
                                      const std::optional<fs::path>& rules_file) {
  auto t = defaults();
  if (dir) {
    auto take = [&](const char* file, std::string& slot) {
      auto p = *dir / file;
      if (fs::exists(p)) slot = read_file(p);
    };
    take("translate.tmpl", t.translate);
    take("repair.tmpl", t.repair);
    take("map.tmpl", t.map);
    take("select_files.tmpl", t.select_files);
    take("format_retry.tmpl", t.format_retry);
    take("continue.tmpl", t.continue_response);
    if (fs::exists(*dir / "rules.txt"))
      t.rules = ensure_mandatory_rules(parse_rules(read_file(*dir / "rules.txt")));
  }
  if (rules_file) {
    if (!fs::exists(*rules_file)) throw ConfigError("rules file not found: " + rules_file->string());
    t.rules = ensure_mandatory_rules(parse_rules(read_file(*rules_file)));
  }
  t.validate();
  return t;
}

void PromptTemplates::validate() const {
  require_slots("translate.tmpl", translate, {"rules", "code"});
  require_slots("repair.tmpl", repair, {"log", "code", "file"});
  require_slots("map.tmpl", map, {"elements", "c_code", "rust_code"});
  require_slots("select_files.tmpl", select_files, {"log", "candidates"});
  require_slots("format_retry.tmpl", format_retry, {"error"});
  // Rendering with every slot empty catches syntax problems up front.
  auto probe = [](std::string_view name, const std::string& tmpl,
                  std::initializer_list<const char*> slots) {
    std::map<std::string, std::string> empty;
    for (const char* s : slots) empty[s] = "";
    render_template(tmpl, empty, name);
  };
  probe("translate.tmpl", translate, {"rules", "context", "code", "unit_id"});
  probe("repair.tmpl", repair, {"rules", "log", "context", "file", "code", "unit_id"});
  probe("map.tmpl", map, {"elements", "c_code", "rust_code", "unit_id"});
  probe("select_files.tmpl", select_files, {"log", "candidates", "unit_id"});
  probe("format_retry.tmpl", format_retry, {"error", "chunks"});
  probe("continue.tmpl", continue_response, {});
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots,
                            std::string_view template_name) {
  std::string out;
  // Open conditional sections: name and whether their content is kept.
  std::vector<std::pair<std::string, bool>> open;
  auto emitting = [&] {
    return std::all_of(open.begin(), open.end(), [](const auto& o) { return o.second; });
  };
  auto fail = [&](const std::string& why) {
    throw TemplateError(std::string(template_name) + ": " + why);
  };
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto b = tmpl.find("{{", i);
    if (b == std::string_view::npos) {
      if (emitting()) out.append(tmpl.substr(i));
      break;
    }
    if (emitting()) out.append(tmpl.substr(i, b - i));
    auto e = tmpl.find("}}", b + 2);
    if (e == std::string_view::npos) fail("unterminated '{{'");
    std::string tag(trim(tmpl.substr(b + 2, e - b - 2)));
    i = e + 2;
    if (tag.empty()) fail("empty tag");
    char sigil = tag[0];
    std::string name = (sigil == '?' || sigil == '/') ? std::string(trim(tag.substr(1))) : tag;
    auto it = slots.find(name);
    if (it == slots.end()) fail("unknown slot {{" + tag + "}}");
    if (sigil == '?') {
      open.emplace_back(name, !it->second.empty());
      // A section tag alone on its line takes the newline with it.
      if (i < tmpl.size() && tmpl[i] == '\n' && (b == 0 || tmpl[b - 1] == '\n')) ++i;
    } else if (sigil == '/') {
      if (open.empty() || open.back().first != name) fail("unbalanced {{/" + name + "}}");
      open.pop_back();
      if (i < tmpl.size() && tmpl[i] == '\n' && (b == 0 || tmpl[b - 1] == '\n')) ++i;
    } else if (emitting()) {
      out += it->second;
    }
  }
  if (!open.empty()) fail("section {{?" + open.back().first + "}} is never closed");
  return out;
}

std::vector<std::string> parse_rules(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& l : split_lines(text)) {
    auto t = trim(l);
    if (t.empty() || t[0] == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

std::vector<std::string> ensure_mandatory_rules(std::vector<std::string> rules) {
  std::vector<std::string> missing;
  for (std::size_t k = 0; k < kMandatoryRules.size(); ++k) {
    bool have = std::any_of(rules.begin(), rules.end(), [&](const std::string& r) {
      return lower(r).find(kMandatoryKeys[k]) != std::string::npos;
    });
    if (!have) missing.push_back(kMandatoryRules[k]);
  }
  rules.insert(rules.begin(), missing.begin(), missing.end());
  return rules;
}

std::string render_rules(const std::vector<std::string>& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i)
    out += std::to_string(i + 1) + ". " + rules[i] + "\n";
  return out;
}

bool rules_complete(std::string_view rendered) {
  auto l = lower(rendered);
  for (const char* k : kMandatoryKeys)
    if (l.find(k) == std::string::npos) return false;
  return true;
}

std::size_t projected_output_tokens(std::size_t c_tokens) { return (c_tokens * 6 + 4) / 5; }

namespace {

std::string strip_final_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

[[noreturn]] void budget_exceeded(const std::string& unit_id, std::size_t est, std::size_t budget) {
  throw BudgetExceeded(unit_id + ": prompt needs ~" + std::to_string(est) +
                       " tokens, budget is " + std::to_string(budget));
}

}  // namespace

PromptEnvelope build_translation_prompt(const TranslationUnit& unit, const ContextBundle& context,
                                        const PromptTemplates& templates,
                                        const PromptBudget& budget) {
  PromptEnvelope env;
  env.kind = PromptKind::translate;
  env.unit_id = unit.id();
  env.system_rules = templates.rules;
  env.response_schema_id = "translate_response";
  auto ctx = strip_final_newline(context.render());
  auto code = strip_final_newline(unit.text);
  if (!ctx.empty()) env.body_sections.emplace_back("context", ctx);
  env.body_sections.emplace_back("code", code);
  env.text = render_template(templates.translate,
                             {{"rules", strip_final_newline(render_rules(templates.rules))},
                              {"context", ctx},
                              {"code", code},
                              {"unit_id", env.unit_id}},
                             "translate.tmpl");
  env.est_tokens = estimate_tokens(env.text);
  env.projected_output_tokens = projected_output_tokens(estimate_tokens(unit.text));
  auto need = env.est_tokens + env.projected_output_tokens;
  if (need > budget.available()) budget_exceeded(env.unit_id, need, budget.available());
  return env;
}

std::optional<std::string> tail_truncate(std::string_view log, std::size_t max_tokens) {
  if (estimate_tokens(log) <= max_tokens) return std::string(log);
  auto lines = split_lines(log);
  auto with_tail = [&](std::size_t keep) {
    std::vector<std::string> tail(lines.end() - static_cast<std::ptrdiff_t>(keep), lines.end());
    std::string s = "[... " + std::to_string(lines.size() - keep) +
                    " earlier lines of the compiler log truncated ...]\n";
    return s + join_lines(tail);
  };
  if (estimate_tokens(with_tail(0)) > max_tokens) return std::nullopt;
  // Largest tail that fits; the estimate is monotone in the kept lines.
  std::size_t lo = 0, hi = lines.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo + 1) / 2;
    if (estimate_tokens(with_tail(mid)) <= max_tokens) lo = mid;
    else hi = mid - 1;
  }
  return with_tail(lo);
}

std::string number_lines(std::string_view text) {
  auto lines = split_lines(text);
  auto width = std::to_string(std::max<std::size_t>(lines.size(), 1)).size();
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto n = std::to_string(i + 1);
    out += std::string(width - n.size(), ' ') + n + " | " + lines[i] + "\n";
  }
  return out;
}

namespace {

// Renders with the log slot shrunk until the prompt fits the budget.
std::string render_with_log(const std::string& unit_id, std::string_view tmpl,
                            std::string_view tmpl_name, std::map<std::string, std::string> slots,
                            std::string_view error_log, const PromptBudget& budget,
                            std::string& used_log) {
  auto full_log = strip_final_newline(std::string(error_log));
  slots["log"] = full_log;
  auto text = render_template(tmpl, slots, tmpl_name);
  if (estimate_tokens(text) <= budget.available()) {
    used_log = full_log;
    return text;
  }
  slots["log"] = "";
  auto base = estimate_tokens(render_template(tmpl, slots, tmpl_name));
  if (base >= budget.available()) budget_exceeded(unit_id, base, budget.available());
  // estimate_tokens is subadditive, so base + log <= available keeps the
  // whole prompt within budget.
  auto log = tail_truncate(error_log, budget.available() - base);
  if (!log) budget_exceeded(unit_id, base + estimate_tokens(error_log), budget.available());
  used_log = strip_final_newline(*log);
  slots["log"] = used_log;
  text = render_template(tmpl, slots, tmpl_name);
  if (estimate_tokens(text) > budget.available())
    budget_exceeded(unit_id, estimate_tokens(text), budget.available());
  return text;
}

}  // namespace

PromptEnvelope build_repair_prompt(const std::string& unit_id, std::string_view error_log,
                                   const SourceFile& target, const ContextBundle& rust_context,
                                   const PromptTemplates& templates, const PromptBudget& budget) {
  if (trim(error_log).empty()) throw std::invalid_argument("repair prompt needs a compiler log");
  for (const auto& it : rust_context.items)
    if (!it.rust) throw std::invalid_argument("repair context must be Rust-only");
  PromptEnvelope env;
  env.kind = PromptKind::repair;
  env.unit_id = unit_id;
  env.system_rules = templates.rules;
  env.response_schema_id = "repair_response";
  auto ctx = strip_final_newline(rust_context.render());
  auto code = strip_final_newline(number_lines(target.text));
  std::string used_log;
  env.text = render_with_log(unit_id, templates.repair, "repair.tmpl",
                             {{"rules", strip_final_newline(render_rules(templates.rules))},
                              {"context", ctx},
                              {"file", target.path},
                              {"code", code},
                              {"unit_id", unit_id}},
                             error_log, budget, used_log);
  env.body_sections.emplace_back("log", used_log);
  if (!ctx.empty()) env.body_sections.emplace_back("context", ctx);
  env.body_sections.emplace_back("file", target.path);
  env.body_sections.emplace_back("code", code);
  env.est_tokens = estimate_tokens(env.text);
  return env;
}

PromptEnvelope build_mapping_prompt(const UnitMetadata& unit, std::string_view c_text,
                                    const std::vector<SourceFile>& rust_files,
                                    const PromptTemplates& templates) {
  PromptEnvelope env;
  env.kind = PromptKind::map;
  env.unit_id = unit.unit_id;
  env.response_schema_id = "map_response";
  std::string elements;
  for (const auto& e : unit.elements) {
    if (e.is_declaration || e.name.empty()) continue;
    elements += "- " + e.name + " (" + std::string(to_string(e.kind)) + ")\n";
  }
  if (elements.empty()) elements = "(none)\n";
  std::string rust;
  for (const auto& f : rust_files)
    rust += "### " + f.path + "\n```rust\n" + strip_final_newline(f.text) + "\n```\n";
  env.body_sections.emplace_back("elements", strip_final_newline(elements));
  env.body_sections.emplace_back("c_code", strip_final_newline(std::string(c_text)));
  env.body_sections.emplace_back("rust_code", strip_final_newline(rust));
  env.text = render_template(templates.map,
                             {{"elements", strip_final_newline(elements)},
                              {"c_code", strip_final_newline(std::string(c_text))},
                              {"rust_code", strip_final_newline(rust)},
                              {"unit_id", unit.unit_id}},
                             "map.tmpl");
  env.est_tokens = estimate_tokens(env.text);
  return env;
}

PromptEnvelope build_select_files_prompt(const std::string& unit_id, std::string_view error_log,
                                         const std::vector<std::string>& candidates,
                                         const PromptTemplates& templates,
                                         const PromptBudget& budget) {
  if (trim(error_log).empty()) throw std::invalid_argument("file selection needs a compiler log");
  PromptEnvelope env;
  env.kind = PromptKind::select_files;
  env.unit_id = unit_id;
  env.response_schema_id = "select_files_response";
  std::string list;
  for (const auto& c : candidates) list += "- " + c + "\n";
  list = strip_final_newline(list);
  std::string used_log;
  env.text = render_with_log(unit_id, templates.select_files, "select_files.tmpl",
                             {{"candidates", list}, {"unit_id", unit_id}}, error_log, budget,
                             used_log);
  env.body_sections.emplace_back("log", used_log);
  env.body_sections.emplace_back("candidates", list);
  env.est_tokens = estimate_tokens(env.text);
  return env;
}

std::string format_retry_message(const PromptTemplates& templates, std::string_view error,
                                 bool ask_for_chunks) {
  return render_template(templates.format_retry,
                         {{"error", std::string(error)}, {"chunks", ask_for_chunks ? "yes" : ""}},
                         "format_retry.tmpl");
}

namespace {

std::string_view strip_fence(std::string_view text) {
  auto t = trim(text);
  if (t.substr(0, 3) != "```") return text;
  auto nl = t.find('\n');
  if (nl == std::string_view::npos) return text;
  t = t.substr(nl + 1);
  auto end = t.rfind("```");
  if (end != std::string_view::npos && trim(t.substr(end + 3)).empty()) t = t.substr(0, end);
  return t;
}

}  // namespace

DecodeResult decode_json(std::string_view text) {
  auto body = strip_fence(text);
  DecodeResult r;
  try {
    r.doc = json::parse(body);
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    r.message = msg;
    if (msg.find("after backslash") != std::string::npos ||
        msg.find("'\\u'") != std::string::npos || msg.find("surrogate") != std::string::npos ||
        msg.find("must be escaped") != std::string::npos) {
      r.status = DecodeStatus::invalid_escape;
      r.message = "invalid escape: " + msg;
    } else if (e.byte >= body.size() ||
               msg.find("unexpected end of input") != std::string::npos) {
      r.status = DecodeStatus::incomplete;
      r.message = "incomplete JSON: " + msg;
    } else {
      r.status = DecodeStatus::syntax;
    }
  }
  return r;
}

std::string join_parts(const std::vector<LlmResponsePart>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].part_index != static_cast<int>(i) + 1)
      throw FormatError("response part " + std::to_string(parts[i].part_index) +
                        " arrived out of order");
    out += parts[i].payload;
  }
  return out;
}

json assemble_multipart(const std::vector<LlmResponsePart>& parts, std::string_view schema_id) {
  if (parts.empty()) throw FormatError("empty response");
  auto r = decode_json(join_parts(parts));
  if (r.status != DecodeStatus::ok) throw FormatError(r.message);
  require_valid(r.doc, schema_id);
  return r.doc;
}

}  // namespace seamstress
