#include "seamstress/metadata.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

namespace seamstress {

using nlohmann::json;

std::string_view to_string(RustKind k) {
  switch (k) {
    case RustKind::function: return "function";
    case RustKind::macro_function: return "macro_function";
    case RustKind::struct_or_enum: return "struct_or_enum";
    case RustKind::macro_variable: return "macro_variable";
    case RustKind::static_or_constant: return "static_or_constant";
    case RustKind::other: return "other";
  }
  return "other";
}

std::optional<RustKind> parse_rust_kind(std::string_view s) {
  for (auto k : {RustKind::function, RustKind::macro_function, RustKind::struct_or_enum,
                 RustKind::macro_variable, RustKind::static_or_constant, RustKind::other})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(MappingConfidence c) {
  return c == MappingConfidence::llm ? "llm" : "exact-name";
}

const ElementRecord* UnitMetadata::element(std::string_view name) const {
  for (const auto& e : elements)
    if (e.name == name && !e.is_declaration) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Store

const UnitMetadata* MetadataStore::unit(std::string_view unit_id) const {
  for (const auto& u : units)
    if (u.unit_id == unit_id) return &u;
  return nullptr;
}

void MetadataStore::put_unit(UnitMetadata meta) {
  for (auto& u : units)
    if (u.unit_id == meta.unit_id) {
      u = std::move(meta);
      return;
    }
  units.push_back(std::move(meta));
}

void MetadataStore::put_rust_elements(const std::string& file,
                                      std::vector<RustElementRecord> records) {
  std::erase_if(rust_elements, [&](const RustElementRecord& r) { return r.file == file; });
  for (auto& r : records) rust_elements.push_back(std::move(r));
}

const MappingEntry* MetadataStore::mapping_for(std::string_view c_name,
                                               std::string_view c_unit) const {
  for (const auto& m : mappings)
    if (m.c_name == c_name && m.c_unit == c_unit) return &m;
  return nullptr;
}

const RustElementRecord* MetadataStore::rust_element(std::string_view name,
                                                     std::string_view file) const {
  for (const auto& r : rust_elements)
    if (r.name == name && r.file == file) return &r;
  return nullptr;
}

bool MetadataStore::is_tombstoned(std::string_view c_name, std::string_view c_unit) const {
  return std::any_of(tombstones.begin(), tombstones.end(), [&](const Tombstone& t) {
    return t.c_name == c_name && t.c_unit == c_unit;
  });
}

namespace {

// Known keys are written from the struct; anything else round-trips via
// `extra`.
json with_extra(json j, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it)
    if (!j.contains(it.key())) j[it.key()] = it.value();
  return j;
}

json take_extra(const json& j, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool k = std::any_of(known.begin(), known.end(),
                         [&](const char* n) { return it.key() == n; });
    if (!k) extra[it.key()] = it.value();
  }
  return extra;
}

json element_json(const ElementRecord& e) {
  return with_extra({{"kind", to_string(e.kind)},
                     {"name", e.name},
                     {"signature_or_definition", e.signature_or_definition},
                     {"start_line", e.start_line},
                     {"end_line", e.end_line},
                     {"is_static", e.is_static},
                     {"is_declaration", e.is_declaration}},
                    e.extra);
}

ElementRecord element_from(const json& j) {
  ElementRecord e;
  auto kind = parse_element_kind(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("metadata: unknown element kind");
  e.kind = *kind;
  e.name = j.at("name").get<std::string>();
  e.signature_or_definition = j.at("signature_or_definition").get<std::string>();
  e.start_line = j.at("start_line").get<int>();
  e.end_line = j.at("end_line").get<int>();
  e.is_static = j.value("is_static", false);
  e.is_declaration = j.value("is_declaration", false);
  e.extra = take_extra(j, {"kind", "name", "signature_or_definition", "start_line", "end_line",
                           "is_static", "is_declaration"});
  return e;
}

}  // namespace

std::string MetadataStore::to_json() const {
  json j = json::object();
  j["schema"] = schema;
  j["units"] = json::array();
  for (const auto& u : units) {
    json ju = {{"unit_id", u.unit_id}, {"module", u.module}, {"imports_needed", u.imports_needed}};
    ju["elements"] = json::array();
    for (const auto& e : u.elements) ju["elements"].push_back(element_json(e));
    j["units"].push_back(with_extra(ju, u.extra));
  }
  j["rust_elements"] = json::array();
  for (const auto& r : rust_elements)
    j["rust_elements"].push_back(with_extra({{"kind", to_string(r.kind)},
                                             {"name", r.name},
                                             {"signature", r.signature},
                                             {"file", r.file},
                                             {"unit_id", r.unit_id}},
                                            r.extra));
  j["mappings"] = json::array();
  for (const auto& m : mappings)
    j["mappings"].push_back(with_extra({{"c_name", m.c_name},
                                        {"c_unit", m.c_unit},
                                        {"rust_name", m.rust_name},
                                        {"rust_file", m.rust_file},
                                        {"confidence", to_string(m.confidence)},
                                        {"note", m.note}},
                                       m.extra));
  j["tombstones"] = json::array();
  for (const auto& t : tombstones)
    j["tombstones"].push_back(
        with_extra({{"c_name", t.c_name}, {"c_unit", t.c_unit}, {"note", t.note}}, t.extra));
  return with_extra(j, extra).dump(2) + "\n";
}

MetadataStore MetadataStore::from_json(std::string_view text) {
  MetadataStore s;
  try {
    json j = json::parse(text);
    s.schema = j.at("schema").get<int>();
    if (s.schema != kMetadataSchema)
      throw FormatError("metadata: unsupported schema " + std::to_string(s.schema));
    for (const auto& ju : j.at("units")) {
      UnitMetadata u;
      u.unit_id = ju.at("unit_id").get<std::string>();
      u.module = ju.value("module", "");
      u.imports_needed = ju.at("imports_needed").get<std::vector<std::string>>();
      for (const auto& je : ju.at("elements")) u.elements.push_back(element_from(je));
      u.extra = take_extra(ju, {"unit_id", "module", "imports_needed", "elements"});
      s.units.push_back(std::move(u));
    }
    for (const auto& jr : j.at("rust_elements")) {
      RustElementRecord r;
      auto k = parse_rust_kind(jr.at("kind").get<std::string>());
      if (!k) throw FormatError("metadata: unknown rust kind");
      r.kind = *k;
      r.name = jr.at("name").get<std::string>();
      r.signature = jr.at("signature").get<std::string>();
      r.file = jr.at("file").get<std::string>();
      r.unit_id = jr.value("unit_id", "");
      r.extra = take_extra(jr, {"kind", "name", "signature", "file", "unit_id"});
      s.rust_elements.push_back(std::move(r));
    }
    for (const auto& jm : j.at("mappings")) {
      MappingEntry m;
      m.c_name = jm.at("c_name").get<std::string>();
      m.c_unit = jm.at("c_unit").get<std::string>();
      m.rust_name = jm.at("rust_name").get<std::string>();
      m.rust_file = jm.at("rust_file").get<std::string>();
      auto c = jm.at("confidence").get<std::string>();
      if (c != "llm" && c != "exact-name") throw FormatError("metadata: unknown confidence " + c);
      m.confidence = c == "llm" ? MappingConfidence::llm : MappingConfidence::exact_name;
      m.note = jm.value("note", "");
      m.extra = take_extra(jm, {"c_name", "c_unit", "rust_name", "rust_file", "confidence", "note"});
      s.mappings.push_back(std::move(m));
    }
    for (const auto& jt : j.at("tombstones")) {
      Tombstone t;
      t.c_name = jt.at("c_name").get<std::string>();
      t.c_unit = jt.at("c_unit").get<std::string>();
      t.note = jt.value("note", "");
      t.extra = take_extra(jt, {"c_name", "c_unit", "note"});
      s.tombstones.push_back(std::move(t));
    }
    s.extra = take_extra(j, {"schema", "units", "rust_elements", "mappings", "tombstones"});
  } catch (const json::exception& e) {
    throw FormatError(std::string("metadata: ") + e.what());
  }
  return s;
}

void MetadataStore::save(const fs::path& path) const { write_file_atomic(path, to_json()); }

MetadataStore MetadataStore::load(const fs::path& path) { return from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Index and unit metadata

std::vector<const ProjectIndex::Definition*> ProjectIndex::visible(std::string_view name,
                                                                   std::string_view module) const {
  std::vector<const Definition*> out;
  auto it = by_name.find(std::string(name));
  if (it == by_name.end()) return out;
  for (const auto& d : it->second)
    if (!d.is_static || d.module == module) out.push_back(&d);
  return out;
}

ProjectIndex build_project_index(const SegmentPlan& plan, std::span<const ModuleSource> modules) {
  std::unordered_map<std::string, const TranslationUnit*> unit_of;
  for (const auto& u : plan.units)
    for (const auto& id : u.element_ids) unit_of[id] = &u;
  ProjectIndex idx;
  for (const auto& m : modules) {
    for (const auto& e : m.elements()) {
      if (e.is_declaration) continue;
      auto u = unit_of.find(e.id());
      if (u == unit_of.end()) continue;
      ProjectIndex::Definition d{u->second->id(), m.name, e.id(), e.kind, e.is_static};
      if (!e.name.empty()) idx.by_name[e.name].push_back(d);
      for (const auto& a : e.aliases) idx.by_name[a].push_back(d);
    }
  }
  return idx;
}

std::string summarize_element(const CodeElement& e, const std::vector<std::string>& lines) {
  std::string full = span_text(lines, e.start_line, e.end_line);
  while (!full.empty() && full.back() == '\n') full.pop_back();
  if (e.kind == ElementKind::function && !e.is_declaration) return element_signature(e, lines);
  if (e.kind != ElementKind::variable) return full;
  // Variables: keep the declarator, drop the initializer.
  auto lex = lex_c(full);
  int depth = 0;
  for (const auto& t : lex.tokens) {
    if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
    if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
    if (depth == 0 && t.text == "=" && t.directive < 0)
      return std::string(trim(std::string_view(full).substr(0, t.offset))) + ";";
  }
  return full;
}

UnitMetadata emit_unit_metadata(const TranslationUnit& unit, const ModuleSource& module,
                                const ProjectIndex& index) {
  UnitMetadata meta;
  meta.unit_id = unit.id();
  meta.module = module.name;
  std::set<std::string> in_unit(unit.element_ids.begin(), unit.element_ids.end());
  std::set<std::string> local;
  for (const auto& e : module.elements()) {
    if (!in_unit.count(e.id())) continue;
    ElementRecord r;
    r.kind = e.kind;
    r.name = e.name;
    r.signature_or_definition = summarize_element(e, module.scan.lines);
    r.start_line = e.start_line;
    r.end_line = e.end_line;
    r.is_static = e.is_static;
    r.is_declaration = e.is_declaration;
    meta.elements.push_back(std::move(r));
    if (!e.is_declaration) {
      local.insert(e.name);
      local.insert(e.aliases.begin(), e.aliases.end());
    }
  }

  const auto& lex = module.scan.lex;
  std::set<std::string> needed;
  for (std::size_t i = 0; i < lex.tokens.size(); ++i) {
    const Token& t = lex.tokens[i];
    if (t.line < unit.start_line || t.line > unit.end_line) continue;
    if (t.kind != TokenKind::identifier) continue;
    if (i > 0 && (lex.tokens[i - 1].text == "." || lex.tokens[i - 1].text == "->")) continue;
    std::string id(t.text);
    if (local.count(id)) continue;
    for (const auto* d : index.visible(id, module.name))
      if (d->unit_id != meta.unit_id) needed.insert(id);
  }
  meta.imports_needed.assign(needed.begin(), needed.end());
  return meta;
}

// ---------------------------------------------------------------------------
// Rust item scanner

namespace {

enum class RTok { ident, literal, lifetime, punct };

struct RToken {
  RTok kind;
  std::string_view text;
  std::size_t offset;
};

std::vector<RToken> lex_rust(std::string_view s, const std::string& file) {
  std::vector<RToken> out;
  std::size_t i = 0, n = s.size();
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  auto push = [&](RTok k, std::size_t b, std::size_t e) {
    out.push_back({k, s.substr(b, e - b), b});
  };
  auto raw_string = [&](std::size_t b, std::size_t quote_hashes_start) {
    std::size_t j = quote_hashes_start, hashes = 0;
    while (j < n && s[j] == '#') ++hashes, ++j;
    if (j >= n || s[j] != '"') return std::string_view::npos;
    ++j;
    std::string close = "\"" + std::string(hashes, '#');
    auto end = s.find(close, j);
    if (end == std::string_view::npos) throw ScanFailure(file + ": unterminated raw string");
    push(RTok::literal, b, end + close.size());
    return end + close.size();
  };
  while (i < n) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '/') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      int depth = 0;
      do {
        if (s.compare(i, 2, "/*") == 0) ++depth, i += 2;
        else if (s.compare(i, 2, "*/") == 0) --depth, i += 2;
        else ++i;
      } while (i < n && depth > 0);
      continue;
    }
    if ((c == 'r' || c == 'b') && i + 1 < n) {
      std::size_t q = i + 1;
      if (c == 'b' && s[q] == 'r') ++q;
      if ((c == 'r' || s[i + 1] == 'r') && q < n && (s[q] == '"' || s[q] == '#')) {
        auto end = raw_string(i, q);
        if (end != std::string_view::npos) {
          i = end;
          continue;
        }
      }
      if (c == 'b' && (s[i + 1] == '"' || s[i + 1] == '\'')) {
        ++i;
        c = s[i];
        // Fall through to the quoted literal below, keeping the prefix.
        std::size_t b = i - 1, j = i + 1;
        while (j < n && s[j] != c) j += s[j] == '\\' ? 2 : 1;
        if (j >= n) throw ScanFailure(file + ": unterminated literal");
        push(RTok::literal, b, j + 1);
        i = j + 1;
        continue;
      }
    }
    if (c == '"') {
      std::size_t j = i + 1;
      while (j < n && s[j] != '"') j += s[j] == '\\' ? 2 : 1;
      if (j >= n) throw ScanFailure(file + ": unterminated string");
      push(RTok::literal, i, j + 1);
      i = j + 1;
      continue;
    }
    if (c == '\'') {
      // Char literal or lifetime.
      if (i + 1 < n && s[i + 1] == '\\') {
        std::size_t j = i + 2;
        while (j < n && s[j] != '\'') ++j;
        push(RTok::literal, i, j + 1);
        i = j + 1;
        continue;
      }
      std::size_t j = i + 1;
      if (j < n) {
        // One UTF-8 code point.
        unsigned char u = static_cast<unsigned char>(s[j]);
        std::size_t len = u < 0x80 ? 1 : u < 0xE0 ? 2 : u < 0xF0 ? 3 : 4;
        if (j + len < n && s[j + len] == '\'') {
          push(RTok::literal, i, j + len + 1);
          i = j + len + 1;
          continue;
        }
      }
      while (j < n && ident_char(s[j])) ++j;
      push(RTok::lifetime, i, j);
      i = j;
      continue;
    }
    if (ident_char(c)) {
      std::size_t j = i;
      if (std::isdigit(static_cast<unsigned char>(c))) {
        while (j < n && (ident_char(s[j]) || (s[j] == '.' && j + 1 < n &&
                                              std::isdigit(static_cast<unsigned char>(s[j + 1])))))
          ++j;
        push(RTok::literal, i, j);
      } else {
        if (c == 'r' && i + 1 < n && s[i + 1] == '#') j += 2;
        while (j < n && ident_char(s[j])) ++j;
        push(RTok::ident, i, j);
      }
      i = j;
      continue;
    }
    push(RTok::punct, i, i + 1);
    ++i;
  }
  return out;
}

class RustItems {
 public:
  RustItems(std::string_view src, const std::string& file, const std::string& unit)
      : src_(src), file_(file), unit_(unit), t_(lex_rust(src, file)) {}

  std::vector<RustElementRecord> run() {
    check_balance();
    items(0, t_.size(), "");
    return std::move(out_);
  }

 private:
  bool is(std::size_t i, std::string_view s) const { return i < t_.size() && t_[i].text == s; }

  void check_balance() const {
    std::vector<char> stack;
    for (const auto& t : t_) {
      if (t.kind != RTok::punct) continue;
      char c = t.text[0];
      if (c == '{' || c == '(' || c == '[') stack.push_back(c);
      if (c == '}' || c == ')' || c == ']') {
        char want = c == '}' ? '{' : c == ')' ? '(' : '[';
        if (stack.empty() || stack.back() != want) throw ScanFailure(file_);
        stack.pop_back();
      }
    }
    if (!stack.empty()) throw ScanFailure(file_);
  }

  // Index one past the group opened at i.
  std::size_t skip_group(std::size_t i) const {
    int depth = 0;
    for (; i < t_.size(); ++i) {
      auto c = t_[i].text;
      if (t_[i].kind != RTok::punct) continue;
      if (c == "{" || c == "(" || c == "[") ++depth;
      if ((c == "}" || c == ")" || c == "]") && --depth == 0) return i + 1;
    }
    return t_.size();
  }

  // Index one past the `;` or the `{...}` that ends an item starting at i.
  std::size_t item_end(std::size_t i, std::size_t end) const {
    while (i < end) {
      auto c = t_[i].text;
      if (c == ";") return i + 1;
      if (c == "{") return skip_group(i);
      if (c == "(" || c == "[") {
        i = skip_group(i);
        continue;
      }
      ++i;
    }
    return end;
  }

  // First `{` or `;` at group depth 0 from i.
  std::size_t body_start(std::size_t i, std::size_t end) const {
    while (i < end) {
      auto c = t_[i].text;
      if (c == "{" || c == ";") return i;
      if (c == "(" || c == "[") {
        i = skip_group(i);
        continue;
      }
      ++i;
    }
    return end;
  }

  std::string text(std::size_t from_tok, std::size_t to_offset) const {
    auto b = t_[from_tok].offset;
    return collapse_lines(src_.substr(b, to_offset - b));
  }

  static std::string collapse_lines(std::string_view s) {
    // Keep line structure but trim each line.
    std::string out;
    for (auto& l : split_lines(s)) {
      auto t = trim(l);
      if (t.empty()) continue;
      if (!out.empty()) out += '\n';
      out += t;
    }
    return out;
  }

  std::size_t end_offset(std::size_t tok_end) const {
    const auto& t = t_[tok_end - 1];
    return t.offset + t.text.size();
  }

  void record(RustKind k, std::string name, std::string sig) {
    out_.push_back({k, std::move(name), std::move(sig), file_, unit_});
  }

  void items(std::size_t i, std::size_t end, const std::string& owner) {
    while (i < end) {
      std::size_t start = i;
      // Inner attributes and stray semicolons.
      if (is(i, "#") && is(i + 1, "!")) {
        i = skip_group(i + 2);
        continue;
      }
      if (is(i, ";")) {
        ++i;
        continue;
      }
      while (is(i, "#") && is(i + 1, "[")) i = skip_group(i + 1);
      if (is(i, "pub")) {
        ++i;
        if (is(i, "(")) i = skip_group(i);
      }
      // Qualifiers.
      bool progress = true;
      while (progress && i < end) {
        progress = false;
        if (is(i, "default") || is(i, "async") || is(i, "unsafe") ||
            (is(i, "const") && (is(i + 1, "fn") || is(i + 1, "unsafe") || is(i + 1, "async") ||
                                is(i + 1, "extern")))) {
          ++i;
          progress = true;
        } else if (is(i, "extern") && !is(i + 1, "crate")) {
          ++i;
          if (i < end && t_[i].kind == RTok::literal) ++i;
          if (is(i, "{")) break;  // foreign block
          progress = true;
        }
      }
      if (i >= end) break;
      auto kw = t_[i].text;
      auto name_at = [&](std::size_t k) {
        return k < end && t_[k].kind == RTok::ident ? std::string(t_[k].text) : std::string();
      };
      if (kw == "fn") {
        auto name = name_at(i + 1);
        auto b = body_start(i + 1, end);
        std::size_t sig_end = b < end ? t_[b].offset : end_offset(end);
        auto sig = text(start, sig_end);
        record(RustKind::function, owner.empty() ? name : owner + "::" + name, sig);
        i = item_end(b, end);
      } else if (owner.empty() && (kw == "struct" || kw == "enum" ||
                                   (kw == "union" && i + 1 < end && t_[i + 1].kind == RTok::ident) ||
                                   kw == "type")) {
        auto name = name_at(i + 1);
        auto e = kw == "type" ? item_end(i, end) : struct_end(i, end);
        record(RustKind::struct_or_enum, name, text(start, end_offset(e)));
        i = e;
      } else if (kw == "static" || kw == "const") {
        std::size_t k = i + 1;
        if (is(k, "mut")) ++k;
        auto name = name_at(k);
        auto e = item_end(k, end);
        // Declaration without the initializer.
        std::size_t eq = k;
        while (eq < e && !is(eq, "=") && !is(eq, ";")) {
          if (is(eq, "(") || is(eq, "[") || is(eq, "{"))
            eq = skip_group(eq);
          else
            ++eq;
        }
        std::size_t sig_end = eq < e ? t_[eq].offset : end_offset(e);
        record(RustKind::static_or_constant, owner.empty() ? name : owner + "::" + name,
               text(start, sig_end));
        i = e;
      } else if (owner.empty() && kw == "macro_rules" && is(i + 1, "!")) {
        auto name = name_at(i + 2);
        std::size_t body = i + 3;
        std::size_t e = skip_group(body);
        if (is(e, ";")) ++e;
        record(macro_kind(body, e), name, "macro_rules! " + name);
        i = e;
      } else if (owner.empty() && kw == "impl") {
        std::size_t b = body_start(i + 1, end);
        auto type = impl_type(i + 1, b);
        if (b < end && is(b, "{")) {
          std::size_t e = skip_group(b);
          items(b + 1, e - 1, type);
          i = e;
        } else {
          i = item_end(b, end);
        }
      } else {
        // use, mod, trait, extern blocks, macro invocations.
        i = item_end(i, end);
      }
      if (i <= start) i = start + 1;
    }
  }

  std::size_t struct_end(std::size_t i, std::size_t end) const {
    // struct S;  struct S(..);  struct S {..}  (tuple structs end with ;)
    while (i < end) {
      if (is(i, ";")) return i + 1;
      if (is(i, "{")) return skip_group(i);
      if (is(i, "(")) {
        i = skip_group(i);
        continue;
      }
      ++i;
    }
    return end;
  }

  RustKind macro_kind(std::size_t body, std::size_t end) const {
    // Every matcher empty -> a value-like macro.
    std::size_t i = body + 1;
    bool any = false;
    while (i < end - 1) {
      if (!(is(i, "(") || is(i, "[") || is(i, "{"))) {
        ++i;
        continue;
      }
      std::size_t m_end = skip_group(i);
      if (m_end != i + 2) return RustKind::macro_function;
      any = true;
      i = m_end;
      // Skip `=>` and the transcriber.
      while (i < end - 1 && !(is(i, "(") || is(i, "[") || is(i, "{"))) ++i;
      if (i < end - 1) i = skip_group(i);
      if (is(i, ";")) ++i;
    }
    return any ? RustKind::macro_variable : RustKind::macro_function;
  }

  std::string impl_type(std::size_t i, std::size_t end) const {
    if (is(i, "<")) i = skip_angle(i);
    std::string first;
    for (std::size_t k = i; k < end; ++k) {
      if (is(k, "where")) break;
      if (is(k, "for")) {
        for (std::size_t m = k + 1; m < end; ++m)
          if (t_[m].kind == RTok::ident && t_[m].text != "dyn") return std::string(t_[m].text);
      }
      if (is(k, "<")) {
        k = skip_angle(k) - 1;
        continue;
      }
      if (first.empty() && t_[k].kind == RTok::ident) first = std::string(t_[k].text);
    }
    return first;
  }

  std::size_t skip_angle(std::size_t i) const {
    int depth = 0;
    for (; i < t_.size(); ++i) {
      if (is(i, "<")) ++depth;
      if (is(i, ">") && !(i > 0 && is(i - 1, "-")) && --depth == 0) return i + 1;
    }
    return t_.size();
  }

  std::string_view src_;
  const std::string& file_;
  const std::string& unit_;
  std::vector<RToken> t_;
  std::vector<RustElementRecord> out_;
};

}  // namespace

std::vector<RustElementRecord> parse_rust_elements(std::string_view source, const std::string& file,
                                                   const std::string& unit_id) {
  return RustItems(source, file, unit_id).run();
}

// ---------------------------------------------------------------------------
// Context and mapping

std::string ContextBundle::render() const {
  std::string out;
  for (const auto& it : items) {
    out += "// " + it.name + ": " + it.note + "\n";
    out += it.text;
    out += "\n\n";
  }
  return out;
}

namespace {

int priority_of(ElementKind k) {
  switch (k) {
    case ElementKind::function:
    case ElementKind::macro_function: return 0;
    case ElementKind::type_def: return 1;
    default: return 2;
  }
}

// Definition record of `name` visible from `meta`: same unit excluded,
// same module preferred.
std::pair<const UnitMetadata*, const ElementRecord*> find_definition(const UnitMetadata& meta,
                                                                     const MetadataStore& store,
                                                                     const std::string& name) {
  std::pair<const UnitMetadata*, const ElementRecord*> best{nullptr, nullptr};
  for (const auto& u : store.units) {
    if (u.unit_id == meta.unit_id) continue;
    const auto* e = u.element(name);
    if (!e) continue;
    bool same_module = u.module == meta.module;
    if (e->is_static && !same_module) continue;
    if (!best.first || (same_module && best.first->module != meta.module)) best = {&u, e};
  }
  return best;
}

}  // namespace

ContextBundle select_context(const UnitMetadata& meta, const MetadataStore& store, ContextMode mode,
                             std::size_t budget_tokens) {
  ContextBundle b;
  for (const auto& name : meta.imports_needed) {
    auto [def_unit, def] = find_definition(meta, store, name);
    if (!def) continue;
    ContextItem item;
    item.name = name;
    item.priority = priority_of(def->kind);
    const MappingEntry* m = store.mapping_for(name, def_unit->unit_id);
    const RustElementRecord* r = m ? store.rust_element(m->rust_name, m->rust_file) : nullptr;
    if (r) {
      item.text = r->signature;
      item.note = "defined in " + r->file;
      item.rust = true;
    } else if (mode == ContextMode::translate) {
      item.text = def->signature_or_definition;
      item.note = "C definition in unit " + def_unit->unit_id + ", not yet translated";
    } else {
      continue;
    }
    b.items.push_back(std::move(item));
  }
  std::stable_sort(b.items.begin(), b.items.end(),
                   [](const ContextItem& x, const ContextItem& y) { return x.priority < y.priority; });
  std::size_t dropped = 0;
  while (!b.items.empty() && estimate_tokens(b.render()) > budget_tokens) {
    b.items.pop_back();
    ++dropped;
  }
  if (dropped)
    b.warnings.push_back("context truncated: dropped " + std::to_string(dropped) + " item(s) for " +
                         meta.unit_id);
  b.est_tokens = estimate_tokens(b.render());
  return b;
}

std::vector<MappingReport> parse_mapping_response(const json& doc) {
  const json* arr = &doc;
  if (doc.is_object() && doc.contains("mappings")) arr = &doc.at("mappings");
  if (!arr->is_array()) throw FormatError("mapping response must be a JSON array");
  std::vector<MappingReport> out;
  for (const auto& j : *arr) {
    if (!j.is_object() || !j.contains("c_name") || !j.at("c_name").is_string())
      throw FormatError("mapping entry without c_name");
    MappingReport r;
    r.c_name = j.at("c_name").get<std::string>();
    if (j.contains("rust_name") && j.at("rust_name").is_string())
      r.rust_name = j.at("rust_name").get<std::string>();
    if (j.contains("rust_file") && j.at("rust_file").is_string())
      r.rust_file = j.at("rust_file").get<std::string>();
    r.removed = j.value("removed", false);
    if (j.contains("note") && j.at("note").is_string()) r.note = j.at("note").get<std::string>();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string last_segment(std::string_view name) {
  auto p = name.rfind("::");
  return std::string(p == std::string_view::npos ? name : name.substr(p + 2));
}

void set_mapping(MetadataStore& store, MappingEntry entry) {
  std::erase_if(store.tombstones, [&](const Tombstone& t) {
    return t.c_name == entry.c_name && t.c_unit == entry.c_unit;
  });
  for (auto& m : store.mappings)
    if (m.c_name == entry.c_name && m.c_unit == entry.c_unit) {
      m = std::move(entry);
      return;
    }
  store.mappings.push_back(std::move(entry));
}

void set_tombstone(MetadataStore& store, Tombstone t) {
  std::erase_if(store.mappings, [&](const MappingEntry& m) {
    return m.c_name == t.c_name && m.c_unit == t.c_unit;
  });
  for (auto& x : store.tombstones)
    if (x.c_name == t.c_name && x.c_unit == t.c_unit) {
      x = std::move(t);
      return;
    }
  store.tombstones.push_back(std::move(t));
}

}  // namespace

std::vector<std::string> record_mapping(MetadataStore& store, const UnitMetadata& unit,
                                        const std::vector<std::string>& rust_files,
                                        const std::vector<MappingReport>& reports) {
  std::vector<std::string> warnings;
  std::set<std::string> files(rust_files.begin(), rust_files.end());
  auto resolve = [&](const MappingReport& r) -> const RustElementRecord* {
    const RustElementRecord* hit = nullptr;
    int matches = 0;
    for (const auto& re : store.rust_elements) {
      if (!files.count(re.file)) continue;
      if (!r.rust_file.empty() && re.file != r.rust_file) continue;
      if (re.name == r.rust_name) return &re;
      if (last_segment(re.name) == last_segment(r.rust_name)) {
        hit = &re;
        ++matches;
      }
    }
    return matches == 1 ? hit : nullptr;
  };

  std::set<std::string> reported;
  for (const auto& r : reports) {
    if (!unit.element(r.c_name)) {
      warnings.push_back("UnknownCElement(" + r.c_name + ")");
      continue;
    }
    reported.insert(r.c_name);
    if (r.removed) {
      set_tombstone(store, {r.c_name, unit.unit_id, r.note.empty() ? "removed by translation" : r.note});
      continue;
    }
    const auto* re = resolve(r);
    if (!re) {
      warnings.push_back("UnknownRustElement(" + r.rust_name + " in " + r.rust_file + ")");
      continue;
    }
    auto conf = re->name == r.c_name ? MappingConfidence::exact_name : MappingConfidence::llm;
    set_mapping(store, {r.c_name, unit.unit_id, re->name, re->file, conf, r.note});
  }

  // Elements the response skipped, matched by normalized name.
  for (const auto& e : unit.elements) {
    if (e.is_declaration || e.name.empty() || reported.count(e.name)) continue;
    if (store.mapping_for(e.name, unit.unit_id)) continue;
    auto want = to_snake_case(e.name);
    for (const auto& re : store.rust_elements) {
      if (!files.count(re.file) || to_snake_case(last_segment(re.name)) != want) continue;
      set_mapping(store, {e.name, unit.unit_id, re.name, re.file, MappingConfidence::exact_name,
                          "matched by name"});
      break;
    }
  }
  return warnings;
}

bool element_covered(const MetadataStore& store, std::string_view c_name, std::string_view c_unit) {
  return store.mapping_for(c_name, c_unit) && !store.is_tombstoned(c_name, c_unit);
}

}  // namespace seamstress
