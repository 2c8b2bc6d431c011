#include "seamstress/preprocess.hpp"

#include <algorithm>
#include <json.hpp>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "seamstress/error.hpp"
#include "seamstress/graph.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

namespace {

bool is_conditional_directive(std::string_view n) {
  return n == "if" || n == "ifdef" || n == "ifndef" || n == "elif" || n == "else" ||
         n == "endif";
}

bool is_guard_directive(std::string_view n) {
  return n == "if" || n == "ifdef" || n == "ifndef" || n == "elif";
}

bool is_excluded(const fs::path& rel, const std::vector<fs::path>& exclude,
                 const fs::path& root) {
  for (const auto& ex : exclude) {
    fs::path e = ex.is_absolute() ? fs::path(relative_string(ex, root)) : ex;
    auto es = e.lexically_normal().generic_string();
    auto rs = rel.generic_string();
    if (es.empty() || es == ".") continue;
    if (rs == es || rs.starts_with(es + "/")) return true;
  }
  return false;
}

// -- #if evaluation for include selection ----------------------------------

struct Unevaluable {};

class CondEval {
 public:
  CondEval(const std::vector<Token>& toks, std::size_t begin, std::size_t end,
           const std::set<std::string>& defined)
      : t_(toks), i_(begin), end_(end), defined_(defined) {}

  bool run() {
    bool v = disj();
    if (i_ != end_) throw Unevaluable{};
    return v;
  }

 private:
  bool at(std::string_view s) const { return i_ < end_ && t_[i_].text == s; }

  bool disj() {
    bool v = conj();
    while (at("||")) {
      ++i_;
      bool r = conj();
      v = v || r;
    }
    return v;
  }
  bool conj() {
    bool v = unary();
    while (at("&&")) {
      ++i_;
      bool r = unary();
      v = v && r;
    }
    return v;
  }
  bool unary() {
    if (at("!")) {
      ++i_;
      return !unary();
    }
    return primary();
  }
  bool primary() {
    if (i_ >= end_) throw Unevaluable{};
    const Token& t = t_[i_];
    if (t.text == "(") {
      ++i_;
      bool v = disj();
      if (!at(")")) throw Unevaluable{};
      ++i_;
      return v;
    }
    if (t.text == "defined") {
      ++i_;
      bool paren = at("(");
      if (paren) ++i_;
      if (i_ >= end_ || t_[i_].kind != TokenKind::identifier) throw Unevaluable{};
      bool v = defined_.count(std::string(t_[i_].text)) > 0;
      ++i_;
      if (paren) {
        if (!at(")")) throw Unevaluable{};
        ++i_;
      }
      return v;
    }
    if (t.kind == TokenKind::number) {
      ++i_;
      std::string digits;
      for (char c : t.text)
        if (std::isdigit(static_cast<unsigned char>(c))) digits += c;
        else if (c != 'u' && c != 'U' && c != 'l' && c != 'L') throw Unevaluable{};
      return digits.find_first_not_of('0') != std::string::npos;
    }
    // Bare identifiers and arithmetic need real macro values.
    throw Unevaluable{};
  }

  const std::vector<Token>& t_;
  std::size_t i_, end_;
  const std::set<std::string>& defined_;
};

// Tracks which branch of each #if group is selected.
class BranchTracker {
 public:
  explicit BranchTracker(const std::set<std::string>& defined) : defined_(defined) {}

  bool active() const { return stack_.empty() || stack_.back().active; }

  void directive(const LexResult& lex, const Directive& d) {
    const auto& n = d.name;
    if (n == "if" || n == "ifdef" || n == "ifndef") {
      bool parent = active();
      bool cond = eval(lex, d);
      stack_.push_back({parent, cond, parent && cond});
    } else if (n == "elif") {
      if (stack_.empty()) return;
      auto& g = stack_.back();
      bool cond = !g.taken && eval(lex, d);
      g.taken = g.taken || cond;
      g.active = g.parent && cond;
    } else if (n == "else") {
      if (stack_.empty()) return;
      auto& g = stack_.back();
      g.active = g.parent && !g.taken;
      g.taken = true;
    } else if (n == "endif") {
      if (!stack_.empty()) stack_.pop_back();
    }
  }

 private:
  struct Group {
    bool parent, taken, active;
  };

  bool eval(const LexResult& lex, const Directive& d) const {
    std::size_t b = d.first_token + 2;
    if (d.name == "ifdef" || d.name == "ifndef") {
      if (b >= d.end_token) return true;
      bool def = defined_.count(std::string(lex.tokens[b].text)) > 0;
      return d.name == "ifdef" ? def : !def;
    }
    try {
      return CondEval(lex.tokens, b, d.end_token, defined_).run();
    } catch (const Unevaluable&) {
      // Unknown values: the first untaken branch wins.
      return true;
    }
  }

  const std::set<std::string>& defined_;
  std::vector<Group> stack_;
};

// -- merge -------------------------------------------------------------------

class Merger {
 public:
  Merger(const Project& p, const PreprocessOptions& o, ModuleSource& m)
      : project_(p), module_(m) {
    defined_ = p.defined_macros;
    defined_.insert(o.defines.begin(), o.defines.end());
  }

  void emit(const std::string& rel, bool strip_guard) {
    included_.insert(rel);
    auto text_it = project_.texts.find(rel);
    if (text_it == project_.texts.end()) return;
    const std::string& text = text_it->second;
    auto lines = split_lines(text);
    auto lex = lex_c(text);
    std::optional<IncludeGuard> guard;
    if (strip_guard) guard = detect_include_guard(lex);

    std::unordered_map<int, const Directive*> at_line;
    for (const auto& d : lex.directives) at_line[d.start_line] = &d;
    BranchTracker branches(defined_);

    for (int l = 1; l <= static_cast<int>(lines.size()); ++l) {
      auto it = at_line.find(l);
      if (it == at_line.end()) {
        push(lines[l - 1], rel, l);
        continue;
      }
      const Directive& d = *it->second;
      bool guard_line = guard && (l == guard->ifndef_line || l == guard->define_line ||
                                  l == guard->endif_line);
      if (guard_line) {
        l = d.end_line;
        continue;
      }
      if (is_conditional_directive(d.name)) branches.directive(lex, d);
      if (d.name == "include" && handle_include(rel, d, branches.active())) {
        l = d.end_line;
        continue;
      }
      for (int k = d.start_line; k <= d.end_line; ++k) push(lines[k - 1], rel, k);
      l = d.end_line;
    }
  }

 private:
  // True when the directive lines were consumed.
  bool handle_include(const std::string& rel, const Directive& d, bool active) {
    const auto& g = project_.graph;
    const IncludeEdge* edge = nullptr;
    for (const auto& e : g.edges)
      if (e.includer == rel && e.line == d.start_line) edge = &e;
    if (!edge) {
      for (const auto& e : g.missing)
        if (e.includer == rel && e.line == d.start_line)
          module_.warnings.push_back("MissingHeader(" + rel + ", " + e.spelled + ")");
      return false;
    }
    if (edge->is_system) return false;
    if (!active) {
      module_.lines.push_back(
          {"/* include \"" + edge->spelled + "\" not merged: inactive in this configuration */",
           "", 0});
      return true;
    }
    if (included_.count(edge->included)) return true;
    emit(edge->included, true);
    return true;
  }

  void push(const std::string& text, const std::string& file, int line) {
    module_.lines.push_back({text, file, line});
  }

  const Project& project_;
  ModuleSource& module_;
  std::set<std::string> defined_;
  std::set<std::string> included_;
};

// -- token rewriting ----------------------------------------------------------

// Byte offsets of member declarations in struct/union bodies, which name
// fields rather than file-scope entities.
std::vector<std::pair<std::size_t, std::size_t>> member_ranges(const LexResult& lex) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const auto& t = lex.tokens;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].text != "struct" && t[i].text != "union") continue;
    std::size_t j = i + 1;
    if (j < t.size() && t[j].kind == TokenKind::identifier) ++j;
    if (j >= t.size() || t[j].text != "{") continue;
    int depth = 0;
    std::size_t k = j;
    for (; k < t.size(); ++k) {
      if (t[k].text == "{") ++depth;
      if (t[k].text == "}" && --depth == 0) break;
    }
    if (k >= t.size()) break;
    out.emplace_back(t[j].offset, t[k].offset);
    i = j;
  }
  return out;
}

bool after_member_access(const LexResult& lex, std::size_t i) {
  return i > 0 && (lex.tokens[i - 1].text == "." || lex.tokens[i - 1].text == "->");
}

std::string rename_identifiers(const std::string& text,
                               const std::map<std::string, std::string>& renames) {
  if (renames.empty()) return text;
  auto lex = lex_c(text);
  auto members = member_ranges(lex);
  auto in_members = [&](std::size_t off) {
    for (auto [a, b] : members)
      if (off > a && off < b) return true;
    return false;
  };
  std::string out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < lex.tokens.size(); ++i) {
    const Token& tk = lex.tokens[i];
    if (tk.kind != TokenKind::identifier) continue;
    auto hit = renames.find(std::string(tk.text));
    if (hit == renames.end() || after_member_access(lex, i) || in_members(tk.offset)) continue;
    out.append(text, pos, tk.offset - pos);
    out += hit->second;
    pos = tk.offset + tk.text.size();
  }
  out.append(text, pos, std::string::npos);
  return out;
}

void replace_texts(ModuleSource& m, const std::string& joined) {
  auto lines = split_lines(joined);
  // Identifier rewrites never change the line structure.
  for (std::size_t i = 0; i < m.lines.size() && i < lines.size(); ++i)
    m.lines[i].text = std::move(lines[i]);
}

// Comment-only lines directly above `line` (no blank line in between).
int doc_comment_start(const ScannedFile& s, int line) {
  int l = line - 1;
  while (l >= 1) {
    std::size_t i = static_cast<std::size_t>(l - 1);
    bool code = s.lex.code_lines[i] || s.lex.directive_lines[i];
    bool blank = trim(s.lines[i]).empty();
    if (code || blank) break;
    --l;
  }
  return l + 1;
}

void erase_lines(ModuleSource& m, const std::vector<bool>& drop) {
  std::vector<SourceLine> kept;
  kept.reserve(m.lines.size());
  for (std::size_t i = 0; i < m.lines.size(); ++i)
    if (!drop[i]) kept.push_back(std::move(m.lines[i]));
  m.lines = std::move(kept);
}

// Atom adjacency over every element, declarations included, so kept
// prototypes stay after the types they mention.
Adjacency atom_dependencies(const ScannedFile& s, const std::vector<Atom>& atoms) {
  std::vector<std::size_t> atom_of(s.elements.size(), 0);
  for (std::size_t a = 0; a < atoms.size(); ++a)
    for (auto e : atoms[a].elements) atom_of[e] = a;
  std::unordered_map<std::string, std::vector<std::size_t>> by_name;
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    const auto& e = s.elements[i];
    if (!e.name.empty()) by_name[e.name].push_back(i);
    for (const auto& a : e.aliases) by_name[a].push_back(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < s.elements.size(); ++i) {
    std::unordered_set<std::string_view> seen;
    for (auto ident : referenced_identifiers(s.elements[i], s.lex)) {
      if (!seen.insert(ident).second) continue;
      auto hit = by_name.find(std::string(ident));
      if (hit == by_name.end()) continue;
      for (auto j : hit->second)
        if (atom_of[j] != atom_of[i]) edges.emplace_back(atom_of[i], atom_of[j]);
    }
  }
  return make_adjacency(atoms.size(), edges);
}

bool is_include_line(const ScannedFile& s, int line) {
  for (const auto& d : s.lex.directives)
    if (d.start_line == line) return d.name == "include";
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string FeatureRecord::feature() const { return to_snake_case(macro_name); }

std::string ModuleSource::text() const {
  std::string out;
  for (const auto& l : lines) {
    out += l.text;
    out += '\n';
  }
  return out;
}

std::vector<OriginRange> ModuleSource::origin_map() const {
  std::vector<OriginRange> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    int ln = static_cast<int>(i) + 1;
    const auto& l = lines[i];
    if (!out.empty()) {
      auto& b = out.back();
      bool contiguous = b.file == l.file && b.end_line == ln - 1 &&
                        (l.file.empty() || b.source_end == l.line - 1);
      if (contiguous) {
        b.end_line = ln;
        b.source_end = l.line;
        continue;
      }
    }
    out.push_back({ln, ln, l.file, l.line, l.line});
  }
  return out;
}

void ModuleSource::rescan() { scan = scan_file(text(), file_id()); }

std::string module_name_for_stem(std::string_view stem) {
  static const std::set<std::string> reserved = {
      "as",    "break", "const", "continue", "crate",  "else",   "enum",   "extern",
      "false", "fn",    "for",   "if",       "impl",   "in",     "let",    "loop",
      "match", "mod",   "move",  "mut",      "pub",    "ref",    "return", "self",
      "Self",  "static", "struct", "super",  "trait",  "true",   "type",   "unsafe",
      "use",   "where", "while", "async",    "await",  "dyn",    "abstract", "become",
      "box",   "do",    "final", "macro",    "override", "priv", "typeof", "unsized",
      "virtual", "yield", "try", "lib",     "main",   "build"};
  std::string out;
  for (char c : stem) {
    unsigned char u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "m_" + out;
  if (reserved.count(out)) out += "_c";
  return out;
}

Project load_project(const fs::path& root, const PreprocessOptions& options) {
  Project p;
  p.root = root;
  p.graph = build_include_graph(root, options.include_dirs);
  std::erase_if(p.graph.nodes,
                [&](const std::string& n) { return is_excluded(n, options.exclude, root); });
  p.warnings = p.graph.warnings;
  for (const auto& node : p.graph.nodes) {
    auto text = read_source_file(root / node, p.warnings);
    auto lex = lex_c(text);
    auto guard = detect_include_guard(lex);
    for (const auto& d : lex.directives) {
      if (d.name != "define" || d.first_token + 2 >= d.end_token) continue;
      std::string name(lex.tokens[d.first_token + 2].text);
      if (guard && d.start_line == guard->define_line && name == guard->symbol) continue;
      p.defined_macros.insert(name);
    }
    if (fs::path(node).extension() == ".c") p.roots.push_back(node);
    p.texts.emplace(node, std::move(text));
  }
  return p;
}

ModuleSource merge_includes(const Project& project, const std::string& root_c,
                            const PreprocessOptions& options) {
  ModuleSource m;
  m.root_file = root_c;
  m.name = module_name_for_stem(fs::path(root_c).stem().string());
  Merger(project, options, m).emit(root_c, false);
  m.rescan();
  return m;
}

SymbolTable build_symbol_table(const std::vector<ModuleSource>& modules) {
  SymbolTable t;
  for (const auto& m : modules) {
    for (const auto& e : m.elements()) {
      if (e.is_declaration) continue;
      if (!e.name.empty()) t.definers[e.name].insert(m.name);
      for (const auto& a : e.aliases) t.definers[a].insert(m.name);
      if (e.is_static && !e.name.empty()) t.statics[e.name].insert(m.name);
    }
  }
  return t;
}

ModuleSource uniquify_statics(ModuleSource m, const SymbolTable& symbols) {
  std::map<std::string, std::string> renames;
  for (const auto& e : m.elements()) {
    if (!e.is_static || e.name.empty()) continue;
    if (e.kind != ElementKind::function && e.kind != ElementKind::variable) continue;
    auto hit = symbols.definers.find(e.name);
    if (hit == symbols.definers.end()) continue;
    bool collides = std::any_of(hit->second.begin(), hit->second.end(),
                                [&](const std::string& mod) { return mod != m.name; });
    if (collides) renames[e.name] = e.name + "__" + m.name;
  }
  if (renames.empty()) return m;
  replace_texts(m, rename_identifiers(m.text(), renames));
  m.renames.insert(renames.begin(), renames.end());
  m.rescan();
  return m;
}

ModuleSource strip_declarations(ModuleSource m, const SymbolTable& symbols) {
  const auto& els = m.elements();
  std::set<std::string> local_defs;
  for (const auto& e : els) {
    if (e.is_declaration) continue;
    if (!e.name.empty()) local_defs.insert(e.name);
    for (const auto& a : e.aliases) local_defs.insert(a);
  }
  std::vector<bool> drop(m.lines.size(), false);
  bool any = false;
  for (const auto& e : els) {
    if (!e.is_declaration || e.name.empty()) continue;
    bool local = local_defs.count(e.name) > 0;
    for (const auto& a : e.aliases) local = local && local_defs.count(a) > 0;
    if (local) {
      int from = doc_comment_start(m.scan, e.start_line);
      for (int l = from; l <= e.end_line; ++l) drop[l - 1] = true;
      any = true;
    }
  }
  if (any) {
    erase_lines(m, drop);
    m.rescan();
  }
  m.externs.clear();
  for (const auto& e : m.elements()) {
    if (!e.is_declaration || e.name.empty() || local_defs.count(e.name)) continue;
    auto hit = symbols.definers.find(e.name);
    if (hit == symbols.definers.end()) continue;
    for (const auto& mod : hit->second) {
      if (mod == m.name) continue;
      m.externs.push_back({e.name, mod, e.start_line});
      break;
    }
  }
  return m;
}

ModuleSource reorder_elements(ModuleSource m) {
  const auto& s = m.scan;
  auto atoms = build_atoms(s.elements, s.blocks);
  if (atoms.size() < 2) return m;
  auto order = stable_dependency_order(atom_dependencies(s, atoms));
  bool identity = true;
  for (std::size_t i = 0; i < order.size(); ++i) identity = identity && order[i] == i;

  // Each atom carries the free lines above it (comments, blank lines, stray
  // directives). Includes outside atoms are hoisted to the preamble.
  std::vector<SourceLine> preamble, tail;
  std::vector<std::vector<SourceLine>> chunks(atoms.size());
  std::vector<SourceLine> pending;
  std::vector<SourceLine> hoisted;
  std::size_t a = 0;
  const int n = static_cast<int>(m.lines.size());
  for (int l = 1; l <= n; ++l) {
    const auto& line = m.lines[l - 1];
    if (a < atoms.size() && l == atoms[a].start_line) {
      auto& c = chunks[a];
      if (a == 0)
        preamble = std::move(pending);
      else
        c = std::move(pending);
      pending.clear();
      for (int k = atoms[a].start_line; k <= atoms[a].end_line; ++k) c.push_back(m.lines[k - 1]);
      l = atoms[a].end_line;
      ++a;
      continue;
    }
    if (a > 0 && is_include_line(s, l))
      hoisted.push_back(line);
    else
      pending.push_back(line);
  }
  tail = std::move(pending);
  if (identity && hoisted.empty()) return m;

  std::vector<SourceLine> out;
  out.reserve(m.lines.size());
  out.insert(out.end(), preamble.begin(), preamble.end());
  out.insert(out.end(), hoisted.begin(), hoisted.end());
  for (auto i : order) out.insert(out.end(), chunks[i].begin(), chunks[i].end());
  out.insert(out.end(), tail.begin(), tail.end());
  m.lines = std::move(out);
  m.rescan();
  return m;
}

ModuleSource extract_cfg_macros(ModuleSource m, const std::set<std::string>& project_defines,
                                const std::set<std::string>& assumed_defines) {
  const auto& s = m.scan;
  std::vector<std::string> guards;
  std::map<std::string, int> first_guard_line;
  for (const auto& b : s.blocks)
    for (const auto& g : b.guard_symbols)
      if (!first_guard_line.count(g)) {
        first_guard_line[g] = b.start_line;
        guards.push_back(g);
      }
  if (guards.empty()) return m;

  std::set<std::string> undefd;
  for (const auto& d : s.lex.directives)
    if (d.name == "undef" && d.first_token + 2 < d.end_token)
      undefd.insert(std::string(s.lex.tokens[d.first_token + 2].text));

  // Identifier uses outside #if-family conditions and outside the symbol's
  // own #define.
  std::map<std::string, int> other_uses;
  for (std::size_t i = 0; i < s.lex.tokens.size(); ++i) {
    const Token& t = s.lex.tokens[i];
    if (t.kind != TokenKind::identifier) continue;
    if (t.directive >= 0) {
      const auto& d = s.lex.directives[t.directive];
      if (is_guard_directive(d.name)) continue;
      if (d.name == "define" && i == d.first_token + 2) continue;
      if (d.name == "undef") continue;
    }
    other_uses[std::string(t.text)]++;
  }

  auto in_block = [&](int line) {
    return std::any_of(s.blocks.begin(), s.blocks.end(), [&](const ConditionalBlock& b) {
      return line >= b.start_line && line <= b.end_line;
    });
  };

  std::vector<bool> drop(m.lines.size(), false);
  bool any = false;
  for (const auto& g : guards) {
    if (undefd.count(g)) {
      m.warnings.push_back("#undef " + g + " present; guard left unextracted");
      continue;
    }
    std::vector<const CodeElement*> defs;
    bool value_define = false, conditional_define = false;
    for (const auto& e : s.elements) {
      if (e.name != g || (e.kind != ElementKind::macro_variable &&
                          e.kind != ElementKind::macro_function))
        continue;
      if (!e.valueless_define || e.kind != ElementKind::macro_variable) value_define = true;
      if (in_block(e.start_line)) conditional_define = true;
      defs.push_back(&e);
    }
    FeatureRecord rec;
    rec.macro_name = g;
    if (!defs.empty()) {
      if (value_define || conditional_define || other_uses.count(g)) continue;
      const auto& origin = m.lines[defs.front()->start_line - 1];
      rec.originally_defined = true;
      rec.file = origin.file;
      rec.line = origin.line;
      for (const auto* e : defs)
        for (int l = e->start_line; l <= e->end_line; ++l) drop[l - 1] = true;
      m.feature_defines.push_back(g);
      any = true;
    } else {
      if (project_defines.count(g) && !assumed_defines.count(g)) {
        // Defined elsewhere in the project but not visible here; C sees it
        // as undefined in this module.
        m.warnings.push_back(g + " is defined in another translation unit only");
      }
      const auto& origin = m.lines[first_guard_line[g] - 1];
      rec.originally_defined = assumed_defines.count(g) > 0;
      rec.file = origin.file;
      rec.line = origin.line;
    }
    m.features.push_back(std::move(rec));
  }
  if (any) {
    erase_lines(m, drop);
    m.rescan();
  }
  return m;
}

PreprocessResult preprocess_project(const fs::path& root, const PreprocessOptions& options) {
  PreprocessResult r;
  Project p = load_project(root, options);
  r.warnings = p.warnings;
  std::vector<ModuleSource> mods;
  std::set<std::string> names;
  for (const auto& rc : p.roots) {
    auto m = merge_includes(p, rc, options);
    if (names.count(m.name)) {
      // Two roots with the same stem: qualify by directory.
      auto rel = fs::path(rc).replace_extension().generic_string();
      m.name = module_name_for_stem(rel);
      m.rescan();
    }
    names.insert(m.name);
    mods.push_back(std::move(m));
  }
  auto symbols = build_symbol_table(mods);
  for (auto& m : mods) m = uniquify_statics(std::move(m), symbols);
  symbols = build_symbol_table(mods);
  std::set<std::string> assumed(options.defines.begin(), options.defines.end());
  for (auto& m : mods) {
    m = strip_declarations(std::move(m), symbols);
    m = extract_cfg_macros(std::move(m), p.defined_macros, assumed);
    m = reorder_elements(std::move(m));
  }

  // Module dependencies: names a module uses but only another module defines.
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < mods.size(); ++i) index[mods[i].name] = i;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < mods.size(); ++i) {
    auto& m = mods[i];
    std::set<std::string> local, deps;
    for (const auto& e : m.elements())
      if (!e.is_declaration) {
        local.insert(e.name);
        local.insert(e.aliases.begin(), e.aliases.end());
      }
    const auto& lex = m.scan.lex;
    for (std::size_t t = 0; t < lex.tokens.size(); ++t) {
      if (lex.tokens[t].kind != TokenKind::identifier || after_member_access(lex, t)) continue;
      std::string id(lex.tokens[t].text);
      if (local.count(id)) continue;
      auto hit = symbols.definers.find(id);
      if (hit == symbols.definers.end()) continue;
      auto st = symbols.statics.find(id);
      for (const auto& mod : hit->second) {
        bool hidden = st != symbols.statics.end() && st->second.count(mod);
        if (mod != m.name && !hidden) deps.insert(mod);
      }
    }
    m.depends_on.assign(deps.begin(), deps.end());
    for (const auto& d : deps) edges.emplace_back(i, index.at(d));
  }
  for (auto i : stable_dependency_order(make_adjacency(mods.size(), edges)))
    r.modules.push_back(std::move(mods[i]));

  std::map<std::string, FeatureRecord> merged;
  for (const auto& m : r.modules) {
    for (const auto& w : m.warnings) r.warnings.push_back(m.name + ": " + w);
    for (const auto& f : m.features) {
      auto [it, fresh] = merged.emplace(f.macro_name, f);
      if (!fresh && f.originally_defined && !it->second.originally_defined) it->second = f;
    }
  }
  for (auto& [_, f] : merged) r.features.push_back(f);
  return r;
}

std::size_t count_forward_references(const ModuleSource& m) {
  auto scanned = scan_file(m.text(), m.file_id());
  auto atoms = build_atoms(scanned.elements, scanned.blocks);
  auto graph = build_reference_graph(scanned.elements, {{m.file_id(), m.text()}});
  std::vector<std::size_t> atom_of(scanned.elements.size(), 0);
  for (std::size_t a = 0; a < atoms.size(); ++a)
    for (auto e : atoms[a].elements) atom_of[e] = a;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (auto [from, to] : graph.edges) {
    auto fa = atom_of[graph.element_index[from]], ta = atom_of[graph.element_index[to]];
    if (fa != ta) edges.emplace_back(fa, ta);
  }
  auto adj = make_adjacency(atoms.size(), edges);
  auto comp = component_index(atoms.size(), strongly_connected_components(adj));
  std::size_t forward = 0;
  for (auto [fa, ta] : edges)
    if (comp[fa] != comp[ta] && ta > fa) ++forward;
  return forward;
}

void write_preprocess_outputs(const PreprocessResult& result, const fs::path& out_dir) {
  using nlohmann::json;
  for (const auto& m : result.modules) {
    write_file_atomic(out_dir / "preprocessed" / (m.name + ".c"), m.text());
    json origin = json::array();
    for (const auto& r : m.origin_map()) {
      json j = {{"start_line", r.start_line}, {"end_line", r.end_line}};
      if (r.synthetic()) {
        j["synthetic"] = true;
      } else {
        j["file"] = r.file;
        j["source_start"] = r.source_start;
        j["source_end"] = r.source_end;
      }
      origin.push_back(std::move(j));
    }
    json doc = {{"module", m.name},
                {"root_file", m.root_file},
                {"origin_map", origin},
                {"feature_defines", m.feature_defines},
                {"depends_on", m.depends_on},
                {"renames", m.renames}};
    json ext = json::array();
    for (const auto& e : m.externs)
      ext.push_back({{"name", e.name}, {"module", e.module}, {"line", e.line}});
    doc["externs"] = ext;
    write_file_atomic(out_dir / "preprocessed" / (m.name + ".origin.json"), doc.dump(2) + "\n");
  }
  json features = json::array();
  for (const auto& f : result.features)
    features.push_back({{"macro_name", f.macro_name},
                        {"feature", f.feature()},
                        {"originally_defined", f.originally_defined},
                        {"file", f.file},
                        {"line", f.line}});
  write_file_atomic(out_dir / "features.json", features.dump(2) + "\n");
}

}  // namespace seamstress
