#include "seamstress/c_model.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "seamstress/error.hpp"
#include "seamstress/graph.hpp"

namespace seamstress {

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::function: return "function";
    case ElementKind::macro_function: return "macro_function";
    case ElementKind::type_def: return "type_def";
    case ElementKind::macro_variable: return "macro_variable";
    case ElementKind::variable: return "variable";
    case ElementKind::other: return "other";
  }
  return "other";
}

std::optional<ElementKind> parse_element_kind(std::string_view s) {
  for (auto k : kAllElementKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

bool CodeElement::defines(std::string_view ident) const {
  if (!name.empty() && name == ident) return true;
  return std::find(aliases.begin(), aliases.end(), ident) != aliases.end();
}

std::string span_text(const std::vector<std::string>& lines, int start_line, int end_line) {
  std::string out;
  for (int l = std::max(start_line, 1); l <= end_line && l <= static_cast<int>(lines.size()); ++l) {
    out += lines[l - 1];
    out += '\n';
  }
  return out;
}

namespace {

bool is(const Token& t, std::string_view s) { return t.text == s; }

bool is_ident(const Token& t) {
  return t.kind == TokenKind::identifier && !is_c_keyword(t.text);
}

bool is_attribute_word(std::string_view w) {
  return w == "__attribute__" || w == "__declspec" || w == "__asm__" || w == "__asm" ||
         w == "asm";
}

bool is_knr_type_word(std::string_view w) {
  static constexpr std::string_view kWords[] = {
      "int",    "char",   "short", "long",  "unsigned", "signed",   "float", "double",
      "struct", "union",  "enum",  "register", "const", "volatile", "_Bool", "void"};
  for (auto k : kWords)
    if (k == w) return true;
  return false;
}

using TokRange = std::vector<const Token*>;

struct Declarator {
  const Token* name = nullptr;
  bool is_function = false;
  std::size_t position = 0;  // index of the name within its segment
};

// Name of one declarator: the identifier before the first `(` of a parameter
// list, the `(*name)` of a pointer declarator, or the last identifier before
// `=`, `[` or `:`.
Declarator parse_declarator(const TokRange& seg) {
  Declarator d;
  const Token* last_ident = nullptr;
  std::size_t last_pos = 0;
  const Token* fp_name = nullptr;
  std::size_t fp_pos = 0;
  int p = 0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const Token& t = *seg[i];
    if (t.kind == TokenKind::identifier && is_attribute_word(t.text)) {
      if (i + 1 < seg.size() && is(*seg[i + 1], "(")) {
        int q = 0;
        for (++i; i < seg.size(); ++i) {
          if (is(*seg[i], "(")) ++q;
          if (is(*seg[i], ")") && --q == 0) break;
        }
      }
      continue;
    }
    if (p == 0) {
      if (is(t, "=") || is(t, "[") || is(t, ":")) break;
      if (is(t, "(")) {
        if (last_ident && i > 0 && seg[i - 1] == last_ident) {
          d.name = last_ident;
          d.position = last_pos;
          d.is_function = true;
          return d;
        }
        ++p;
        continue;
      }
      if (is_ident(t)) {
        last_ident = &t;
        last_pos = i;
      }
      continue;
    }
    if (is(t, "(")) {
      ++p;
    } else if (is(t, ")")) {
      if (--p == 0 && fp_name) {
        d.name = fp_name;
        d.position = fp_pos;
        d.is_function = i + 1 < seg.size() && is(*seg[i + 1], "(") &&
                        fp_pos + 1 < seg.size() && is(*seg[fp_pos + 1], "(");
        return d;
      }
    } else if (p == 1 && !fp_name && is_ident(t) && i > 0 && is(*seg[i - 1], "*")) {
      fp_name = &t;
      fp_pos = i;
    }
  }
  d.name = fp_name ? fp_name : last_ident;
  d.position = fp_name ? fp_pos : last_pos;
  return d;
}

std::vector<TokRange> split_commas(const TokRange& r) {
  std::vector<TokRange> out(1);
  int p = 0;
  for (auto* t : r) {
    if (is(*t, "(") || is(*t, "[")) ++p;
    if (is(*t, ")") || is(*t, "]")) --p;
    if (p == 0 && is(*t, ",")) {
      out.emplace_back();
      continue;
    }
    out.back().push_back(t);
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

struct Classified {
  ElementKind kind = ElementKind::other;
  std::string name;
  std::vector<std::string> aliases;
  bool is_static = false;
  bool is_declaration = false;
  bool is_extern = false;
};

enum class BodyKind { none, function, initializer, aggregate };

struct StmtTok {
  std::size_t tok;
  int depth;  // brace depth before the token
};

class Scanner {
 public:
  Scanner(const LexResult& lex, const std::vector<std::string>& lines, const std::string& file)
      : lex_(lex), lines_(lines), file_(file) {}

  std::vector<CodeElement> run() {
    const auto& toks = lex_.tokens;
    for (std::size_t i = 0; i < toks.size();) {
      const Token& t = toks[i];
      if (t.directive >= 0) {
        const Directive& d = lex_.directives[t.directive];
        handle_directive(d);
        i = std::max(d.end_token, i + 1);
        continue;
      }
      i = handle_token(i);
    }
    if (!conds_.empty())
      throw UnterminatedConditional(file_ + ":" + std::to_string(conds_.back().line));
    if (st_.depth > 0)
      throw UnbalancedBraces(file_ + ":" + std::to_string(st_.open_line));
    if (st_.active) {
      // Trailing construct without a terminator (e.g. a bare macro call).
      emit_other(st_.start_tok, last_code_token_);
      st_ = State{};
    }
    return normalize();
  }

 private:
  struct State {
    bool active = false;
    std::size_t start_tok = 0;
    int depth = 0;
    int paren = 0;
    int extern_c = 0;
    int open_line = 0;
    BodyKind body = BodyKind::none;
    bool knr = false;
    std::vector<StmtTok> toks;
  };
  struct Cond {
    State saved;
    std::optional<State> first_end;
    int line;
  };

  const Token& tok(std::size_t i) const { return lex_.tokens[i]; }

  std::size_t next_code(std::size_t i) const {
    while (i < lex_.tokens.size() && lex_.tokens[i].directive >= 0) ++i;
    return i;
  }

  void handle_directive(const Directive& d) {
    const auto& n = d.name;
    if (n == "if" || n == "ifdef" || n == "ifndef") {
      conds_.push_back(Cond{st_, std::nullopt, d.start_line});
    } else if (n == "elif" || n == "else") {
      if (conds_.empty()) throw DanglingEndif(file_ + ":" + std::to_string(d.start_line));
      auto& c = conds_.back();
      if (!c.first_end) c.first_end = st_;
      st_ = c.saved;
    } else if (n == "endif") {
      if (conds_.empty()) throw DanglingEndif(file_ + ":" + std::to_string(d.start_line));
      auto& c = conds_.back();
      if (c.first_end) st_ = std::move(*c.first_end);
      conds_.pop_back();
    } else if (n == "define" && !st_.active && st_.depth == 0) {
      emit_define(d);
    }
  }

  void emit_define(const Directive& d) {
    std::size_t name_tok = d.first_token + 2;
    if (name_tok >= d.end_token || tok(name_tok).kind != TokenKind::identifier) return;
    const Token& nt = tok(name_tok);
    CodeElement e;
    e.name = std::string(nt.text);
    bool fn_like = name_tok + 1 < d.end_token && is(tok(name_tok + 1), "(") &&
                   tok(name_tok + 1).offset == nt.offset + nt.text.size();
    e.kind = fn_like ? ElementKind::macro_function : ElementKind::macro_variable;
    e.valueless_define = name_tok + 1 == d.end_token;
    e.start_line = d.start_line;
    e.end_line = d.end_line;
    push(std::move(e), d.first_token);
  }

  std::size_t handle_token(std::size_t i) {
    const Token& t = tok(i);
    State& s = st_;
    last_code_token_ = i;
    if (!s.active && s.depth == 0) {
      if (is(t, "}")) {
        if (s.extern_c == 0) throw UnbalancedBraces(file_ + ":" + std::to_string(t.line));
        --s.extern_c;
        emit_other(i, i);
        return i + 1;
      }
      if (is(t, "extern")) {
        std::size_t a = next_code(i + 1);
        std::size_t b = a < lex_.tokens.size() ? next_code(a + 1) : a;
        if (b < lex_.tokens.size() && tok(a).kind == TokenKind::string && is(tok(b), "{")) {
          ++s.extern_c;
          emit_other(i, b);
          last_code_token_ = b;
          return b + 1;
        }
      }
    }
    if (!s.active) {
      s.active = true;
      s.start_tok = i;
      s.toks.clear();
      s.body = BodyKind::none;
      s.knr = false;
      s.paren = 0;
    }
    if (s.depth <= 1) s.toks.push_back({i, s.depth});
    if (s.depth == 0) {
      if (is(t, "(") || is(t, "[")) ++s.paren;
      if (is(t, ")") || is(t, "]")) --s.paren;
      if (s.paren == 0 && s.body == BodyKind::none && t.kind == TokenKind::identifier &&
          is_knr_type_word(t.text) && s.toks.size() >= 2 &&
          is(tok(s.toks[s.toks.size() - 2].tok), ")"))
        s.knr = true;
    }
    if (is(t, "{")) {
      if (s.depth == 0) {
        if (s.body == BodyKind::none) {
          const Token* prev = nullptr;
          for (auto it = s.toks.rbegin() + 1; it != s.toks.rend(); ++it)
            if (it->depth == 0) {
              prev = &tok(it->tok);
              break;
            }
          if (s.knr || (prev && is(*prev, ")")))
            s.body = BodyKind::function;
          else if (prev && is(*prev, "="))
            s.body = BodyKind::initializer;
          else
            s.body = BodyKind::aggregate;
        }
        s.open_line = t.line;
      }
      ++s.depth;
      return i + 1;
    }
    if (is(t, "}")) {
      --s.depth;
      if (s.depth == 0 && s.body == BodyKind::function) finish(i);
      return i + 1;
    }
    if (s.depth == 0 && s.paren == 0 && is(t, ";") && !s.knr) finish(i);
    return i + 1;
  }

  void finish(std::size_t end_tok) {
    auto c = classify();
    CodeElement e;
    e.kind = c.kind;
    e.name = std::move(c.name);
    e.aliases = std::move(c.aliases);
    e.is_static = c.is_static;
    e.is_declaration = c.is_declaration;
    e.is_extern = c.is_extern;
    e.start_line = tok(st_.start_tok).line;
    e.end_line = end_line_of(end_tok);
    push(std::move(e), st_.start_tok);
    st_.active = false;
    st_.toks.clear();
    st_.body = BodyKind::none;
    st_.knr = false;
    st_.paren = 0;
  }

  int end_line_of(std::size_t t) const {
    const Token& k = tok(t);
    int l = k.line;
    for (char ch : k.text)
      if (ch == '\n') ++l;
    return l;
  }

  void emit_other(std::size_t first, std::size_t last) {
    CodeElement e;
    e.start_line = tok(first).line;
    e.end_line = end_line_of(last);
    push(std::move(e), first);
  }

  void push(CodeElement e, std::size_t first_tok) {
    e.file = file_;
    if (auto it = by_first_token_.find(first_tok); it != by_first_token_.end()) {
      auto& prev = out_[it->second];
      prev.end_line = std::max(prev.end_line, e.end_line);
      return;
    }
    by_first_token_.emplace(first_tok, out_.size());
    out_.push_back(std::move(e));
  }

  Classified classify() const {
    Classified c;
    TokRange top;
    std::vector<TokRange> bodies;
    std::size_t first_brace = std::string::npos;
    std::size_t first_body_end = std::string::npos;
    for (auto [ti, depth] : st_.toks) {
      const Token* t = &tok(ti);
      if (depth == 0) {
        if (is(*t, "{")) {
          if (first_brace == std::string::npos) first_brace = top.size();
          bodies.emplace_back();
        }
        top.push_back(t);
      } else if (depth == 1) {
        if (is(*t, "}")) {
          if (first_body_end == std::string::npos) first_body_end = top.size();
          top.push_back(t);
        } else if (!bodies.empty()) {
          bodies.back().push_back(t);
        }
      }
    }
    if (!top.empty() && is(*top.back(), ";")) top.pop_back();
    std::size_t decl_end = first_brace == std::string::npos ? top.size() : first_brace;
    for (std::size_t i = 0; i < top.size(); ++i) {
      if (i >= decl_end && st_.body != BodyKind::aggregate) break;
      if (is(*top[i], "=")) break;
      if (is(*top[i], "static")) c.is_static = true;
      if (is(*top[i], "extern")) c.is_extern = true;
    }
    bool is_typedef = std::any_of(top.begin(), top.end(),
                                  [](const Token* t) { return is(*t, "typedef"); });

    auto add_declarators = [&](const TokRange& r, bool first_is_name) {
      for (auto& seg : split_commas(r)) {
        auto d = parse_declarator(seg);
        if (!d.name) continue;
        if (first_is_name && c.name.empty())
          c.name = std::string(d.name->text);
        else
          c.aliases.emplace_back(d.name->text);
      }
    };

    if (top.empty()) return c;

    if (st_.body == BodyKind::function) {
      TokRange header(top.begin(), top.begin() + static_cast<long>(decl_end));
      auto d = parse_declarator(header);
      if (d.name) c.name = std::string(d.name->text);
      c.kind = (st_.knr || !d.name || d.position == 0) ? ElementKind::other : ElementKind::function;
      return c;
    }
    if (st_.body == BodyKind::initializer) {
      TokRange r;
      for (std::size_t i = 0; i < top.size(); ++i) r.push_back(top[i]);
      add_declarators(r, true);
      c.kind = is_typedef ? ElementKind::type_def : ElementKind::variable;
      return c;
    }
    if (st_.body == BodyKind::aggregate) {
      std::string tag;
      bool is_enum = false;
      bool found_kw = false;
      for (std::size_t i = decl_end; i-- > 0;) {
        auto w = top[i]->text;
        if (w == "struct" || w == "union" || w == "enum") {
          found_kw = true;
          is_enum = w == "enum";
          if (i + 1 < decl_end && is_ident(*top[i + 1])) tag = std::string(top[i + 1]->text);
          break;
        }
      }
      if (!found_kw) return c;
      TokRange after;
      if (first_body_end != std::string::npos)
        for (std::size_t i = first_body_end + 1; i < top.size(); ++i) {
          if (is(*top[i], "{")) break;
          after.push_back(top[i]);
        }
      std::vector<std::string> enumerators;
      if (is_enum && !bodies.empty()) {
        bool expect = true;
        int p = 0;
        for (auto* t : bodies.front()) {
          if (is(*t, "(")) ++p;
          if (is(*t, ")")) --p;
          if (p == 0 && is(*t, ",")) {
            expect = true;
            continue;
          }
          if (expect && is_ident(*t)) enumerators.emplace_back(t->text);
          expect = false;
        }
      }
      c.kind = ElementKind::type_def;
      if (is_typedef) {
        add_declarators(after, true);
        if (c.name.empty()) c.name = tag;
        else if (!tag.empty()) c.aliases.insert(c.aliases.begin(), tag);
      } else if (!tag.empty()) {
        c.name = tag;
        add_declarators(after, false);
      } else if (!after.empty()) {
        add_declarators(after, true);
        c.kind = ElementKind::variable;
      }
      if (c.name.empty())
        c.name = "anon@" + file_ + ":" + std::to_string(tok(st_.start_tok).line);
      for (auto& e : enumerators) c.aliases.push_back(std::move(e));
      return c;
    }

    // No body: prototype, variable, typedef or forward declaration.
    if (top.size() == 2 && is_ident(*top[1]) &&
        (is(*top[0], "struct") || is(*top[0], "union") || is(*top[0], "enum"))) {
      c.kind = ElementKind::type_def;
      c.name = std::string(top[1]->text);
      c.is_declaration = true;
      return c;
    }
    auto segs = split_commas(top);
    if (segs.empty()) return c;
    auto d0 = parse_declarator(segs.front());
    if (!d0.name) return c;
    if (is_typedef) {
      c.kind = ElementKind::type_def;
      add_declarators(top, true);
      return c;
    }
    if (d0.is_function) {
      c.kind = d0.position == 0 ? ElementKind::other : ElementKind::function;
      c.name = std::string(d0.name->text);
      c.is_declaration = c.kind == ElementKind::function;
      for (std::size_t i = 1; i < segs.size(); ++i) {
        auto d = parse_declarator(segs[i]);
        if (d.name) c.aliases.emplace_back(d.name->text);
      }
      return c;
    }
    if (d0.position == 0 && segs.size() == 1 && segs.front().size() == 1) {
      // A lone identifier statement, typically a macro invocation.
      c.name = std::string(d0.name->text);
      return c;
    }
    c.kind = ElementKind::variable;
    add_declarators(top, true);
    bool has_init = std::any_of(top.begin(), top.end(), [](const Token* t) { return is(*t, "="); });
    c.is_declaration = c.is_extern && !has_init;
    return c;
  }

  // Sort, then fold elements whose spans touch the same lines into one.
  std::vector<CodeElement> normalize() {
    std::stable_sort(out_.begin(), out_.end(), [](const CodeElement& a, const CodeElement& b) {
      return a.start_line < b.start_line;
    });
    std::vector<CodeElement> merged;
    for (auto& e : out_) {
      if (!merged.empty() && e.start_line <= merged.back().end_line) {
        auto& m = merged.back();
        m.end_line = std::max(m.end_line, e.end_line);
        if (m.name.empty()) {
          m.name = e.name;
          m.kind = e.kind;
        } else if (!e.name.empty() && e.name != m.name) {
          m.aliases.push_back(e.name);
        }
        for (auto& a : e.aliases) m.aliases.push_back(a);
        m.is_declaration = m.is_declaration && e.is_declaration;
        m.valueless_define = false;
        continue;
      }
      merged.push_back(std::move(e));
    }
    for (auto& e : merged) e.text_hash = fnv1a64_hex(span_text(lines_, e.start_line, e.end_line));
    return merged;
  }

  const LexResult& lex_;
  const std::vector<std::string>& lines_;
  const std::string& file_;
  State st_;
  std::vector<Cond> conds_;
  std::vector<CodeElement> out_;
  std::unordered_map<std::size_t, std::size_t> by_first_token_;
  std::size_t last_code_token_ = 0;
};

std::vector<std::string> condition_symbols(const LexResult& lex, const Directive& d) {
  std::vector<std::string> out;
  for (std::size_t i = d.first_token + 2; i < d.end_token; ++i) {
    const Token& t = lex.tokens[i];
    if (t.kind != TokenKind::identifier || t.text == "defined") continue;
    std::string s(t.text);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<CodeElement> scan_lexed(const LexResult& lex, const std::vector<std::string>& lines,
                                    const std::string& file) {
  auto elements = Scanner(lex, lines, file).run();
  if (auto guard = detect_include_guard(lex)) {
    std::erase_if(elements, [&](const CodeElement& e) {
      return e.start_line == guard->define_line && e.name == guard->symbol;
    });
  }
  return elements;
}

std::vector<CodeElement> scan_elements(std::string_view source, const std::string& file) {
  auto lex = lex_c(source);
  auto lines = split_lines(source);
  return scan_lexed(lex, lines, file);
}

std::optional<IncludeGuard> detect_include_guard(const LexResult& lex) {
  const auto& ds = lex.directives;
  if (ds.size() < 3) return std::nullopt;
  const auto& first = ds.front();
  const auto& second = ds[1];
  const auto& last = ds.back();
  if (first.name != "ifndef" || second.name != "define" || last.name != "endif")
    return std::nullopt;
  if (first.first_token != 0) return std::nullopt;
  if (last.end_token != lex.tokens.size()) return std::nullopt;
  auto sym = [&](const Directive& d) -> std::string_view {
    std::size_t i = d.first_token + 2;
    return i < d.end_token ? lex.tokens[i].text : std::string_view{};
  };
  if (sym(first).empty() || sym(first) != sym(second)) return std::nullopt;
  // The #ifndef must be closed by the final #endif.
  int depth = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& n = ds[i].name;
    if (n == "if" || n == "ifdef" || n == "ifndef") ++depth;
    if (n == "else" || n == "elif") {
      if (depth == 1) return std::nullopt;
    }
    if (n == "endif" && --depth == 0 && i + 1 != ds.size()) return std::nullopt;
  }
  if (depth != 0) return std::nullopt;
  return IncludeGuard{std::string(sym(first)), first.start_line, second.start_line,
                      last.start_line};
}

std::vector<ConditionalBlock> detect_blocks_lexed(const LexResult& lex,
                                                  std::span<const CodeElement> elements,
                                                  const std::string& file) {
  auto guard = detect_include_guard(lex);
  struct Open {
    ConditionalBlock block;
    bool is_guard;
  };
  std::vector<Open> stack;
  std::vector<ConditionalBlock> out;
  for (std::size_t di = 0; di < lex.directives.size(); ++di) {
    const auto& d = lex.directives[di];
    const auto& n = d.name;
    if (n == "if" || n == "ifdef" || n == "ifndef") {
      Open o;
      o.block.file = file;
      o.block.start_line = d.start_line;
      o.block.guard_symbols = condition_symbols(lex, d);
      o.is_guard = guard && di == 0;
      stack.push_back(std::move(o));
    } else if (n == "elif" || n == "else") {
      if (stack.empty()) throw DanglingEndif(file + ":" + std::to_string(d.start_line));
      auto& b = stack.back().block;
      b.branch_lines.push_back(d.start_line);
      for (auto& s : condition_symbols(lex, d))
        if (std::find(b.guard_symbols.begin(), b.guard_symbols.end(), s) == b.guard_symbols.end())
          b.guard_symbols.push_back(s);
    } else if (n == "endif") {
      if (stack.empty()) throw DanglingEndif(file + ":" + std::to_string(d.start_line));
      auto o = std::move(stack.back());
      stack.pop_back();
      if (o.is_guard) continue;
      o.block.end_line = d.end_line;
      for (const auto& e : elements)
        if (e.start_line <= o.block.end_line && e.end_line >= o.block.start_line)
          o.block.contained_elements.push_back(e.id());
      out.push_back(std::move(o.block));
    }
  }
  if (!stack.empty())
    throw UnterminatedConditional(file + ":" + std::to_string(stack.back().block.start_line));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.start_line < b.start_line;
  });
  return out;
}

std::vector<ConditionalBlock> detect_conditional_blocks(std::string_view source,
                                                        const std::string& file) {
  auto lex = lex_c(source);
  auto lines = split_lines(source);
  // Directive structure is validated first so malformed nesting reports the
  // conditional error rather than a brace error.
  detect_blocks_lexed(lex, {}, file);
  auto elements = scan_lexed(lex, lines, file);
  return detect_blocks_lexed(lex, elements, file);
}

ScannedFile scan_file(std::string text, std::string path) {
  ScannedFile f;
  f.path = std::move(path);
  f.text = std::make_shared<const std::string>(std::move(text));
  f.lines = split_lines(*f.text);
  f.lex = lex_c(*f.text);
  f.guard = detect_include_guard(f.lex);
  detect_blocks_lexed(f.lex, {}, f.path);
  f.elements = scan_lexed(f.lex, f.lines, f.path);
  f.blocks = detect_blocks_lexed(f.lex, f.elements, f.path);
  return f;
}

std::vector<bool> blank_or_comment_lines(const ScannedFile& file) {
  std::vector<bool> out(file.lex.line_count, false);
  for (int i = 0; i < file.lex.line_count; ++i)
    out[i] = !file.lex.code_lines[i] && !file.lex.directive_lines[i];
  return out;
}

std::string element_signature(const CodeElement& element, const std::vector<std::string>& lines) {
  std::string text = span_text(lines, element.start_line, element.end_line);
  if (element.kind != ElementKind::function || element.is_declaration) return text;
  auto lex = lex_c(text);
  std::string sig;
  const Token* prev = nullptr;
  int paren = 0;
  for (const auto& t : lex.tokens) {
    if (t.directive >= 0) continue;
    if (paren == 0 && t.text == "{") break;
    if (t.text == "(") ++paren;
    if (t.text == ")") --paren;
    if (prev && prev->offset + prev->text.size() != t.offset) sig += ' ';
    sig += t.text;
    prev = &t;
  }
  return sig;
}

// ---------------------------------------------------------------------------

std::vector<const IncludeEdge*> IncludeGraph::edges_from(std::string_view includer) const {
  std::vector<const IncludeEdge*> out;
  for (const auto& e : edges)
    if (e.includer == includer) out.push_back(&e);
  return out;
}

bool IncludeGraph::has_node(std::string_view path) const {
  return std::binary_search(nodes.begin(), nodes.end(), path);
}

namespace {

bool is_c_source_path(const fs::path& p) {
  auto ext = p.extension().string();
  return ext == ".c" || ext == ".h";
}

}  // namespace

IncludeGraph build_include_graph(const fs::path& project_root,
                                 const std::vector<fs::path>& include_dirs) {
  IncludeGraph g;
  g.root = project_root;
  if (!fs::is_directory(project_root))
    throw IoError("project root is not a directory: " + project_root.string());
  for (auto it = fs::recursive_directory_iterator(project_root);
       it != fs::recursive_directory_iterator(); ++it) {
    const auto& p = it->path();
    if (it->is_directory() && p.filename().string().starts_with(".")) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file() && is_c_source_path(p))
      g.nodes.push_back(relative_string(p, project_root));
  }
  std::sort(g.nodes.begin(), g.nodes.end());

  auto resolve = [&](const std::string& includer, const std::string& name)
      -> std::optional<std::string> {
    std::vector<fs::path> candidates;
    candidates.push_back(fs::path(includer).parent_path() / name);
    for (const auto& dir : include_dirs) {
      fs::path rel = dir.is_absolute() ? fs::path(relative_string(dir, project_root)) : dir;
      candidates.push_back(rel / name);
    }
    candidates.push_back(fs::path(name));
    for (auto& c : candidates) {
      auto norm = c.lexically_normal().generic_string();
      if (g.has_node(norm)) return norm;
    }
    return std::nullopt;
  };

  for (const auto& node : g.nodes) {
    auto text = read_source_file(project_root / node, g.warnings);
    auto lex = lex_c(text);
    for (const auto& d : lex.directives) {
      if (d.name != "include") continue;
      IncludeEdge e;
      e.includer = node;
      e.line = d.start_line;
      std::size_t i = d.first_token + 2;
      if (i >= d.end_token) continue;
      const Token& t = lex.tokens[i];
      if (t.kind == TokenKind::string && t.text.size() >= 2) {
        e.spelled = std::string(t.text.substr(1, t.text.size() - 2));
        if (auto r = resolve(node, e.spelled)) {
          e.included = *r;
          e.resolved = true;
          g.edges.push_back(std::move(e));
        } else {
          e.included = e.spelled;
          g.warnings.push_back("MissingHeader(" + node + ", " + e.spelled + ")");
          g.missing.push_back(std::move(e));
        }
      } else if (t.text == "<") {
        std::size_t j = i + 1;
        while (j < d.end_token && lex.tokens[j].text != ">") ++j;
        if (j >= d.end_token) continue;
        auto begin = t.offset + 1;
        e.spelled = std::string(text.substr(begin, lex.tokens[j].offset - begin));
        e.included = e.spelled;
        e.is_system = true;
        g.edges.push_back(std::move(e));
      }
    }
  }

  // Include cycles among project files.
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index[g.nodes[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::set<std::size_t> self_loops;
  for (const auto& e : g.edges) {
    if (e.is_system) continue;
    auto a = index.at(e.includer), b = index.at(e.included);
    pairs.emplace_back(a, b);
    if (a == b) self_loops.insert(a);
  }
  for (const auto& comp : strongly_connected_components(make_adjacency(g.nodes.size(), pairs))) {
    if (comp.size() > 1 || self_loops.count(comp.front())) {
      std::vector<std::string> names;
      for (auto v : comp) names.push_back(g.nodes[v]);
      g.cycles.push_back(std::move(names));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> CallGraph::node_of(std::string_view element_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == element_id) return i;
  return std::nullopt;
}

bool CallGraph::has_edge(std::size_t from, std::size_t to) const {
  return std::find(edges.begin(), edges.end(), std::make_pair(from, to)) != edges.end();
}

std::vector<std::string_view> referenced_identifiers(const CodeElement& element,
                                                     const LexResult& lex) {
  std::vector<std::string_view> out;
  auto first = std::lower_bound(lex.tokens.begin(), lex.tokens.end(), element.start_line,
                                [](const Token& t, int line) { return t.line < line; });
  for (auto it = first; it != lex.tokens.end() && it->line <= element.end_line; ++it) {
    if (!is_ident(*it)) continue;
    if (it != lex.tokens.begin()) {
      auto prev = std::prev(it)->text;
      if (prev == "." || prev == "->") continue;
    }
    out.push_back(it->text);
  }
  return out;
}

namespace {

bool is_macro(ElementKind k) {
  return k == ElementKind::macro_function || k == ElementKind::macro_variable;
}

CallGraph build_graph(std::span<const CodeElement> elements, const SourceMap& sources,
                      bool calls_only) {
  CallGraph g;
  auto is_node = [&](const CodeElement& e) {
    if (e.is_declaration) return false;
    if (calls_only)
      return e.kind == ElementKind::function || e.kind == ElementKind::macro_function;
    return true;
  };
  std::unordered_map<std::string, std::vector<std::size_t>> by_name;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    if (!is_node(e)) continue;
    std::size_t node = g.nodes.size();
    g.nodes.push_back(e.id());
    g.element_index.push_back(i);
    if (!e.name.empty()) by_name[e.name].push_back(node);
    if (!calls_only)
      for (const auto& a : e.aliases) by_name[a].push_back(node);
  }
  for (const auto& [name, nodes] : by_name) {
    bool macro = false, plain = false;
    for (auto n : nodes) {
      const auto& e = elements[g.element_index[n]];
      if (e.name != name) continue;
      (is_macro(e.kind) ? macro : plain) = true;
    }
    if (macro && plain) g.ambiguous_names.push_back(name);
  }
  std::sort(g.ambiguous_names.begin(), g.ambiguous_names.end());

  std::map<std::string, LexResult> lexed;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const auto& e = elements[g.element_index[n]];
    auto src = sources.find(e.file);
    if (src == sources.end()) continue;
    auto lit = lexed.find(e.file);
    if (lit == lexed.end()) lit = lexed.emplace(e.file, lex_c(src->second)).first;
    std::set<std::string_view> seen;
    for (auto ident : referenced_identifiers(e, lit->second)) {
      if (!seen.insert(ident).second) continue;
      auto hit = by_name.find(std::string(ident));
      if (hit == by_name.end()) continue;
      // Statics are visible only inside their own file.
      std::vector<std::size_t> targets;
      for (auto t : hit->second) {
        const auto& te = elements[g.element_index[t]];
        if (te.is_static && te.file != e.file) continue;
        targets.push_back(t);
      }
      for (auto t : targets)
        if (t != n) g.edges.emplace_back(n, t);
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  g.scc_groups = strongly_connected_components(make_adjacency(g.nodes.size(), g.edges));
  return g;
}

}  // namespace

CallGraph build_call_graph(std::span<const CodeElement> elements, const SourceMap& sources) {
  return build_graph(elements, sources, true);
}

CallGraph build_reference_graph(std::span<const CodeElement> elements, const SourceMap& sources) {
  return build_graph(elements, sources, false);
}

// ---------------------------------------------------------------------------

DeclPairing pair_decls_defs(std::span<const CodeElement> elements) {
  DeclPairing out;
  auto compatible = [](ElementKind a, ElementKind b) {
    return a == b && (a == ElementKind::function || a == ElementKind::variable ||
                      a == ElementKind::type_def);
  };
  std::unordered_map<std::string, std::vector<std::size_t>> defs;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    if (e.is_declaration || e.name.empty()) continue;
    defs[e.name].push_back(i);
    if (e.kind == ElementKind::type_def)
      for (const auto& a : e.aliases) defs[a].push_back(i);
  }

  // Non-static definitions of one name in more than one file clash.
  // Duplicates inside a single file are alternative conditional branches.
  std::set<std::string> ambiguous;
  for (const auto& [name, idxs] : defs) {
    std::set<std::string> files;
    for (auto i : idxs) {
      const auto& e = elements[i];
      if (e.is_static || e.name != name) continue;
      if (e.kind != ElementKind::function && e.kind != ElementKind::variable) continue;
      files.insert(e.file);
    }
    if (files.size() > 1) ambiguous.insert(name);
  }
  out.ambiguous.assign(ambiguous.begin(), ambiguous.end());

  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& d = elements[i];
    if (!d.is_declaration || d.name.empty()) continue;
    auto hit = defs.find(d.name);
    std::optional<std::size_t> local, global;
    if (hit != defs.end()) {
      for (auto j : hit->second) {
        const auto& def = elements[j];
        if (!compatible(d.kind, def.kind)) continue;
        if (def.file == d.file && !local) local = j;
        if (!def.is_static && !global) global = j;
      }
    }
    // A static prototype only pairs within its file; otherwise prefer the
    // same-file definition, then the unique external one.
    std::optional<std::size_t> pick = local;
    if (!pick && !d.is_static && !ambiguous.count(d.name)) pick = global;
    if (pick)
      out.pairs.emplace_back(i, *pick);
    else
      out.externals.push_back(i);
  }
  return out;
}

void require_unambiguous(const DeclPairing& pairing) {
  if (!pairing.ambiguous.empty()) throw AmbiguousDefinition(pairing.ambiguous.front());
}

// ---------------------------------------------------------------------------

std::vector<Atom> build_atoms(std::span<const CodeElement> elements,
                              std::span<const ConditionalBlock> blocks) {
  struct Span {
    int start, end;
    bool conditional;
  };
  std::vector<Span> spans;
  for (const auto& e : elements) spans.push_back({e.start_line, e.end_line, false});
  for (const auto& b : blocks) spans.push_back({b.start_line, b.end_line, true});
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.start != b.start ? a.start < b.start : a.end > b.end;
  });
  std::vector<Atom> atoms;
  for (const auto& s : spans) {
    if (!atoms.empty() && s.start <= atoms.back().end_line) {
      atoms.back().end_line = std::max(atoms.back().end_line, s.end);
      atoms.back().conditional = atoms.back().conditional || s.conditional;
      continue;
    }
    Atom a;
    a.start_line = s.start;
    a.end_line = s.end;
    a.conditional = s.conditional;
    atoms.push_back(a);
  }
  for (std::size_t i = 0; i < elements.size(); ++i) {
    auto it = std::upper_bound(atoms.begin(), atoms.end(), elements[i].start_line,
                               [](int line, const Atom& a) { return line < a.start_line; });
    if (it != atoms.begin()) std::prev(it)->elements.push_back(i);
  }
  return atoms;
}

}  // namespace seamstress
