#include "properties.hpp"

#include <algorithm>
#include <random>
#include <regex>
#include <set>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"

using namespace seamstress;

namespace props {

namespace {

template <class A, class B>
void expect_eq(Problems& out, const A& got, const B& want, const std::string& what) {
  if (!(got == want)) out.push_back(what);
}

void expect(Problems& out, bool ok, const std::string& what) {
  if (!ok) out.push_back(what);
}

// Lines of the quoted-include closure of `root`, computed from the raw files.
int expected_merged_lines(const std::map<std::string, std::string>& files, const std::string& root) {
  std::set<std::string> seen;
  int total = 0;
  std::vector<std::string> work{root};
  std::regex inc("^#include \"([^\"]+)\"$");
  while (!work.empty()) {
    auto f = work.back();
    work.pop_back();
    if (!seen.insert(f).second) continue;
    const auto& text = files.at(f);
    total += static_cast<int>(count_lines(text));
    if (f.ends_with(".h")) total -= 3;  // guard directives
    for (auto& line : split_lines(text)) {
      std::smatch m;
      if (std::regex_match(line, m, inc)) {
        --total;
        work.push_back(m[1]);
      }
    }
  }
  return total;
}

std::multiset<std::string> definition_texts(const std::string& text, const std::string& file,
                                            const std::set<std::string>& skip_names) {
  auto s = scan_file(text, file);
  std::multiset<std::string> out;
  for (const auto& e : s.elements)
    if (!e.is_declaration && !skip_names.count(e.name)) out.insert(span_text(s.lines, e.start_line, e.end_line));
  return out;
}

std::string apply_renames(std::string text, const std::map<std::string, std::string>& renames) {
  for (const auto& [from, to] : renames) text = std::regex_replace(text, std::regex("\\b" + from + "\\b"), to);
  return text;
}

}  // namespace

GenProject generate_project(unsigned seed) {
  std::mt19937 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int n_c = pick(2, 4), n_h = pick(1, 3);
  int n_pub = pick(3, 8);
  GenProject g;

  // Public functions and their owning .c file.
  std::vector<int> owner(n_pub);
  for (auto& o : owner) o = pick(0, n_c - 1);

  for (int h = 0; h < n_h; ++h) {
    std::string guard = "H" + std::to_string(h) + "_H";
    std::string s = "#ifndef " + guard + "\n#define " + guard + "\n";
    if (h > 0) s += "#include \"h" + std::to_string(pick(0, h - 1)) + ".h\"\n";
    s += "#include <stddef.h>\n\n";
    s += "typedef struct rec" + std::to_string(h) + " {\n  int v;\n} rec" + std::to_string(h) + "_t;\n\n";
    s += "#define LIMIT" + std::to_string(h) + " " + std::to_string(pick(1, 99)) + "\n";
    s += "extern int counter" + std::to_string(h) + ";\n";
    if (h == 0)
      for (int f = 0; f < n_pub; ++f)
        s += "/* pub " + std::to_string(f) + " */\nint pub" + std::to_string(f) + "(int x);\n";
    s += "#endif\n";
    g.files["h" + std::to_string(h) + ".h"] = s;
  }

  for (int c = 0; c < n_c; ++c) {
    std::string s = "/* unit " + std::to_string(c) + " */\n";
    s += "#include \"h" + std::to_string(n_h - 1) + ".h\"\n";
    s += "#include \"h0.h\"\n";
    if (pick(0, 1)) s += "#include \"h" + std::to_string(pick(0, n_h - 1)) + ".h\"\n";
    s += "#include <stdio.h>\n\n";
    bool feature = pick(0, 1);
    if (feature) s += "#define FEAT" + std::to_string(c) + "\n";
    s += "static int helper(int v);\n\n";

    std::vector<std::string> pieces;
    auto call_some = [&]() {
      std::string body;
      int calls = pick(0, 3);
      for (int k = 0; k < calls; ++k) body += "  x += pub" + std::to_string(pick(0, n_pub - 1)) + "(x - 1);\n";
      if (pick(0, 1)) body += "  x += helper(x);\n";
      return body;
    };
    for (int f = 0; f < n_pub; ++f) {
      if (owner[f] != c) continue;
      pieces.push_back("int pub" + std::to_string(f) + "(int x)\n{\n  if (x <= 0) return 0;\n" + call_some() +
                       "  return x + LIMIT0;\n}\n");
    }
    pieces.push_back("static int helper(int v)\n{\n  rec0_t r;\n  r.v = v;\n  return r.v;\n}\n");
    if (c < n_h) pieces.push_back("int counter" + std::to_string(c) + " = " + std::to_string(c) + ";\n");
    if (feature)
      pieces.push_back("#ifdef FEAT" + std::to_string(c) + "\nint feat_fn" + std::to_string(c) +
                       "(void) { return helper(1); }\n#else\nint feat_fn" + std::to_string(c) +
                       "(void) { return 0; }\n#endif\n");
    if (pick(0, 1)) pieces.push_back("#ifdef TRACE" + std::to_string(c) + "\nstatic int trace_level;\n#endif\n");
    std::shuffle(pieces.begin(), pieces.end(), rng);
    for (const auto& p : pieces) s += p + "\n";
    g.files["c" + std::to_string(c) + ".c"] = s;
  }
  return g;
}

Problems check_preprocess(const GenProject& g, const fs::path& dir) {
  Problems out;
  for (const auto& [rel, text] : g.files) write_file_atomic(dir / rel, text);

  auto project = load_project(dir);
  for (const auto& root : project.roots) {
    auto merged = merge_includes(project, root);
    expect_eq(out, static_cast<int>(merged.lines.size()), expected_merged_lines(g.files, root),
              root + ": merged line count");
    // Every merged line is a distinct original line with identical text.
    std::set<std::pair<std::string, int>> origins;
    for (const auto& l : merged.lines) {
      if (l.file.empty() || !origins.insert({l.file, l.line}).second ||
          split_lines(g.files.at(l.file))[static_cast<std::size_t>(l.line - 1)] != l.text) {
        out.push_back(root + ": merged line without a unique origin: " + l.text);
        break;
      }
    }
  }

  auto r = preprocess_project(dir);
  expect_eq(out, r.modules.size(), project.roots.size(), "one module per root");
  for (const auto& m : r.modules) {
    const auto text = m.text();
    auto scanned = scan_file(text, m.file_id());
    for (const auto& d : scanned.lex.directives)
      if (d.name == "include" && scanned.lex.tokens[d.first_token + 2].text != "<")
        out.push_back(m.name + ": quoted include left");

    std::set<std::string> defs;
    for (const auto& e : scanned.elements)
      if (!e.is_declaration) defs.insert(e.name);
    for (const auto& e : scanned.elements)
      if (e.is_declaration && defs.count(e.name)) out.push_back(m.name + ": declaration of defined " + e.name);

    expect_eq(out, count_forward_references(m), 0u, m.name + ": forward reference");

    // Same definitions as the original closure, modulo renames.
    std::multiset<std::string> before;
    std::set<std::string> seen;
    std::vector<std::string> work{m.root_file};
    std::set<std::string> extracted(m.feature_defines.begin(), m.feature_defines.end());
    std::regex inc("#include \"([^\"]+)\"");
    while (!work.empty()) {
      auto f = work.back();
      work.pop_back();
      if (!seen.insert(f).second) continue;
      auto renamed = apply_renames(g.files.at(f), m.renames);
      auto part = definition_texts(renamed, f, extracted);
      before.insert(part.begin(), part.end());
      for (auto it = std::sregex_iterator(renamed.begin(), renamed.end(), inc); it != std::sregex_iterator(); ++it)
        work.push_back((*it)[1]);
    }
    expect(out, definition_texts(text, m.file_id(), extracted) == before, m.name + ": definitions changed");

    // Running again on the output is the identity.
    auto again = dir / ".again" / m.name;
    write_file_atomic(again / m.file_id(), text);
    auto r2 = preprocess_project(again);
    expect(out, r2.modules.size() == 1 && r2.modules[0].text() == text, m.name + ": not idempotent");
  }
  return out;
}

Problems check_plan(const std::vector<ModuleSource>& modules, int cap) {
  Problems out;
  auto tag = " at cap " + std::to_string(cap);
  auto plan = make_plan(modules, cap);
  expect(out, make_plan(modules, cap) == plan, "plan not deterministic" + tag);
  for (const auto& m : modules) {
    std::string joined;
    auto units = plan.units_of(m.name);
    std::map<std::string, std::string> unit_of;
    for (auto* u : units) {
      joined += u->text;
      if (!u->oversized && u->line_count() > cap) out.push_back(u->id() + " exceeds the cap" + tag);
      for (const auto& id : u->element_ids) unit_of[id] = u->id();
    }
    expect(out, joined == m.text(), m.name + ": units do not cover the module" + tag);
    for (const auto& e : m.elements()) {
      auto it = unit_of.find(e.id());
      if (it == unit_of.end()) {
        out.push_back(e.id() + " in no unit" + tag);
        continue;
      }
      if (e.end_line > plan.find(it->second)->end_line) out.push_back(e.id() + " split across units" + tag);
    }
    for (const auto& b : m.scan.blocks) {
      bool inside = false;
      for (auto* u : units) inside |= b.start_line >= u->start_line && b.end_line <= u->end_line;
      expect(out, inside, m.name + ": conditional block at line " + std::to_string(b.start_line) + " split" + tag);
    }
    auto cg = build_call_graph(m.elements(), {{m.file_id(), m.text()}});
    for (const auto& scc : cg.scc_groups) {
      std::set<std::string> homes;
      for (auto n : scc) homes.insert(unit_of[cg.nodes[n]]);
      expect(out, homes.size() == 1, m.name + ": recursive group split" + tag);
    }
  }
  return out;
}

Problems check_shrink_arithmetic(int max_cap, int floor_lines) {
  Problems out;
  for (int cap = floor_lines; cap <= max_cap; ++cap) {
    // Overflow: floor(7/8 cap), never below the floor.
    int seventh = (7 * cap) / 8;
    try {
      int got = next_cap_for_overflow(cap, floor_lines);
      if (seventh < floor_lines || got != seventh)
        out.push_back("overflow " + std::to_string(cap) + " -> " + std::to_string(got));
    } catch (const FloorReached&) {
      if (seventh >= floor_lines && seventh < cap) out.push_back("overflow refused at " + std::to_string(cap));
    }
    // Stall: round half up, clamped to the floor.
    int half = cap / 2 + cap % 2;
    int want = std::max(half, floor_lines);
    try {
      int got = next_cap_for_stall(cap, floor_lines);
      if (want >= cap || got != want) out.push_back("stall " + std::to_string(cap) + " -> " + std::to_string(got));
    } catch (const FloorReached&) {
      if (want < cap) out.push_back("stall refused at " + std::to_string(cap));
    }
  }
  return out;
}

const std::vector<PromptBudget> kBudgetProfiles = {{128000, 4096, 0}, {200000, 8192, 0}, {2000000, 8192, 0},
                                                   {8000, 2048, 0},   {16000, 4096, 0},  {32000, 4096, 0}};

TranslationUnit unit_of_lines(int lines, const std::string& fill) {
  TranslationUnit u;
  u.module = "big";
  u.ordinal = 1;
  u.start_line = 1;
  u.end_line = lines;
  for (int i = 0; i < lines; ++i) u.text += fill + "\n";
  u.est_tokens = estimate_tokens(u.text);
  return u;
}

EnvelopeStats random_envelopes(unsigned seed, int count) {
  auto t = PromptTemplates::defaults();
  std::mt19937 rng(seed);
  EnvelopeStats s;
  for (int i = 0; i < count; ++i) {
    auto prof = kBudgetProfiles[rng() % kBudgetProfiles.size()];
    ++s.per_window[prof.context_window];
    prof.memory_tokens = rng() % 2 ? 0 : rng() % (prof.context_window / 2);
    int lines = 1 + static_cast<int>(rng() % 3000);
    auto unit = unit_of_lines(lines, std::string(rng() % 60, 'a') + ";");
    try {
      PromptEnvelope env;
      if (rng() % 2) env = build_translation_prompt(unit, {}, t, prof);
      else env = build_repair_prompt(unit.id(), unit.text, {"src/lib.rs", unit.text}, {}, t, prof);
      if (env.est_tokens + env.projected_output_tokens + prof.memory_tokens + prof.reserved_output > prof.context_window)
        s.problems.push_back("envelope " + std::to_string(i) + " overruns a " + std::to_string(prof.context_window) +
                             " window");
      ++s.built;
    } catch (const BudgetExceeded&) {
      ++s.rejected;
    }
  }
  return s;
}

int first_rejected_lines(const PromptBudget& b, int limit) {
  auto t = PromptTemplates::defaults();
  for (int lines = 1; lines <= limit; ++lines) {
    try {
      build_translation_prompt(unit_of_lines(lines, ""), {}, t, b);
    } catch (const BudgetExceeded&) {
      return lines;
    }
  }
  return 0;
}

// Reference: walk the original lines once, emitting replacements where a
// patch begins. No index arithmetic shared with apply_patches.
std::vector<std::string> walk_oracle(const std::vector<std::string>& lines, const std::vector<RepairPatch>& patches) {
  std::vector<std::string> out;
  int n = static_cast<int>(lines.size());
  for (int i = 1; i <= n + 1; ++i) {
    const RepairPatch* p = nullptr;
    for (const auto& q : patches)
      if (q.start_line == i) p = &q;
    if (p) {
      for (auto& l : split_lines(p->replacement)) out.push_back(l);
      i = std::min(p->end_line, n);
      if (p->start_line == n + 1) break;
      continue;
    }
    if (i <= n) out.push_back(lines[static_cast<std::size_t>(i - 1)]);
  }
  return out;
}

namespace {

bool brute_overlap(const std::vector<RepairPatch>& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      for (int l = ps[i].start_line; l <= ps[i].end_line; ++l)
        if (l >= ps[j].start_line && l <= ps[j].end_line) return true;
  return false;
}

std::string numbered(int n) {
  std::string s;
  for (int i = 1; i <= n; ++i) s += "line " + std::to_string(i) + "\n";
  return s;
}

}  // namespace

PatchStats random_patch_cases(unsigned seed, int count) {
  std::mt19937 rng(seed);
  PatchStats s;
  auto fail = [&](int c, const std::string& what) { s.problems.push_back("case " + std::to_string(c) + ": " + what); };
  for (int c = 0; c < count; ++c) {
    int n = static_cast<int>(rng() % 40);
    auto text = numbered(n);
    auto lines = split_lines(text);
    std::vector<RepairPatch> ps;
    int k = static_cast<int>(rng() % 5);
    bool make_bad = rng() % 4 == 0;
    int cursor = 1;
    for (int i = 0; i < k; ++i) {
      RepairPatch p;
      p.file = "f.rs";
      if (make_bad) {
        p.start_line = 1 + static_cast<int>(rng() % static_cast<unsigned>(n + 3));
        p.end_line = p.start_line + static_cast<int>(rng() % 4);
      } else {
        if (cursor > n + 1) break;
        p.start_line = cursor + static_cast<int>(rng() % 3);
        if (p.start_line > n + 1) break;
        p.end_line = std::min(n + 1, p.start_line + static_cast<int>(rng() % 4));
        cursor = p.end_line + 1;
      }
      int repl = static_cast<int>(rng() % 4);
      for (int r = 0; r < repl; ++r) p.replacement += "new " + std::to_string(c) + "." + std::to_string(r) + "\n";
      ps.push_back(p);
    }
    std::shuffle(ps.begin(), ps.end(), rng);

    bool range_bad = false;
    for (const auto& p : ps)
      if (p.start_line < 1 || p.end_line < p.start_line || p.end_line > n + 1) range_bad = true;
    if (range_bad) {
      try {
        apply_patches(text, ps);
        fail(c, "out-of-range set accepted");
      } catch (const PatchOutOfRange&) {
      }
      ++s.out_of_range;
      continue;
    }
    if (brute_overlap(ps)) {
      try {
        apply_patches(text, ps);
        fail(c, "overlapping set accepted");
      } catch (const OverlappingPatches&) {
      }
      ++s.overlapping;
      continue;
    }
    auto got = split_lines(apply_patches(text, ps));
    if (got != walk_oracle(lines, ps)) fail(c, "differs from the sequential walk");
    long expect_len = n;
    for (const auto& p : ps) {
      int span = p.start_line > n ? 0 : std::min(p.end_line, n) - p.start_line + 1;
      expect_len += static_cast<long>(split_lines(p.replacement).size()) - span;
    }
    if (static_cast<long>(got.size()) != expect_len) fail(c, "length accounting off");
    ++s.applied;
  }
  return s;
}

}  // namespace props
