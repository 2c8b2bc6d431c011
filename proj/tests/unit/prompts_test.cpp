#include "seamstress/prompts.hpp"

#include <gtest/gtest.h>

#include <random>

#include "seamstress/error.hpp"
#include "seamstress/json_schema.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace seamstress;
using nlohmann::json;

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::size_t find_ci(const std::string& hay, const std::string& needle) {
  return lower(hay).find(lower(needle));
}

ModuleSource module_from(const std::string& text, const std::string& name = "m") {
  ModuleSource m;
  m.name = name;
  int n = 0;
  for (auto& l : split_lines(text)) m.lines.push_back({l, name + ".c", ++n});
  m.rescan();
  return m;
}

using props::unit_of_lines;

const PromptBudget kClaude{200000, 8192, 0};
const PromptBudget kLlama{8000, 2048, 0};

}  // namespace

TEST(EstimateTokens, Basics) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  std::string dense;
  for (int i = 0; i < 100; ++i) dense += "    if (node->left != NULL) { count += visit(node->left, depth + 1); }\n";
  ASSERT_GE(dense.size(), 4000u);
  EXPECT_GE(estimate_tokens(dense), 1000u);
  EXPECT_EQ(estimate_tokens("\n\n\n"), 15u);
}

TEST(EstimateTokens, MonotoneInPrefix) {
  auto text = read_fixture("c/ht/ht.c");
  std::mt19937 rng(7);
  for (int i = 0; i < 500; ++i) {
    std::size_t a = rng() % (text.size() + 1), b = rng() % (text.size() + 1);
    if (a > b) std::swap(a, b);
    EXPECT_LE(estimate_tokens(std::string_view(text).substr(0, a)),
              estimate_tokens(std::string_view(text).substr(0, b)));
  }
}

TEST(EstimateTokens, NotBelowRealTokenizer) {
  // cl100k_base counts from tests/tools/count_tokens.py.
  const std::pair<const char*, std::size_t> frozen[] = {
      {"c/bst/bst.c", 893}, {"c/quadtree/quadtree.c", 1394}, {"c/ht/ht.c", 2026}};
  for (auto [file, actual] : frozen) EXPECT_GE(estimate_tokens(read_fixture(file)), actual) << file;
}

TEST(RenderTemplate, SlotsAndSections) {
  std::map<std::string, std::string> slots{{"a", "A"}, {"b", ""}, {"c", "{{a}}"}};
  EXPECT_EQ(render_template("x {{a}} y {{ c }}", slots), "x A y {{a}}");
  EXPECT_EQ(render_template("1\n{{?a}}\nin {{a}}\n{{/a}}\n2", slots), "1\nin A\n2");
  EXPECT_EQ(render_template("1\n{{?b}}\nin {{b}}\n{{/b}}\n2", slots), "1\n2");
  EXPECT_EQ(render_template("[{{?a}}{{?b}}no{{/b}}yes{{/a}}]", slots), "[yes]");
  EXPECT_THROW(render_template("{{zzz}}", slots), TemplateError);
  EXPECT_THROW(render_template("{{?a}} open", slots), TemplateError);
  EXPECT_THROW(render_template("{{?a}}{{/b}}", slots), TemplateError);
  EXPECT_THROW(render_template("{{a", slots), TemplateError);
}

TEST(Templates, DefaultsAreValid) {
  auto t = PromptTemplates::defaults();
  EXPECT_NO_THROW(t.validate());
  EXPECT_TRUE(rules_complete(render_rules(t.rules)));
  t.translate = "no code slot {{rules}}";
  EXPECT_THROW(t.validate(), TemplateError);
}

TEST(Templates, OverridesAndMandatoryRules) {
  TempDir dir;
  dir.write("repair.tmpl", "fix {{file}}\n{{log}}\n{{code}}\n");
  dir.write("my_rules.txt", "# comment\n\nPrefer iterators over index loops.\n");
  auto t = PromptTemplates::load(dir.path(), dir / "my_rules.txt");
  EXPECT_EQ(t.repair, "fix {{file}}\n{{log}}\n{{code}}\n");
  EXPECT_EQ(t.translate, PromptTemplates::defaults().translate);
  ASSERT_EQ(t.rules.size(), 4u);
  EXPECT_EQ(t.rules.back(), "Prefer iterators over index loops.");
  EXPECT_TRUE(rules_complete(render_rules(t.rules)));

  dir.write("bad.tmpl", "");
  dir.write("translate.tmpl", "{{rules}} {{code}} {{?context}}");
  EXPECT_THROW(PromptTemplates::load(dir.path(), std::nullopt), TemplateError);
  EXPECT_THROW(PromptTemplates::load(std::nullopt, dir / "missing.txt"), ConfigError);
}

TEST(TranslationPrompt, FirstUnitHasNoContext) {
  auto r = preprocess_project(fixture_path("c/bst"));
  auto plan = make_plan(r.modules, 1000);
  auto t = PromptTemplates::defaults();
  auto env = build_translation_prompt(plan.units[0], {}, t, kClaude);
  EXPECT_EQ(env.kind, PromptKind::translate);
  EXPECT_EQ(env.response_schema_id, "translate_response");
  EXPECT_EQ(find_ci(env.text, "context from other"), std::string::npos);
  EXPECT_NE(env.text.find(plan.units[0].text), std::string::npos);
  ASSERT_EQ(env.body_sections.size(), 1u);
  EXPECT_EQ(env.body_sections[0].first, "code");
  EXPECT_TRUE(rules_complete(env.text));
  EXPECT_EQ(env.est_tokens, estimate_tokens(env.text));
  EXPECT_NO_THROW(schema_by_id(env.response_schema_id));
  // Deterministic.
  auto again = build_translation_prompt(plan.units[0], {}, t, kClaude);
  EXPECT_EQ(again, env);
  EXPECT_EQ(again.digest(), env.digest());
}

TEST(TranslationPrompt, SectionOrderAndContext) {
  auto m = module_from(
      "int insert_node(int *root, int v)\n{\n  return v;\n}\n\n"
      "int grow(int *root)\n{\n  return insert_node(root, 3);\n}\n");
  std::vector<ModuleSource> mods{m};
  SegmentPlan plan;
  plan.units = plan_segments(m, 5);
  ASSERT_EQ(plan.units.size(), 2u);
  auto index = build_project_index(plan, mods);
  MetadataStore store;
  for (const auto& u : plan.units) store.put_unit(emit_unit_metadata(u, m, index));
  auto ctx = select_context(*store.unit("m.2"), store, ContextMode::translate, 10000);
  auto env = build_translation_prompt(plan.units[1], ctx, PromptTemplates::defaults(), kClaude);

  std::vector<std::string> in_order = {
      "strictly adhere to the translation rules",
      "declare all elements as public",
      "use wildcards to import all modules",
      "avoid using unsafe whenever possible",
      "int insert_node(int *root, int v)",
      "respond in chunks of 100 lines",
      "translate only within the range of the C code written below",
      "return insert_node(root, 3);",
  };
  std::size_t last = 0;
  for (const auto& phrase : in_order) {
    auto at = find_ci(env.text, phrase);
    ASSERT_NE(at, std::string::npos) << phrase;
    EXPECT_GE(at, last) << phrase;
    last = at;
  }
  ASSERT_EQ(env.body_sections.size(), 2u);
  EXPECT_EQ(env.body_sections[0].first, "context");
}

TEST(TranslationPrompt, LargeUnitOnSmallWindow) {
  auto t = PromptTemplates::defaults();
  EXPECT_THROW(build_translation_prompt(unit_of_lines(4000), {}, t, kLlama), BudgetExceeded);
  EXPECT_NO_THROW(build_translation_prompt(unit_of_lines(4000), {}, t, kClaude));
  // Memory already in the conversation counts against the window.
  PromptBudget crowded{200000, 8192, 191500};
  EXPECT_THROW(build_translation_prompt(unit_of_lines(10), {}, t, crowded), BudgetExceeded);
}

TEST(RepairPrompt, EmbedsRawLog) {
  const std::string log =
      "error[E0425]: cannot find function `hash_key` in this scope\n"
      "  --> src/ht/unit_2.rs:14:9\n"
      "   |\n"
      "14 |     let h = hash_key(k);\n"
      "   |             ^^^^^^^^ not found in this scope\n";
  SourceFile target{"src/ht/unit_2.rs", "pub fn a() {}\npub fn b() {}\n"};
  auto env = build_repair_prompt("ht.2", log, target, {}, PromptTemplates::defaults(), kClaude);
  EXPECT_NE(env.text.find(log.substr(0, log.size() - 1)), std::string::npos);
  EXPECT_NE(env.text.find("1 | pub fn a() {}\n2 | pub fn b() {}"), std::string::npos);
  EXPECT_NE(find_ci(env.text, "please resolve this error"), std::string::npos);
  EXPECT_EQ(find_ci(env.text, "address"), std::string::npos);
  EXPECT_NE(find_ci(env.text, "the start and end lines that need to be repaired, along with the new code, in JSON"),
            std::string::npos);
  EXPECT_EQ(env.response_schema_id, "repair_response");
  EXPECT_EQ(env.body_sections[0], (std::pair<std::string, std::string>{"log", log.substr(0, log.size() - 1)}));
}

TEST(RepairPrompt, Preconditions) {
  auto t = PromptTemplates::defaults();
  EXPECT_THROW(build_repair_prompt("u.1", "", {"a.rs", ""}, {}, t, kClaude), std::invalid_argument);
  ContextBundle c_side;
  c_side.items.push_back({"f", "int f(void)", "m.c", false, 0});
  EXPECT_THROW(build_repair_prompt("u.1", "error", {"a.rs", ""}, c_side, t, kClaude),
               std::invalid_argument);
}

TEST(RepairPrompt, GiantLogIsTailTruncated) {
  std::string log;
  int i = 0;
  while (estimate_tokens(log) < 50000)
    log += "error[E0308]: mismatched types at line " + std::to_string(++i) + "\n";
  log += "error: could not compile `toy` due to many previous errors\n";
  PromptBudget budget{16000 + 2048, 2048, 0};
  auto env = build_repair_prompt("u.1", log, {"src/lib.rs", "pub mod m;\n"}, {},
                                 PromptTemplates::defaults(), budget);
  EXPECT_LE(env.est_tokens, budget.available());
  EXPECT_GT(env.est_tokens, budget.available() * 9 / 10);
  EXPECT_NE(env.text.find("earlier lines of the compiler log truncated"), std::string::npos);
  EXPECT_NE(env.text.find("could not compile `toy`"), std::string::npos);
  EXPECT_EQ(env.text.find("mismatched types at line 1\n"), std::string::npos);

  PromptBudget tiny{2600, 2048, 0};
  EXPECT_THROW(build_repair_prompt("u.1", log, {"src/lib.rs", ""}, {}, PromptTemplates::defaults(),
                                   tiny),
               BudgetExceeded);
}

TEST(TailTruncate, KeepsLargestFittingTail) {
  std::string log;
  for (int i = 0; i < 200; ++i) log += "line " + std::to_string(i) + "\n";
  EXPECT_EQ(*tail_truncate(log, 100000), log);
  auto cut = tail_truncate(log, 300);
  ASSERT_TRUE(cut);
  EXPECT_LE(estimate_tokens(*cut), 300u);
  auto lines = split_lines(*cut);
  // Marker plus a suffix of the original.
  EXPECT_EQ(lines.back(), "line 199");
  std::string kept = join_lines({lines.begin() + 1, lines.end()});
  EXPECT_EQ(log.substr(log.size() - kept.size()), kept);
  EXPECT_EQ(lines[0], "[... " + std::to_string(200 - (lines.size() - 1)) +
                          " earlier lines of the compiler log truncated ...]");
  // One more line would not fit.
  auto all = split_lines(log);
  std::size_t k = lines.size() - 1;
  std::string more = "[... " + std::to_string(200 - k - 1) +
                     " earlier lines of the compiler log truncated ...]\n" +
                     join_lines({all.end() - static_cast<std::ptrdiff_t>(k + 1), all.end()});
  EXPECT_GT(estimate_tokens(more), 300u);
  EXPECT_FALSE(tail_truncate(log, 3).has_value());
}

TEST(MappingPrompt, BstListsSevenElements) {
  auto r = preprocess_project(fixture_path("c/bst"));
  auto plan = make_plan(r.modules, 1000);
  auto index = build_project_index(plan, r.modules);
  auto meta = emit_unit_metadata(plan.units[0], r.modules[0], index);
  auto env = build_mapping_prompt(meta, plan.units[0].text, {{"src/bst/unit_1.rs", "pub fn f() {}\n"}},
                                  PromptTemplates::defaults());
  auto listed = split_lines(env.body_sections[0].second);
  EXPECT_EQ(listed.size(), 7u);
  for (const auto& e : meta.elements)
    if (!e.is_declaration) EXPECT_NE(env.text.find("- " + e.name + " ("), std::string::npos);
  EXPECT_NE(env.text.find("\"removed\""), std::string::npos);
  EXPECT_NE(env.text.find("### src/bst/unit_1.rs"), std::string::npos);
  EXPECT_EQ(env.response_schema_id, "map_response");
}

TEST(MappingPrompt, EmptyUnitStillValid) {
  UnitMetadata meta;
  meta.unit_id = "m.1";
  auto env = build_mapping_prompt(meta, "#include <stdio.h>\n", {}, PromptTemplates::defaults());
  EXPECT_EQ(env.body_sections[0].second, "(none)");
  EXPECT_EQ(find_ci(env.text, "{{"), std::string::npos);
}

TEST(Multipart, SinglePart) {
  auto doc = assemble_multipart({{1, 1, R"({"rust_code": "pub fn f() {}"})"}}, "translate_response");
  EXPECT_EQ(doc["rust_code"], "pub fn f() {}");
}

TEST(Multipart, SplitIdentity) {
  std::string code;
  for (int i = 0; i < 300; ++i) code += "pub fn f" + std::to_string(i) + "() -> &'static str { \"q\\\"\" }\n";
  json whole = {{"rust_code", code}};
  auto text = whole.dump();
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    int nparts = 1 + static_cast<int>(rng() % 5);
    std::vector<std::size_t> cuts;
    for (int k = 1; k < nparts; ++k) cuts.push_back(rng() % text.size());
    std::sort(cuts.begin(), cuts.end());
    std::vector<LlmResponsePart> parts;
    std::size_t prev = 0;
    for (auto c : cuts) {
      parts.push_back({static_cast<int>(parts.size()) + 1, nparts, text.substr(prev, c - prev)});
      prev = c;
    }
    parts.push_back({static_cast<int>(parts.size()) + 1, nparts, text.substr(prev)});
    EXPECT_EQ(join_parts(parts), text);
    EXPECT_EQ(assemble_multipart(parts, "translate_response"), whole);
  }
}

TEST(Multipart, DecodeFailures) {
  try {
    assemble_multipart({{1, 1, R"({"rust_code": "bad \q escape"})"}}, "translate_response");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("invalid escape", 0), 0u) << e.what();
  }
  EXPECT_EQ(decode_json("{\"a\": \"line\nbreak\"}").status, DecodeStatus::invalid_escape);
  EXPECT_EQ(decode_json(R"({"rust_code": "pub fn)").status, DecodeStatus::incomplete);
  EXPECT_EQ(decode_json(R"({"a": 1} trailing)").status, DecodeStatus::syntax);
  EXPECT_EQ(decode_json("```json\n{\"a\": 1}\n```\n").status, DecodeStatus::ok);
  EXPECT_THROW(assemble_multipart({{2, 2, "{}"}}, "translate_response"), FormatError);
  EXPECT_THROW(assemble_multipart({}, "translate_response"), FormatError);
  try {
    assemble_multipart({{1, 1, R"({"code": "x"})"}}, "translate_response");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("rust_code"), std::string::npos);
  }
}

TEST(FormatRetry, CorrectiveMessage) {
  auto t = PromptTemplates::defaults();
  auto m = format_retry_message(t, "invalid escape: \\q", false);
  EXPECT_NE(m.find("invalid escape: \\q"), std::string::npos);
  EXPECT_NE(find_ci(m, "rewrite the response with correct escape handling"), std::string::npos);
  EXPECT_EQ(find_ci(m, "respond in chunks of 100 lines"), std::string::npos);
  EXPECT_NE(find_ci(format_retry_message(t, "too long", true), "respond in chunks of 100 lines"),
            std::string::npos);
}

TEST(Envelope, JsonRoundTrip) {
  auto env = build_repair_prompt("m.1", "error: x\n", {"src/m/unit_1.rs", "fn a() {}\n"}, {},
                                 PromptTemplates::defaults(), kClaude);
  auto back = PromptEnvelope::from_json(json::parse(env.to_json().dump()));
  EXPECT_EQ(back, env);
  EXPECT_EQ(back.digest(), env.digest());
  auto altered = env;
  altered.text += " ";
  EXPECT_NE(altered.digest(), env.digest());
}

TEST(PromptBudget, RandomEnvelopesRespectWindow) {
  auto s = props::random_envelopes(2024, 1000);
  EXPECT_TRUE(s.problems.empty()) << s.problems.front();
  EXPECT_GT(s.built, 100);
  EXPECT_GT(s.rejected, 100);
}

TEST(PromptBudget, SmallWindowRejectsFiveHundredLines) {
  auto t = PromptTemplates::defaults();
  // Sparsest possible content: blank lines, 5 tokens each.
  int first_rejected = props::first_rejected_lines(kLlama, 1000);
  EXPECT_GE(first_rejected, 450);
  EXPECT_LE(first_rejected, 550);
  // Real C lines are denser, so 500 of them never fit.
  auto ht = split_lines(read_fixture("c/ht/ht.c"));
  TranslationUnit u = unit_of_lines(0);
  for (int i = 0; i < 500; ++i) u.text += ht[i % ht.size()] + "\n";
  u.end_line = 500;
  EXPECT_THROW(build_translation_prompt(u, {}, t, kLlama), BudgetExceeded);
  for (int lines : {700, 4000})
    EXPECT_THROW(build_translation_prompt(unit_of_lines(lines, ""), {}, t, kLlama), BudgetExceeded);
}
