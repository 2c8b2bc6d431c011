#include "seamstress/segment.hpp"

#include <gtest/gtest.h>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"
#include "seamstress/tokens.hpp"
#include "properties.hpp"
#include "test_util.hpp"

using namespace seamstress;

namespace {

ModuleSource module_from(const std::string& text, const std::string& name = "m") {
  ModuleSource m;
  m.name = name;
  int n = 0;
  for (auto& l : split_lines(text)) m.lines.push_back({l, name + ".c", ++n});
  m.rescan();
  return m;
}

// A function definition spanning exactly `lines` lines.
std::string function_of(const std::string& name, int lines, const std::string& call = "") {
  std::string s = "int " + name + "(void)\n{\n";
  for (int i = 0; i < lines - 3; ++i)
    s += (i == 0 && !call.empty()) ? "  " + call + "();\n" : "  (void)0;\n";
  return s + "}\n";
}

std::vector<int> sizes(const std::vector<TranslationUnit>& units) {
  std::vector<int> out;
  for (const auto& u : units) out.push_back(u.line_count());
  return out;
}

}  // namespace

TEST(PlanSegments, GreedyPacking) {
  auto m = module_from(function_of("e1", 200) + function_of("e2", 200) + function_of("e3", 200));
  auto units = plan_segments(m, 450);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_EQ(units[0].element_ids, (std::vector<std::string>{"m.c:1", "m.c:201"}));
  EXPECT_EQ(units[1].element_ids, (std::vector<std::string>{"m.c:401"}));
  EXPECT_EQ(units[0].id(), "m.1");
  EXPECT_EQ(units[1].id(), "m.2");
  EXPECT_FALSE(units[0].oversized);
}

TEST(PlanSegments, QuadtreeScaleModuleFitsOneUnit) {
  std::string text;
  for (int i = 0; i < 30; ++i) text += function_of("q" + std::to_string(i), 16);
  text = function_of("top", 496 - 30 * 16) + text;
  auto m = module_from(text);
  ASSERT_EQ(m.lines.size(), 496u);
  auto units = plan_segments(m, 600);
  ASSERT_EQ(units.size(), 1u);
  EXPECT_EQ(units[0].line_count(), 496);
}

TEST(PlanSegments, OversizedArrayNeverSplit) {
  std::string text = "int before = 1;\nstatic const char *names[] = {\n";
  for (int i = 0; i < 406; ++i) text += "  \"n" + std::to_string(i) + "\",\n";
  text += "};\nint after = 2;\n";
  auto m = module_from(text);
  auto units = plan_segments(m, 50);
  ASSERT_EQ(units.size(), 3u);
  EXPECT_EQ(units[1].line_count(), 408);
  EXPECT_TRUE(units[1].oversized);
  EXPECT_FALSE(units[0].oversized);
  EXPECT_FALSE(units[2].oversized);
}

TEST(PlanSegments, FreeLinesTravelWithNextGroup) {
  auto m = module_from("#include <stdio.h>\n\nint a;\n/* b */\nint b;\n\n");
  auto units = plan_segments(m, 3);
  EXPECT_EQ(sizes(units), (std::vector<int>{3, 3}));
  EXPECT_EQ(units[0].text, "#include <stdio.h>\n\nint a;\n");
  EXPECT_EQ(units[1].text, "/* b */\nint b;\n\n");
  EXPECT_EQ(units[1].est_tokens, estimate_tokens(units[1].text));
}

TEST(GroupSccs, CycleFusedIntoOneGroup) {
  auto m = module_from(function_of("f", 120, "g") + function_of("g", 150, "f") +
                       function_of("h", 10));
  auto groups = group_sccs(m);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].line_count(), 270);
  EXPECT_EQ(groups[0].elements.size(), 2u);
  auto units = plan_segments(m, 100);
  ASSERT_EQ(units.size(), 2u);
  EXPECT_TRUE(units[0].oversized);
  EXPECT_EQ(units[0].line_count(), 270);
}

TEST(GroupSccs, NoCyclesIsIdentity) {
  auto m = module_from(function_of("f", 5, "g") + function_of("g", 5) + "int x;\n");
  auto groups = group_sccs(m);
  auto atoms = build_atoms(m.elements(), m.scan.blocks);
  ASSERT_EQ(groups.size(), atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    EXPECT_EQ(groups[i].start_line, atoms[i].start_line);
    EXPECT_EQ(groups[i].end_line, atoms[i].end_line);
  }
}

TEST(GroupSccs, SccSpanIncludesAtomsBetween) {
  auto m = module_from(function_of("f", 5, "g") + "int between;\n" + function_of("g", 5, "f"));
  auto groups = group_sccs(m);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].line_count(), 11);
}

TEST(Resize, CapArithmetic) {
  EXPECT_EQ(next_cap_for_overflow(4000, 30), 3500);
  EXPECT_EQ(next_cap_for_overflow(1300, 30), 1137);
  EXPECT_THROW(next_cap_for_overflow(33, 30), FloorReached);
  EXPECT_EQ(next_cap_for_stall(4484, 30), 2242);
  EXPECT_EQ(next_cap_for_stall(1100, 30), 550);
  EXPECT_EQ(next_cap_for_stall(61, 30), 31);
  EXPECT_EQ(next_cap_for_stall(45, 30), 30);
  EXPECT_THROW(next_cap_for_stall(30, 30), FloorReached);
}

TEST(Resize, InitialCapFromWindow) {
  EXPECT_EQ(initial_cap_lines(8000), 266);
  EXPECT_EQ(initial_cap_lines(128000), 4266);
  EXPECT_EQ(initial_cap_lines(200000), 5000);
  EXPECT_EQ(initial_cap_lines(2000000, 1300), 1300);
  EXPECT_EQ(initial_cap_lines(100), 30);
}

TEST(Resize, StallSplitsAtHalf) {
  std::vector<ModuleSource> mods{module_from(function_of("a", 300) + function_of("b", 300))};
  auto plan = make_plan(mods, 600);
  ASSERT_EQ(plan.units.size(), 1u);
  plan = shrink_for_stall(plan, mods);
  EXPECT_EQ(plan.cap_lines, 300);
  EXPECT_EQ(sizes(plan.units), (std::vector<int>{300, 300}));
  ASSERT_EQ(plan.history.size(), 2u);
  EXPECT_EQ(plan.history[1], (CapChange{300, ResizeTrigger::compile_stall}));
}

TEST(Resize, CompiledUnitsKept) {
  std::string text;
  for (int i = 0; i < 8; ++i) text += function_of("f" + std::to_string(i), 50);
  std::vector<ModuleSource> mods{module_from(text)};
  auto plan = make_plan(mods, 200);
  ASSERT_EQ(plan.units.size(), 2u);
  plan.units[0].status = UnitStatus::compiled;
  plan.units[1].status = UnitStatus::failed;
  plan = shrink_for_overflow(plan, mods);
  EXPECT_EQ(plan.cap_lines, 175);
  ASSERT_EQ(plan.units.size(), 3u);
  EXPECT_EQ(plan.units[0].id(), "m.1");
  EXPECT_EQ(plan.units[0].status, UnitStatus::compiled);
  EXPECT_EQ(plan.units[1].id(), "m.3");
  EXPECT_EQ(plan.units[1].start_line, 201);
  EXPECT_EQ(plan.units[1].status, UnitStatus::pending);
  EXPECT_EQ(plan.units[2].end_line, 400);
  EXPECT_EQ(plan.units[2].id(), "m.4");
}

TEST(PlanJson, RoundTrip) {
  std::vector<ModuleSource> mods{module_from(function_of("a", 40) + function_of("b", 40))};
  auto plan = make_plan(mods, 60);
  plan.units[0].status = UnitStatus::compiled;
  plan = shrink_for_stall(plan, mods);
  auto back = plan_from_json(plan_to_json(plan), mods);
  EXPECT_EQ(back, plan);
  EXPECT_THROW(plan_from_json("{", mods), FormatError);
}

TEST(PlanSegments, CapSweepOverCorpus) {
  for (auto name : {"bst", "quadtree", "ht"}) {
    auto r = preprocess_project(fixture_path(std::string("c/") + name));
    for (int cap : {50, 100, 300, 600, 1200}) {
      auto problems = props::check_plan(r.modules, cap);
      EXPECT_TRUE(problems.empty()) << name << ": " << problems.front();
    }
  }
}

TEST(Resize, ArithmeticSweep) {
  for (int floor : {1, 5, 30}) {
    auto problems = props::check_shrink_arithmetic(5000, floor);
    EXPECT_TRUE(problems.empty()) << problems.front();
  }
}
