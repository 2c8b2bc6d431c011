#include "seamstress/json_schema.hpp"

#include <gtest/gtest.h>

#include "seamstress/analysis.hpp"
#include "seamstress/error.hpp"
#include "seamstress/metadata.hpp"
#include "seamstress/report.hpp"
#include "seamstress/segment.hpp"
#include "test_util.hpp"

using namespace seamstress;
using nlohmann::json;

TEST(JsonSchema, Keywords) {
  auto s = json::parse(R"({
    "type": "object", "required": ["a"], "additionalProperties": false,
    "properties": {
      "a": {"type": "integer", "minimum": 1, "maximum": 3},
      "b": {"type": ["string", "null"], "minLength": 2},
      "c": {"type": "array", "minItems": 1, "items": {"enum": ["x", "y"]}},
      "d": {"$ref": "#/$defs/k"}
    },
    "$defs": {"k": {"const": true}}
  })");
  EXPECT_TRUE(validate_json(json::parse(R"({"a": 2, "b": null, "c": ["x"], "d": true})"), s).empty());
  auto errs = validate_json(json::parse(R"({"a": 0, "b": "é", "c": [], "d": false, "e": 1})"), s);
  EXPECT_EQ(errs, (std::vector<std::string>{"/a: below minimum 1", "/b: shorter than 2",
                                            "/c: fewer than 1 items", "/d: must equal true",
                                            "/e: unexpected field"}));
  EXPECT_EQ(validate_json(json::parse(R"({"a": 9, "c": ["z"]})"), s),
            (std::vector<std::string>{"/a: above maximum 3", R"(/c/0: must be one of ["x","y"])"}));
  EXPECT_EQ(validate_json(json::parse("[]"), s), std::vector<std::string>{"/: expected object"});
  EXPECT_EQ(validate_json(json::parse("{}"), s),
            std::vector<std::string>{"/: missing required field \"a\""});
}

TEST(JsonSchema, UnsupportedKeywordIsAnError) {
  EXPECT_THROW(validate_json(1, json::parse(R"({"pattern": "x"})")), TemplateError);
  EXPECT_THROW(validate_json(1, json::parse(R"({"$ref": "#/nowhere"})")), TemplateError);
  EXPECT_THROW(validate_json(1, json::parse(R"({"$ref": "other.json"})")), TemplateError);
  EXPECT_THROW(schema_by_id("nope"), TemplateError);
}

TEST(JsonSchema, ShippedCasesAgreeWithFixtures) {
  // Same verdicts the jsonschema package gives (tests/tools/check_schemas.py).
  auto files = fixture_files("schema_cases", {".json"});
  ASSERT_GE(files.size(), 20u);
  for (const auto& f : files) {
    fs::path p(f);
    auto verdict = p.parent_path().filename().string();
    auto id = p.parent_path().parent_path().filename().string();
    auto errs = validate_json(json::parse(read_file(p)), schema_by_id(id));
    EXPECT_EQ(errs.empty(), verdict == "valid") << f;
  }
  EXPECT_EQ(schema_ids(), (std::vector<std::string>{"analysis", "map_response", "metadata", "plan",
                                                    "repair_response", "report", "select_files_response",
                                                    "translate_response"}));
}

TEST(JsonSchema, OutputsValidate) {
  for (auto name : {"bst", "quadtree", "ht"}) {
    auto r = preprocess_project(fixture_path(std::string("c/") + name));
    auto plan = make_plan(r.modules, 100);
    plan.units[0].status = UnitStatus::compiled;
    plan = shrink_for_stall(plan, r.modules);
    EXPECT_TRUE(validate_json(json::parse(plan_to_json(plan)), schema_by_id("plan")).empty());

    auto index = build_project_index(plan, r.modules);
    MetadataStore store;
    for (const auto& u : plan.units)
      for (const auto& m : r.modules)
        if (m.name == u.module) store.put_unit(emit_unit_metadata(u, m, index));
    auto errs = validate_json(json::parse(store.to_json()), schema_by_id("metadata"));
    EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs[0]);

    errs = validate_json(json::parse(analyze_project(fixture_path(std::string("c/") + name)).to_json().dump()),
                         schema_by_id("analysis"));
    EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs[0]);

    std::vector<UnitSummary> units;
    for (const auto& u : plan.units) units.push_back({u.id(), u.module, u.line_count(), u.status});
    Diagnostic d;
    d.level = "error";
    d.code = "E0432";
    d.category = ErrorCategory::modules;
    errs = validate_json(json::parse(compute_coverage(units, store, {d}).to_json().dump()), schema_by_id("report"));
    EXPECT_TRUE(errs.empty()) << (errs.empty() ? "" : errs[0]);
  }
}

TEST(JsonSchema, RequireValidReportsFirstErrors) {
  try {
    require_valid(json::parse(R"({"patches": [{"start_line": 0}]})"), "repair_response");
    FAIL();
  } catch (const FormatError& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("repair_response"), std::string::npos);
    EXPECT_NE(m.find("/patches/0"), std::string::npos);
  }
}
