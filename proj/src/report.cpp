#include "seamstress/report.hpp"

#include <cstdio>
#include <json.hpp>
#include <set>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_ratio(const Ratio& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r.value());
  return buf;
}

std::vector<UnitSummary> summarize_units(const SegmentPlan& plan) {
  std::vector<UnitSummary> out;
  for (const auto& u : plan.units) out.push_back({u.id(), u.module, u.line_count(), u.status});
  return out;
}

std::vector<UnitSummary> summarize_units_json(std::string_view plan_json) {
  std::vector<UnitSummary> out;
  try {
    auto j = json::parse(plan_json);
    for (const auto& u : j.at("units")) {
      auto status = parse_unit_status(u.at("status").get<std::string>());
      if (!status) throw FormatError("plan.json: unknown unit status");
      out.push_back({u.at("id").get<std::string>(), u.at("module").get<std::string>(),
                     u.at("end_line").get<int>() - u.at("start_line").get<int>() + 1, *status});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan.json: ") + e.what());
  }
  return out;
}

CoverageReport compute_coverage(const std::vector<UnitSummary>& units, const MetadataStore& store,
                                const std::vector<Diagnostic>& errors) {
  CoverageReport r;
  std::map<std::string, std::size_t> index;
  for (const auto& u : units) {
    if (!index.count(u.module)) {
      index[u.module] = r.modules.size();
      r.modules.push_back({u.module, {}, {}, 0, 0, 0});
    }
    auto& m = r.modules[index[u.module]];
    bool compiled = u.status == UnitStatus::compiled;
    ++m.units;
    m.compiled += compiled;
    m.aborted += u.status == UnitStatus::aborted;
    m.lines.den += u.lines;
    if (compiled) m.lines.num += u.lines;
    if (const auto* meta = store.unit(u.id)) {
      for (const auto& e : meta->elements) {
        if (e.is_declaration || e.name.empty()) continue;
        ++m.elements.den;
        if (compiled && element_covered(store, e.name, u.id)) ++m.elements.num;
      }
    }
  }
  for (const auto& m : r.modules) {
    r.lines.num += m.lines.num;
    r.lines.den += m.lines.den;
    r.elements.num += m.elements.num;
    r.elements.den += m.elements.den;
    r.units += m.units;
    r.compiled += m.compiled;
    r.aborted += m.aborted;
  }
  r.histogram = category_histogram(errors);
  std::set<std::string> unmapped;
  for (const auto& d : errors) {
    if (!d.is_error()) continue;
    ++r.total_errors;
    if (!classify_error(d.code, d.message).from_table && d.file != "Cargo.toml")
      unmapped.insert(d.code.empty() ? d.message : d.code);
  }
  r.unmapped_codes.assign(unmapped.begin(), unmapped.end());
  r.notes = {
      "an aborted unit stops the remaining units of its own module; other modules continue",
      "error categories: the published table lists Attributes twice; 10 distinct categories are used",
  };
  return r;
}

ordered_json CoverageReport::to_json() const {
  auto ratio = [](const Ratio& x) {
    return ordered_json{{"covered", x.num}, {"total", x.den}, {"value", x.value()}};
  };
  ordered_json j;
  j["lcov"] = ratio(lines);
  j["elemcov"] = ratio(elements);
  j["units"] = {{"total", units}, {"compiled", compiled}, {"aborted", aborted}};
  j["modules"] = ordered_json::array();
  for (const auto& m : modules)
    j["modules"].push_back({{"module", m.module},
                            {"lcov", ratio(m.lines)},
                            {"elemcov", ratio(m.elements)},
                            {"units", {{"total", m.units}, {"compiled", m.compiled}, {"aborted", m.aborted}}}});
  j["errors"] = ordered_json::object();
  j["errors"]["total"] = total_errors;
  j["errors"]["by_category"] = ordered_json::object();
  for (auto c : kErrorCategories) j["errors"]["by_category"][std::string(to_string(c))] = histogram.count(c) ? histogram.at(c) : 0;
  j["errors"]["unmapped"] = unmapped_codes;
  j["notes"] = notes;
  return j;
}

std::string CoverageReport::render_text() const {
  std::string out;
  char buf[256];
  std::size_t width = 6;
  for (const auto& m : modules) width = std::max(width, m.module.size());
  auto row = [&](const std::string& name, const Ratio& l, const Ratio& e, int u, int c, int a) {
    std::snprintf(buf, sizeof buf, "%-*s  %6s  %7s  %5d  %8d  %7d\n", static_cast<int>(width), name.c_str(),
                  format_ratio(l).c_str(), format_ratio(e).c_str(), u, c, a);
    out += buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %6s  %7s  %5s  %8s  %7s\n", static_cast<int>(width), "module", "LCov",
                "ElemCov", "units", "compiled", "aborted");
  out += buf;
  for (const auto& m : modules) row(m.module, m.lines, m.elements, m.units, m.compiled, m.aborted);
  row("total", lines, elements, units, compiled, aborted);
  out += "\ncompilation errors by category (" + std::to_string(total_errors) + " total)\n";
  for (auto c : kErrorCategories) {
    int n = histogram.count(c) ? histogram.at(c) : 0;
    std::snprintf(buf, sizeof buf, "  %-16s %5d\n", std::string(to_string(c)).c_str(), n);
    out += buf;
  }
  if (!unmapped_codes.empty()) {
    out += "codes classified by fallback:";
    for (const auto& c : unmapped_codes) out += " " + c;
    out += "\n";
  }
  for (const auto& n : notes) out += "note: " + n + "\n";
  return out;
}

CoverageReport coverage_from_outputs(const fs::path& out_dir) {
  auto plan_path = out_dir / "plan.json";
  if (!fs::exists(plan_path)) throw IoError(plan_path.string() + " not found; run segment or translate first");
  auto units = summarize_units_json(read_file(plan_path));
  MetadataStore store;
  if (fs::exists(out_dir / "metadata.json")) store = MetadataStore::load(out_dir / "metadata.json");
  std::vector<Diagnostic> errors;
  if (fs::exists(out_dir / "run.jsonl")) {
    for (const auto& line : split_lines(read_file(out_dir / "run.jsonl"))) {
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded() || j.value("event", "") != "compile" || !j.contains("errors")) continue;
      for (const auto& e : j["errors"]) {
        Diagnostic d;
        d.level = "error";
        d.code = e.value("code", "");
        d.message = e.value("message", "");
        d.file = e.value("file", "");
        d.category = parse_error_category(e.value("category", "")).value_or(ErrorCategory::type);
        errors.push_back(std::move(d));
      }
    }
  }
  return compute_coverage(units, store, errors);
}

}  // namespace seamstress
