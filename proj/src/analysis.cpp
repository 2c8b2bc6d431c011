#include "seamstress/analysis.hpp"

#include <algorithm>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

using nlohmann::ordered_json;

namespace {

int sum(const std::map<ElementKind, int>& m) {
  int n = 0;
  for (const auto& [k, v] : m) n += v;
  return n;
}

constexpr ElementKind kKinds[] = {ElementKind::function, ElementKind::macro_function, ElementKind::type_def,
                                  ElementKind::macro_variable, ElementKind::variable, ElementKind::other};

ordered_json kinds_json(const std::map<ElementKind, int>& m) {
  ordered_json j = ordered_json::object();
  for (auto k : kKinds) j[std::string(to_string(k))] = m.count(k) ? m.at(k) : 0;
  return j;
}

bool under(const fs::path& p, const fs::path& dir) {
  auto rel = p.lexically_relative(dir);
  return !rel.empty() && *rel.begin() != "..";
}

}  // namespace

int FileAnalysis::total_elements() const { return sum(elements); }
int ProjectAnalysis::total_elements() const { return sum(elements); }

ProjectAnalysis analyze_project(const fs::path& root, const std::vector<fs::path>& exclude) {
  if (!fs::is_directory(root)) throw IoError(root.string() + " is not a directory");
  auto base = fs::weakly_canonical(root);
  std::vector<fs::path> skip;
  for (const auto& e : exclude) skip.push_back(fs::weakly_canonical(e.is_absolute() ? e : root / e));

  ProjectAnalysis out;
  auto graph = build_include_graph(root);
  for (const auto& node : graph.nodes) {
    auto full = base / node;
    if (std::any_of(skip.begin(), skip.end(), [&](const fs::path& d) { return under(full, d); })) continue;
    FileAnalysis fa;
    fa.path = node;
    try {
      auto f = scan_file(read_file(full), node);
      fa.lines = f.lines.size();
      for (const auto& e : f.elements)
        if (!e.is_declaration) ++fa.elements[e.kind];
    } catch (const Error& e) {
      out.warnings.push_back(node + ": " + e.what());
      continue;
    }
    out.lines += fa.lines;
    for (const auto& [k, n] : fa.elements) out.elements[k] += n;
    out.files.push_back(std::move(fa));
  }
  return out;
}

ordered_json ProjectAnalysis::to_json() const {
  ordered_json j;
  j["files"] = ordered_json::array();
  for (const auto& f : files)
    j["files"].push_back({{"path", f.path}, {"lines", f.lines}, {"elements", f.total_elements()},
                          {"by_kind", kinds_json(f.elements)}});
  j["totals"] = {{"files", files.size()},
                 {"lines", lines},
                 {"avg_lines", files.empty() ? 0.0 : static_cast<double>(lines) / static_cast<double>(files.size())},
                 {"elements", total_elements()},
                 {"by_kind", kinds_json(elements)}};
  j["warnings"] = warnings;
  return j;
}

std::string ProjectAnalysis::render_text() const {
  std::size_t width = 5;
  for (const auto& f : files) width = std::max(width, f.path.size());
  std::string out;
  char buf[512];
  auto row = [&](const std::string& name, std::size_t l, const std::map<ElementKind, int>& m) {
    auto n = [&](ElementKind k) { return m.count(k) ? m.at(k) : 0; };
    std::snprintf(buf, sizeof buf, "%-*s  %6zu  %8d  %5d  %5d  %4d  %5d  %3d  %5d\n", static_cast<int>(width),
                  name.c_str(), l, sum(m), n(ElementKind::function), n(ElementKind::macro_function),
                  n(ElementKind::type_def), n(ElementKind::macro_variable), n(ElementKind::variable),
                  n(ElementKind::other));
    out += buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %6s  %8s  %5s  %5s  %4s  %5s  %3s  %5s\n", static_cast<int>(width), "file",
                "LoC", "elements", "func", "macfn", "type", "macro", "var", "other");
  out += buf;
  for (const auto& f : files) row(f.path, f.lines, f.elements);
  row("total", lines, elements);
  std::snprintf(buf, sizeof buf, "%zu files, %.1f LoC per file\n", files.size(),
                files.empty() ? 0.0 : static_cast<double>(lines) / static_cast<double>(files.size()));
  out += buf;
  for (const auto& w : warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace seamstress
