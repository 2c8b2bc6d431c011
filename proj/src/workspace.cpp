#include "seamstress/workspace.hpp"

#include <algorithm>
#include <toml.hpp>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

int patch_span(const RepairPatch& p, int file_lines) {
  if (p.start_line > file_lines) return 0;
  return std::min(p.end_line, file_lines) - p.start_line + 1;
}

void validate_patches(const std::vector<RepairPatch>& patches, int file_lines) {
  for (const auto& p : patches) {
    if (p.start_line < 1 || p.end_line < p.start_line || p.end_line > file_lines + 1)
      throw PatchOutOfRange(p.file + ": patch " + std::to_string(p.start_line) + "-" +
                            std::to_string(p.end_line) + " is outside lines 1-" +
                            std::to_string(file_lines + 1));
  }
  std::vector<const RepairPatch*> sorted;
  for (const auto& p : patches) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->start_line < b->start_line; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i]->start_line <= sorted[i - 1]->end_line)
      throw OverlappingPatches(sorted[i]->file + ": patches " + std::to_string(sorted[i - 1]->start_line) +
                               "-" + std::to_string(sorted[i - 1]->end_line) + " and " +
                               std::to_string(sorted[i]->start_line) + "-" +
                               std::to_string(sorted[i]->end_line) + " overlap");
}

std::string apply_patches(std::string_view text, std::vector<RepairPatch> patches) {
  auto lines = split_lines(text);
  int n = static_cast<int>(lines.size());
  validate_patches(patches, n);
  std::sort(patches.begin(), patches.end(),
            [](const auto& a, const auto& b) { return a.start_line > b.start_line; });
  for (const auto& p : patches) {
    auto first = lines.begin() + (p.start_line - 1);
    auto last = first + patch_span(p, static_cast<int>(lines.size()));
    auto repl = split_lines(p.replacement);
    first = lines.erase(first, last);
    lines.insert(first, repl.begin(), repl.end());
  }
  return join_lines(lines);
}

std::vector<RepairPatch> patches_from_json(const nlohmann::json& doc, const std::string& file) {
  std::vector<RepairPatch> out;
  for (const auto& p : doc.at("patches"))
    out.push_back({file, p.at("start_line").get<int>(), p.at("end_line").get<int>(),
                   p.at("code").get<std::string>()});
  return out;
}

namespace {

void collect_deps(const toml::table& t, const std::set<std::string>& allowed, std::set<std::string>& bad) {
  for (const char* section : {"dependencies", "dev-dependencies", "build-dependencies"}) {
    const auto* deps = t[section].as_table();
    if (!deps) continue;
    for (const auto& [k, v] : *deps) {
      std::string name(k.str());
      if (!allowed.count(name)) bad.insert(name);
      if (const auto* spec = v.as_table())
        if (auto pkg = (*spec)["package"].value<std::string>(); pkg && !allowed.count(*pkg)) bad.insert(*pkg);
    }
  }
}

}  // namespace

std::vector<std::string> disallowed_dependencies(std::string_view manifest_text,
                                                 const std::set<std::string>& allowed) {
  toml::table t;
  try {
    t = toml::parse(manifest_text, std::string_view("Cargo.toml"));
  } catch (const toml::parse_error& e) {
    throw FormatError("Cargo.toml does not parse: " + std::string(e.description()));
  }
  std::set<std::string> bad;
  collect_deps(t, allowed, bad);
  if (const auto* targets = t["target"].as_table())
    for (const auto& [k, v] : *targets)
      if (const auto* tt = v.as_table()) collect_deps(*tt, allowed, bad);
  return {bad.begin(), bad.end()};
}

std::string Workspace::read(const std::string& rel) const { return read_file(path_of(rel)); }

void Workspace::write(const std::string& rel, std::string_view text) const {
  write_file_atomic(path_of(rel), text);
}

bool Workspace::exists(const std::string& rel) const { return fs::is_regular_file(path_of(rel)); }

std::vector<std::string> Workspace::files() const {
  std::vector<std::string> out;
  if (!fs::is_directory(root)) return out;
  for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && it.depth() == 0 && it->path().filename() == "target") {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) out.push_back(relative_string(it->path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> Workspace::rust_files() const {
  std::vector<std::string> out;
  for (auto& f : files())
    if (fs::path(f).extension() == ".rs" && f.rfind("src/", 0) == 0) out.push_back(f);
  return out;
}

namespace {

std::string mod_rs(const std::string& module) { return "src/" + module + "/mod.rs"; }

std::string mod_lines(const std::string& unit_rel) {
  auto stem = fs::path(unit_rel).stem().string();
  return "pub mod " + stem + ";\npub use self::" + stem + "::*;\n";
}

}  // namespace

std::string Workspace::add_unit(const TranslationUnit& unit, std::string_view rust_code) {
  auto rel = unit_file_name(unit);
  std::string code(rust_code);
  if (!code.empty() && code.back() != '\n') code += '\n';
  write(rel, code);
  auto& list = unit_files[unit.module];
  if (std::find(list.begin(), list.end(), rel) == list.end()) {
    list.push_back(rel);
    auto m = mod_rs(unit.module);
    write(m, (exists(m) ? read(m) : std::string()) + mod_lines(rel));
  }
  return rel;
}

void Workspace::remove_unit(const std::string& rel) {
  fs::remove(path_of(rel));
  for (auto& [module, list] : unit_files) {
    auto it = std::find(list.begin(), list.end(), rel);
    if (it == list.end()) continue;
    list.erase(it);
    auto m = mod_rs(module);
    if (!exists(m)) continue;
    auto text = read(m);
    auto lines = mod_lines(rel);
    if (auto pos = text.find(lines); pos != std::string::npos) text.erase(pos, lines.size());
    write(m, text);
  }
}

std::string unit_file_name(const TranslationUnit& unit) {
  return "src/" + unit.module + "/unit_" + std::to_string(unit.ordinal) + ".rs";
}

std::string crate_name_for(std::string_view name) {
  std::string out;
  for (char c : to_snake_case(name)) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "c_" + out;
  return out;
}

namespace {

std::vector<std::string> feature_names(const std::vector<FeatureRecord>& features, bool defined_only) {
  std::set<std::string> names;
  for (const auto& f : features)
    if (!defined_only || f.originally_defined) names.insert(f.feature());
  return {names.begin(), names.end()};
}

}  // namespace

std::string render_manifest(const std::string& crate_name, const std::vector<FeatureRecord>& features) {
  std::string out = "[package]\nname = \"" + crate_name +
                    "\"\nversion = \"0.1.0\"\nedition = \"2021\"\n\n[lib]\npath = \"src/lib.rs\"\n";
  auto names = feature_names(features, false);
  if (!names.empty()) {
    out += "\n[features]\n";
    for (const auto& n : names) out += n + " = []\n";
  }
  out += "\n[dependencies]\n";
  return out;
}

std::string render_build_script(const std::vector<FeatureRecord>& features) {
  std::string out = "fn main() {\n";
  for (const auto& n : feature_names(features, true))
    out += "    println!(\"cargo:rustc-cfg=feature=\\\"" + n + "\\\"\");\n";
  return out + "}\n";
}

Workspace scaffold_workspace(const fs::path& root, const std::vector<ModuleSource>& modules,
                             const std::vector<FeatureRecord>& features, const ScaffoldOptions& options) {
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!options.force) throw WorkspaceExists(root.string() + " already exists (use --force to replace it)");
    fs::remove_all(root);
  }
  Workspace ws;
  ws.root = root;
  ws.crate_name = options.crate_name;
  fs::create_directories(root / "src");
  ws.write("Cargo.toml", render_manifest(ws.crate_name, features));
  if (!feature_names(features, true).empty()) {
    ws.write("build.rs", render_build_script(features));
    ws.has_build_script = true;
  }
  std::string lib =
      "#![allow(dead_code, unused_imports, unused_variables, unused_mut, non_snake_case,\n"
      "         non_camel_case_types, non_upper_case_globals)]\n\n";
  for (const auto& m : modules) {
    lib += "pub mod " + m.name + ";\n";
    ws.modules.push_back(m.name);
    ws.unit_files[m.name];
    ws.write(mod_rs(m.name), "");
  }
  ws.write("src/lib.rs", lib);
  return ws;
}

WorkspaceSnapshot take_snapshot(const Workspace& ws) {
  WorkspaceSnapshot s;
  for (const auto& f : ws.files()) s.files[f] = ws.read(f);
  s.unit_files = ws.unit_files;
  return s;
}

void restore_snapshot(Workspace& ws, const WorkspaceSnapshot& snap) {
  for (const auto& f : ws.files())
    if (!snap.files.count(f)) fs::remove(ws.path_of(f));
  for (const auto& [f, text] : snap.files)
    if (!ws.exists(f) || ws.read(f) != text) ws.write(f, text);
  ws.unit_files = snap.unit_files;
}

}  // namespace seamstress
