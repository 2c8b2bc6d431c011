#include "seamstress/config.hpp"

#include <set>
#include <toml.hpp>

#include "seamstress/error.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

namespace {

[[noreturn]] void bad_type(const std::string& key, const char* want) {
  throw ConfigError("seamstress.toml: " + key + " must be " + want);
}

std::string get_string(const toml::node& n, const std::string& key) {
  auto v = n.value<std::string>();
  if (!v) bad_type(key, "a string");
  return *v;
}

int get_int(const toml::node& n, const std::string& key) {
  auto v = n.value<int64_t>();
  if (!v || !n.is_integer()) bad_type(key, "an integer");
  return static_cast<int>(*v);
}

std::vector<std::string> get_strings(const toml::node& n, const std::string& key) {
  std::vector<std::string> out;
  if (n.is_string()) {
    // A single string may hold a comma-separated list.
    std::string s = get_string(n, key), cur;
    for (char c : s) {
      if (c == ',') {
        if (!trim(cur).empty()) out.emplace_back(trim(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) out.emplace_back(trim(cur));
    return out;
  }
  const auto* arr = n.as_array();
  if (!arr) bad_type(key, "an array of strings");
  for (const auto& x : *arr) out.push_back(get_string(x, key));
  return out;
}

// "dir/" and "dir" name the same directory.
fs::path comparable(const fs::path& p) {
  auto c = fs::weakly_canonical(p);
  return c.has_filename() ? c : c.parent_path();
}

fs::path get_path(const toml::node& n, const std::string& key, const fs::path& base) {
  fs::path p = get_string(n, key);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void RunConfig::validate() const {
  if (project_root.empty()) throw ConfigError("no project directory given (--project)");
  if (out_dir.empty()) throw ConfigError("no output directory given (--out)");
  if (comparable(project_root) == comparable(out_dir))
    throw ConfigError("the output directory must differ from the project directory");
  auto at_least_one = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be at least 1");
  };
  if (cap) at_least_one(*cap, "cap");
  at_least_one(floor, "floor");
  at_least_one(max_repair_attempts, "max_repair");
  at_least_one(max_format_retries, "max_format_retries");
  at_least_one(compile_timeout, "compile_timeout");
  if (report_format != "text" && report_format != "json")
    throw ConfigError("report format must be text or json, not " + report_format);
  if (backend.rfind("replay:", 0) == 0 && backend.size() == 7) throw ConfigError("replay: needs a directory");
}

std::optional<fs::path> RunConfig::replay_dir() const {
  if (backend.rfind("replay:", 0) != 0) return std::nullopt;
  return fs::path(backend.substr(7));
}

void apply_config_text(RunConfig& cfg, std::string_view text, const fs::path& base) {
  toml::table t;
  try {
    t = toml::parse(text, std::string_view("seamstress.toml"));
  } catch (const toml::parse_error& e) {
    throw ConfigError("seamstress.toml: " + std::string(e.description()) + " (line " +
                      std::to_string(e.source().begin.line) + ")");
  }
  for (const auto& [k, node] : t) {
    std::string key(k.str());
    if (key == "project") cfg.project_root = get_path(node, key, base);
    else if (key == "out") cfg.out_dir = get_path(node, key, base);
    else if (key == "backend") {
      cfg.backend = get_string(node, key);
      if (cfg.backend.rfind("replay:", 0) == 0) {
        fs::path d = cfg.backend.substr(7);
        if (!d.empty() && d.is_relative()) cfg.backend = "replay:" + (base / d).string();
      }
    } else if (key == "replay_profile") cfg.replay_profile = get_string(node, key);
    else if (key == "cap") cfg.cap = get_int(node, key);
    else if (key == "floor") cfg.floor = get_int(node, key);
    else if (key == "max_repair") cfg.max_repair_attempts = get_int(node, key);
    else if (key == "max_format_retries") cfg.max_format_retries = get_int(node, key);
    else if (key == "compile_timeout") cfg.compile_timeout = get_int(node, key);
    else if (key == "define") cfg.defines = get_strings(node, key);
    else if (key == "rules") cfg.rules = get_path(node, key, base);
    else if (key == "templates") cfg.templates = get_path(node, key, base);
    else if (key == "record") cfg.record = get_path(node, key, base);
    else if (key == "allowed_dependencies") cfg.allowed_dependencies = get_strings(node, key);
    else if (key == "report_format") cfg.report_format = get_string(node, key);
    else if (key == "cargo") cfg.cargo = get_string(node, key);
    else if (key == "crate_name") cfg.crate_name = get_string(node, key);
    else if (key == "force") {
      auto v = node.value<bool>();
      if (!v || !node.is_boolean()) bad_type(key, "true or false");
      cfg.force = *v;
    } else {
      throw ConfigError("seamstress.toml: unknown key " + key);
    }
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot read ") + file.string() + ": " + e.what());
  }
  apply_config_text(cfg, text, file.parent_path());
}

}  // namespace seamstress
