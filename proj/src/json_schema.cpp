#include "seamstress/json_schema.hpp"

#include <map>
#include <set>

#include "seamstress/default_schemas.hpp"
#include "seamstress/error.hpp"

namespace seamstress {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeywords = {
    "$schema", "$id",      "$defs",   "$ref",    "title",     "description",
    "type",    "properties", "required", "additionalProperties", "items",
    "minItems", "enum",    "const",   "minimum", "maximum",   "minLength", "anyOf"};

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  throw TemplateError("json schema: unknown type '" + t + "'");
}

std::string pointer_child(const std::string& base, const std::string& key) {
  std::string esc;
  for (char c : key) {
    if (c == '~') esc += "~0";
    else if (c == '/') esc += "~1";
    else esc += c;
  }
  return base + "/" + esc;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& v, const json& s, const std::string& at, std::vector<std::string>& out) {
    if (s.is_boolean()) {
      if (!s.get<bool>()) out.push_back(where(at) + "not allowed");
      return;
    }
    if (!s.is_object()) throw TemplateError("json schema: schema node is not an object");
    for (auto it = s.begin(); it != s.end(); ++it)
      if (!kKnownKeywords.count(it.key()))
        throw TemplateError("json schema: unsupported keyword '" + it.key() + "'");

    if (s.contains("$ref")) {
      check(v, resolve(s.at("$ref").get<std::string>()), at, out);
    }
    if (s.contains("anyOf")) {
      bool any = false;
      for (const auto& alt : s.at("anyOf")) {
        std::vector<std::string> tmp;
        check(v, alt, at, tmp);
        if (tmp.empty()) {
          any = true;
          break;
        }
      }
      if (!any) out.push_back(where(at) + "matches none of the allowed forms");
    }
    if (s.contains("type")) {
      const auto& t = s.at("type");
      bool ok = false;
      if (t.is_string()) ok = has_type(v, t.get<std::string>());
      else
        for (const auto& x : t) ok |= has_type(v, x.get<std::string>());
      if (!ok) {
        out.push_back(where(at) + "expected " + (t.is_string() ? t.get<std::string>() : t.dump()));
        return;
      }
    }
    if (s.contains("const") && v != s.at("const"))
      out.push_back(where(at) + "must equal " + s.at("const").dump());
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found |= e == v;
      if (!found) out.push_back(where(at) + "must be one of " + s.at("enum").dump());
    }
    if (v.is_number()) {
      if (s.contains("minimum") && v.get<double>() < s.at("minimum").get<double>())
        out.push_back(where(at) + "below minimum " + s.at("minimum").dump());
      if (s.contains("maximum") && v.get<double>() > s.at("maximum").get<double>())
        out.push_back(where(at) + "above maximum " + s.at("maximum").dump());
    }
    if (v.is_string() && s.contains("minLength") &&
        utf8_length(v.get_ref<const std::string&>()) < s.at("minLength").get<std::size_t>())
      out.push_back(where(at) + "shorter than " + s.at("minLength").dump());
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>())
        out.push_back(where(at) + "fewer than " + s.at("minItems").dump() + " items");
      if (s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i)
          check(v[i], s.at("items"), at + "/" + std::to_string(i), out);
    }
    if (v.is_object()) {
      if (s.contains("required"))
        for (const auto& r : s.at("required"))
          if (!v.contains(r.get<std::string>()))
            out.push_back(where(at) + "missing required field \"" + r.get<std::string>() + "\"");
      const json* props = s.contains("properties") ? &s.at("properties") : nullptr;
      for (auto it = v.begin(); it != v.end(); ++it) {
        auto child = pointer_child(at, it.key());
        if (props && props->contains(it.key())) {
          check(it.value(), props->at(it.key()), child, out);
        } else if (s.contains("additionalProperties")) {
          const auto& ap = s.at("additionalProperties");
          if (ap.is_boolean() && !ap.get<bool>())
            out.push_back(where(child) + "unexpected field");
          else if (ap.is_object())
            check(it.value(), ap, child, out);
        }
      }
    }
  }

 private:
  static std::string where(const std::string& at) { return (at.empty() ? "/" : at) + ": "; }

  static std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  }

  const json& resolve(const std::string& ref) {
    if (ref.rfind("#/", 0) != 0) throw TemplateError("json schema: only local $ref supported: " + ref);
    try {
      return root_.at(json::json_pointer(ref.substr(1)));
    } catch (const json::exception&) {
      throw TemplateError("json schema: dangling $ref " + ref);
    }
  }

  const json& root_;
};

std::map<std::string, json, std::less<>> load_shipped() {
  std::map<std::string, json, std::less<>> out;
  for (const auto& [name, text] : embedded_schemas::files) {
    std::string id(name.substr(0, name.rfind('.')));
    out.emplace(id, json::parse(text));
  }
  return out;
}

const std::map<std::string, json, std::less<>>& shipped() {
  static const auto schemas = load_shipped();
  return schemas;
}

}  // namespace

std::vector<std::string> validate_json(const json& doc, const json& schema) {
  std::vector<std::string> out;
  Validator(schema).check(doc, schema, "", out);
  return out;
}

const json& schema_by_id(std::string_view id) {
  auto it = shipped().find(id);
  if (it == shipped().end()) throw TemplateError("unknown schema id '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> schema_ids() {
  std::vector<std::string> out;
  for (const auto& [k, v] : shipped()) out.push_back(k);
  return out;
}

void require_valid(const json& doc, std::string_view schema_id) {
  auto errs = validate_json(doc, schema_by_id(schema_id));
  if (errs.empty()) return;
  std::string msg = "response does not match schema " + std::string(schema_id) + ": ";
  for (std::size_t i = 0; i < errs.size() && i < 3; ++i) msg += (i ? "; " : "") + errs[i];
  if (errs.size() > 3) msg += "; (" + std::to_string(errs.size() - 3) + " more)";
  throw FormatError(msg);
}

}  // namespace seamstress
