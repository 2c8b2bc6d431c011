#pragma once

// Validation against the subset of JSON Schema the shipped schemas use:
// type, properties, required, additionalProperties, items, minItems,
// enum, const, minimum, maximum, minLength, anyOf and local $ref.
// Any other keyword in a schema is a TemplateError, so a schema edit can't
// silently turn into "accept everything".

#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace seamstress {

/// Violations as "<json pointer>: <reason>"; empty when valid.
std::vector<std::string> validate_json(const nlohmann::json& doc, const nlohmann::json& schema);

/// Shipped schema by id (file stem under schemas/), e.g. "translate_response".
const nlohmann::json& schema_by_id(std::string_view id);
std::vector<std::string> schema_ids();

/// Throws FormatError listing the first few violations.
void require_valid(const nlohmann::json& doc, std::string_view schema_id);

}  // namespace seamstress
