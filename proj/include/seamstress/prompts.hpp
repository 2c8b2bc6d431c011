#pragma once

// Prompt construction for the four LLM requests (translate, repair, map,
// select_files), token budgeting, and decoding of multi-part responses.

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seamstress/metadata.hpp"
#include "seamstress/segment.hpp"

namespace seamstress {

enum class PromptKind { translate, repair, map, select_files };

std::string_view to_string(PromptKind k);
std::optional<PromptKind> parse_prompt_kind(std::string_view s);

struct PromptEnvelope {
  PromptKind kind = PromptKind::translate;
  std::string unit_id;
  std::vector<std::string> system_rules;
  /// Variable parts in prompt order, e.g. {"context", ...}, {"code", ...}.
  std::vector<std::pair<std::string, std::string>> body_sections;
  std::string response_schema_id;
  std::string text;  // the rendered prompt as sent
  std::size_t est_tokens = 0;
  /// Expected size of the whole answer that accumulates in the conversation
  /// (translate only; 0 otherwise).
  std::size_t projected_output_tokens = 0;

  /// Stable text the replay backend hashes.
  std::string canonical() const;
  std::string digest() const;
  nlohmann::ordered_json to_json() const;
  static PromptEnvelope from_json(const nlohmann::json& j);

  bool operator==(const PromptEnvelope&) const = default;
};

struct PromptBudget {
  std::size_t context_window = 0;
  std::size_t reserved_output = 0;
  std::size_t memory_tokens = 0;

  /// Tokens left for a prompt: window - reserved - memory, never negative.
  std::size_t available() const;
};

/// Phrases every rules profile must contain; missing ones are prepended.
extern const std::vector<std::string> kMandatoryRules;

struct PromptTemplates {
  std::string translate;
  std::string repair;
  std::string map;
  std::string select_files;
  std::string format_retry;
  std::string continue_response;
  std::vector<std::string> rules;

  static PromptTemplates defaults();
  /// Starts from the defaults; any of translate.tmpl, repair.tmpl, map.tmpl,
  /// select_files.tmpl, format_retry.tmpl, continue.tmpl present in `dir`
  /// replaces its default. `rules_file` replaces rules.txt.
  static PromptTemplates load(const std::optional<std::filesystem::path>& dir,
                              const std::optional<std::filesystem::path>& rules_file);
  /// TemplateError when a template lacks a required slot or is malformed.
  void validate() const;
};

/// `{{name}}` is replaced by slots[name]; `{{?name}}...{{/name}}` keeps the
/// enclosed text only when slots[name] is non-empty. Unknown slots and
/// unbalanced sections raise TemplateError.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& slots,
                            std::string_view template_name = "template");

/// One rule per non-blank line; '#' lines are comments.
std::vector<std::string> parse_rules(std::string_view text);
std::vector<std::string> ensure_mandatory_rules(std::vector<std::string> rules);
std::string render_rules(const std::vector<std::string>& rules);
bool rules_complete(std::string_view rendered);

/// Translation answer estimate: 1.2x the C unit's tokens, rounded up.
std::size_t projected_output_tokens(std::size_t c_tokens);

PromptEnvelope build_translation_prompt(const TranslationUnit& unit, const ContextBundle& context,
                                        const PromptTemplates& templates,
                                        const PromptBudget& budget);

struct SourceFile {
  std::string path;  // workspace-relative
  std::string text;
};

/// `error_log` must be non-empty (std::invalid_argument otherwise). The log
/// is kept verbatim when it fits and tail-truncated with a marker otherwise.
PromptEnvelope build_repair_prompt(const std::string& unit_id, std::string_view error_log,
                                   const SourceFile& target, const ContextBundle& rust_context,
                                   const PromptTemplates& templates, const PromptBudget& budget);

PromptEnvelope build_mapping_prompt(const UnitMetadata& unit, std::string_view c_text,
                                    const std::vector<SourceFile>& rust_files,
                                    const PromptTemplates& templates);

PromptEnvelope build_select_files_prompt(const std::string& unit_id, std::string_view error_log,
                                         const std::vector<std::string>& candidates,
                                         const PromptTemplates& templates,
                                         const PromptBudget& budget);

/// Follow-up message after an unusable answer.
std::string format_retry_message(const PromptTemplates& templates, std::string_view error,
                                 bool ask_for_chunks);

/// Keeps the last lines of `log` so that it fits `max_tokens`; prefixes a
/// marker line when anything was dropped. nullopt if not even the marker fits.
std::optional<std::string> tail_truncate(std::string_view log, std::size_t max_tokens);

/// Source lines prefixed with right-aligned line numbers ("  7 | ...").
std::string number_lines(std::string_view text);

struct LlmResponsePart {
  int part_index = 1;  // 1-based
  std::optional<int> total_parts;
  std::string payload;

  bool operator==(const LlmResponsePart&) const = default;
};

enum class DecodeStatus { ok, incomplete, invalid_escape, syntax };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::ok;
  nlohmann::json doc;
  std::string message;
};

/// Parses JSON text; a surrounding ``` fence is ignored.
DecodeResult decode_json(std::string_view text);

std::string join_parts(const std::vector<LlmResponsePart>& parts);

/// Concatenates the parts, decodes and validates against `schema_id`.
/// FormatError("invalid escape: ...") for escape problems, FormatError with
/// the decoder or schema message otherwise.
nlohmann::json assemble_multipart(const std::vector<LlmResponsePart>& parts,
                                  std::string_view schema_id);

}  // namespace seamstress
