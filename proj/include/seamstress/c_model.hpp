#pragma once

// Lexical and structural model of C sources: code elements, conditional
// blocks, include graph, reference/call graphs and declaration pairing.

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seamstress/c_lexer.hpp"
#include "seamstress/text.hpp"

namespace seamstress {

/// The six code-element categories shared by C and Rust.
enum class ElementKind { function, macro_function, type_def, macro_variable, variable, other };

inline constexpr ElementKind kAllElementKinds[] = {
    ElementKind::function,       ElementKind::macro_function, ElementKind::type_def,
    ElementKind::macro_variable, ElementKind::variable,       ElementKind::other};

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view s);

struct CodeElement {
  ElementKind kind = ElementKind::other;
  std::string name;  // empty for unnamed `other` elements
  /// Further names this element defines: struct/union/enum tags, enumerators,
  /// extra declarators of a multi-variable declaration.
  std::vector<std::string> aliases;
  int start_line = 0;
  int end_line = 0;
  std::string file;
  bool is_static = false;
  bool is_declaration = false;
  bool is_extern = false;
  /// A `#define NAME` with no replacement text.
  bool valueless_define = false;
  std::string text_hash;

  std::string id() const { return file + ":" + std::to_string(start_line); }
  int line_count() const { return end_line - start_line + 1; }
  bool defines(std::string_view ident) const;

  bool operator==(const CodeElement&) const = default;
};

struct ConditionalBlock {
  std::string file;
  int start_line = 0;
  int end_line = 0;
  std::vector<std::string> guard_symbols;
  std::vector<std::string> contained_elements;  // CodeElement ids
  std::vector<int> branch_lines;                // #elif / #else lines
};

struct IncludeGuard {
  std::string symbol;
  int ifndef_line = 0;
  int define_line = 0;
  int endif_line = 0;
};

/// A lexed and scanned file. The lexer's token views point into `text`.
struct ScannedFile {
  std::string path;
  std::shared_ptr<const std::string> text;
  std::vector<std::string> lines;
  LexResult lex;
  std::optional<IncludeGuard> guard;
  std::vector<CodeElement> elements;
  std::vector<ConditionalBlock> blocks;
};

/// Lexes and scans in one pass. Throws UnbalancedBraces, DanglingEndif or
/// UnterminatedConditional.
ScannedFile scan_file(std::string text, std::string path);

/// Elements in source order. Prototypes and extern declarations carry
/// is_declaration. Unknown constructs become kind `other`.
std::vector<CodeElement> scan_elements(std::string_view source, const std::string& file);

/// Scanner entry point for callers that already lexed the text.
std::vector<CodeElement> scan_lexed(const LexResult& lex, const std::vector<std::string>& lines,
                                    const std::string& file);

std::vector<ConditionalBlock> detect_blocks_lexed(const LexResult& lex,
                                                  std::span<const CodeElement> elements,
                                                  const std::string& file);

/// Conditional blocks in order of their opening directive (outer before
/// inner). Include guards are not reported.
std::vector<ConditionalBlock> detect_conditional_blocks(std::string_view source,
                                                        const std::string& file);

std::optional<IncludeGuard> detect_include_guard(const LexResult& lex);

/// Text of lines [start_line, end_line] from `lines`, newline-terminated.
std::string span_text(const std::vector<std::string>& lines, int start_line, int end_line);

/// Functions collapse to their header (everything before the body); every
/// other element returns its full text.
std::string element_signature(const CodeElement& element, const std::vector<std::string>& lines);

/// Lines that are blank or hold only comments.
std::vector<bool> blank_or_comment_lines(const ScannedFile& file);

// ---------------------------------------------------------------------------
// Include graph

struct IncludeEdge {
  std::string includer;  // project-relative path
  std::string included;  // project-relative path, or the spelled name when unresolved/system
  int line = 0;
  bool is_system = false;
  bool resolved = false;
  std::string spelled;  // the name between quotes/brackets

  bool operator==(const IncludeEdge&) const = default;
};

struct IncludeGraph {
  std::filesystem::path root;
  std::vector<std::string> nodes;  // project-relative .c/.h paths, sorted
  std::vector<IncludeEdge> edges;  // resolved project edges and system edges
  std::vector<IncludeEdge> missing;  // quoted includes that did not resolve
  std::vector<std::string> warnings;  // MissingHeader(includer, name)
  std::vector<std::vector<std::string>> cycles;

  std::vector<const IncludeEdge*> edges_from(std::string_view includer) const;
  bool has_node(std::string_view path) const;
};

IncludeGraph build_include_graph(const std::filesystem::path& project_root,
                                 const std::vector<std::filesystem::path>& include_dirs = {});

// ---------------------------------------------------------------------------
// Reference and call graphs

/// file path -> full source text
using SourceMap = std::map<std::string, std::string>;

struct CallGraph {
  std::vector<std::string> nodes;  // element ids
  std::vector<std::size_t> element_index;  // node -> index into the input elements
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // caller -> callee, node indices
  std::vector<std::vector<std::size_t>> scc_groups;        // node indices
  /// Names defined both as a macro and as a non-macro element.
  std::vector<std::string> ambiguous_names;

  std::optional<std::size_t> node_of(std::string_view element_id) const;
  bool has_edge(std::size_t from, std::size_t to) const;
};

/// Identifier tokens (outside strings/comments) occurring in the element's
/// span, including inside macro bodies.
std::vector<std::string_view> referenced_identifiers(const CodeElement& element,
                                                     const LexResult& lex);

/// Nodes are the function and macro-function elements. f -> g when g's name
/// occurs as an identifier in f's text (calls and bare references alike).
CallGraph build_call_graph(std::span<const CodeElement> elements, const SourceMap& sources);

/// Same construction over every element; edge targets are any element whose
/// name or alias is referenced.
CallGraph build_reference_graph(std::span<const CodeElement> elements, const SourceMap& sources);

// ---------------------------------------------------------------------------
// Declaration/definition pairing

struct DeclPairing {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (declaration, definition)
  std::vector<std::size_t> externals;  // declarations without a project definition
  std::vector<std::string> ambiguous;  // AmbiguousDefinition names
};

DeclPairing pair_decls_defs(std::span<const CodeElement> elements);

/// Throws AmbiguousDefinition for the first ambiguous name, if any.
void require_unambiguous(const DeclPairing& pairing);

// ---------------------------------------------------------------------------
// Atoms: the indivisible units used by reordering and segmentation.

struct Atom {
  int start_line = 0;
  int end_line = 0;
  std::vector<std::size_t> elements;  // indices into the element list
  bool conditional = false;

  int line_count() const { return end_line - start_line + 1; }
};

/// Unions element spans with overlapping conditional blocks (transitively),
/// in source order.
std::vector<Atom> build_atoms(std::span<const CodeElement> elements,
                              std::span<const ConditionalBlock> blocks);

}  // namespace seamstress
