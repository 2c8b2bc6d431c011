#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace seamstress {

enum class TokenKind { identifier, number, string, character, punct };

struct Token {
  TokenKind kind;
  std::string_view text;  // view into the lexed source
  std::size_t offset;     // byte offset of the first character
  int line;               // 1-based line of the first character
  int directive = -1;     // index into LexResult::directives, or -1
};

/// One logical preprocessor line (backslash continuations joined).
struct Directive {
  std::string name;  // "define", "ifdef", "include", ... ("" for a null directive)
  int start_line;
  int end_line;
  std::size_t first_token;  // index of the '#' token
  std::size_t end_token;    // one past the last token of the directive
  std::size_t start_offset;  // byte offset of '#'
  std::size_t end_offset;    // offset of the terminating newline (or EOF)
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<Directive> directives;
  int line_count = 0;
  /// Per line (index 0 = line 1): true if a non-directive token starts or
  /// continues on that line.
  std::vector<bool> code_lines;
  /// Per line: true if the line is part of a preprocessor directive.
  std::vector<bool> directive_lines;
};

/// Lexes C source. Comments are dropped, string and character literals become
/// single tokens, and every token inside a directive carries its directive
/// index. Never throws: unterminated literals or comments run to end of input.
LexResult lex_c(std::string_view source);

bool is_c_keyword(std::string_view word);

}  // namespace seamstress
