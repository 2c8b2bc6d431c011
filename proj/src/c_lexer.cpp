#include "seamstress/c_lexer.hpp"

#include <array>
#include <cctype>

#include "seamstress/text.hpp"

namespace seamstress {
namespace {

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

constexpr std::array<std::string_view, 3> kPunct3 = {"...", "<<=", ">>="};
constexpr std::array<std::string_view, 19> kPunct2 = {
    "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "##"};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  LexResult run() {
    out_.line_count = static_cast<int>(count_lines(src_));
    out_.code_lines.assign(out_.line_count + 1, false);
    out_.directive_lines.assign(out_.line_count + 1, false);
    bool at_line_start = true;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        if (in_directive_) finish_directive(pos_);
        ++line_;
        ++pos_;
        at_line_start = true;
        continue;
      }
      if (c == '\\' && peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        continue;
      }
      if (c == '\\' && peek(1) == '\r' && peek(2) == '\n') {
        pos_ += 3;
        ++line_;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        skip_line_comment();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        skip_block_comment();
        continue;
      }
      if (c == '#' && at_line_start && !in_directive_) {
        begin_directive();
        at_line_start = false;
        continue;
      }
      at_line_start = false;
      lex_token();
    }
    if (in_directive_) finish_directive(src_.size());
    out_.code_lines.erase(out_.code_lines.begin());
    out_.directive_lines.erase(out_.directive_lines.begin());
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip_line_comment() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '\\' && peek(1) == '\n') {
        pos_ += 2;
        ++line_;
        continue;
      }
      if (src_[pos_] == '\n') return;
      ++pos_;
    }
  }

  void skip_block_comment() {
    pos_ += 2;
    while (pos_ < src_.size()) {
      if (src_[pos_] == '*' && peek(1) == '/') {
        pos_ += 2;
        return;
      }
      // A comment spanning lines keeps an open directive open.
      if (src_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  void begin_directive() {
    in_directive_ = true;
    Directive d;
    d.start_line = line_;
    d.end_line = line_;
    d.first_token = out_.tokens.size();
    d.end_token = d.first_token;
    d.start_offset = pos_;
    d.end_offset = pos_;
    out_.directives.push_back(d);
    push(TokenKind::punct, pos_, 1);
    ++pos_;
    // Directive name: next identifier on the same logical line.
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t')) ++p;
    std::size_t q = p;
    while (q < src_.size() && ident_char(src_[q])) ++q;
    out_.directives.back().name = std::string(src_.substr(p, q - p));
  }

  void finish_directive(std::size_t end_offset) {
    auto& d = out_.directives.back();
    d.end_token = out_.tokens.size();
    d.end_line = line_;
    d.end_offset = end_offset;
    for (int l = d.start_line; l <= d.end_line && l <= out_.line_count; ++l)
      out_.directive_lines[l] = true;
    in_directive_ = false;
  }

  void push(TokenKind kind, std::size_t start, std::size_t len, int start_line = -1) {
    Token t{kind, src_.substr(start, len), start, start_line < 0 ? line_ : start_line,
            in_directive_ ? static_cast<int>(out_.directives.size()) - 1 : -1};
    if (!in_directive_) {
      for (int l = t.line; l <= line_ && l <= out_.line_count; ++l) out_.code_lines[l] = true;
    }
    out_.tokens.push_back(t);
  }

  void lex_quoted(char quote, std::size_t start) {
    int start_line = line_;
    ++pos_;  // opening quote
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\') {
        if (peek(1) == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      if (c == '\n') break;  // unterminated: stop at end of line
      ++pos_;
      if (c == quote) break;
    }
    if (pos_ > src_.size()) pos_ = src_.size();
    push(quote == '"' ? TokenKind::string : TokenKind::character, start, pos_ - start,
         start_line);
  }

  void lex_token() {
    std::size_t start = pos_;
    char c = src_[pos_];
    if (ident_start(c)) {
      while (pos_ < src_.size() && ident_char(src_[pos_])) ++pos_;
      auto word = src_.substr(start, pos_ - start);
      if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
          (word == "L" || word == "u" || word == "U" || word == "u8")) {
        lex_quoted(src_[pos_], start);
        return;
      }
      push(TokenKind::identifier, start, pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      ++pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if ((d == '+' || d == '-') &&
            (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E' || src_[pos_ - 1] == 'p' ||
             src_[pos_ - 1] == 'P')) {
          ++pos_;
          continue;
        }
        if (!ident_char(d) && d != '.' && d != '\'') break;
        ++pos_;
      }
      push(TokenKind::number, start, pos_ - start);
      return;
    }
    if (c == '"' || c == '\'') {
      lex_quoted(c, start);
      return;
    }
    auto rest = src_.substr(pos_);
    for (auto p : kPunct3) {
      if (rest.starts_with(p)) {
        pos_ += 3;
        push(TokenKind::punct, start, 3);
        return;
      }
    }
    for (auto p : kPunct2) {
      if (rest.starts_with(p)) {
        pos_ += 2;
        push(TokenKind::punct, start, 2);
        return;
      }
    }
    ++pos_;
    push(TokenKind::punct, start, 1);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  bool in_directive_ = false;
  LexResult out_;
};

}  // namespace

LexResult lex_c(std::string_view source) { return Lexer(source).run(); }

bool is_c_keyword(std::string_view w) {
  static constexpr std::array<std::string_view, 44> kKeywords = {
      "auto",     "break",    "case",     "char",       "const",     "continue",
      "default",  "do",       "double",   "else",       "enum",      "extern",
      "float",    "for",      "goto",     "if",         "inline",    "int",
      "long",     "register", "restrict", "return",     "short",     "signed",
      "sizeof",   "static",   "struct",   "switch",     "typedef",   "union",
      "unsigned", "void",     "volatile", "while",      "_Bool",     "_Complex",
      "_Alignas", "_Alignof", "_Atomic",  "_Noreturn",  "_Static_assert",
      "_Thread_local", "__attribute__", "__inline"};
  for (auto k : kKeywords)
    if (k == w) return true;
  return false;
}

}  // namespace seamstress
