// Tokenizer for the JavaScript/TypeScript subset found in e2e test files.
// It understands enough of the lexical grammar (strings, template literals
// with nested substitutions, regular expression literals, comments) to find
// statement boundaries and call chains without misreading literal text.

#ifndef WEFIX_JS_LEXER_H_
#define WEFIX_JS_LEXER_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wefix {

class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::string file, int line, const std::string& what);
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

enum class TokenKind {
  kIdentifier,  // includes keywords
  kPunct,
  kString,
  kTemplate,
  kNumber,
  kRegex,
};

struct Token {
  TokenKind kind = TokenKind::kPunct;
  std::string_view text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
  int line = 1;
  // A line terminator (possibly inside a comment) separates this token from
  // the previous one.
  bool newline_before = false;

  bool Is(std::string_view s) const {
    return (kind == TokenKind::kPunct || kind == TokenKind::kIdentifier) &&
           text == s;
  }
};

struct TokenStream {
  std::vector<Token> tokens;
  // For bracket tokens, the index of the partner bracket; npos otherwise.
  std::vector<std::size_t> match;
  // Index of the innermost enclosing open bracket; npos at top level.
  std::vector<std::size_t> parent;
};

// Throws ParseFailure on unterminated literals or comments and on
// unbalanced brackets. |file| only labels errors.
TokenStream Tokenize(std::string_view source, std::string_view file = "");

// 1-based line number of |offset|.
int LineOf(std::string_view source, std::size_t offset);

}  // namespace wefix

#endif  // WEFIX_JS_LEXER_H_
