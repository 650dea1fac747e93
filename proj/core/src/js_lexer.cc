#include "wefix/js_lexer.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace wefix {

ParseFailure::ParseFailure(std::string file, int line, const std::string& what)
    : std::runtime_error((file.empty() ? std::string("<input>") : file) + ":" +
                         std::to_string(line) + ": " + what),
      file_(std::move(file)),
      line_(line) {}

int LineOf(std::string_view source, std::size_t offset) {
  offset = std::min(offset, source.size());
  return 1 + static_cast<int>(std::count(source.begin(),
                                         source.begin() + offset, '\n'));
}

namespace {

constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

// Longest first.
constexpr std::array<std::string_view, 46> kPuncts = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=",
    "?\?=",  "=>",  "==",  "!=",  "<=",  ">=",  "&&",  "||",  "??",  "?.",
    "++",   "--",  "+=",  "-=",  "*=",  "/=",  "%=",  "&=",  "|=",  "^=",
    "**",   "<<",  ">>",  "{",   "}",   "(",   ")",   "[",   "]",   ";",
    ",",    "<",   ">",   "+",   "-",   "*",
};
constexpr std::string_view kSinglePuncts = "/%&|^!~?:=.@#";

bool IsIdentStart(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool IsIdentPart(unsigned char c) {
  return IsIdentStart(c) || std::isdigit(c);
}

bool IsLineTerminator(char c) { return c == '\n' || c == '\r'; }

// Keywords after which a '/' starts a regular expression literal.
bool KeywordPrecedesExpression(std::string_view word) {
  static constexpr std::array<std::string_view, 15> kWords = {
      "return", "typeof", "instanceof", "in",   "of",
      "new",    "delete", "void",       "throw", "case",
      "do",     "else",   "yield",      "await", "extends"};
  return std::find(kWords.begin(), kWords.end(), word) != kWords.end();
}

class Lexer {
 public:
  Lexer(std::string_view src, std::string_view file) : src_(src), file_(file) {}

  TokenStream Run() {
    TokenStream out;
    if (src_.substr(0, 2) == "#!") {
      while (pos_ < src_.size() && !IsLineTerminator(src_[pos_])) ++pos_;
    }
    bool newline = false;
    while (true) {
      newline |= SkipTrivia();
      if (pos_ >= src_.size()) break;
      Token tok = Next(out.tokens);
      tok.newline_before = newline;
      newline = false;
      out.tokens.push_back(tok);
    }
    MatchBrackets(out);
    return out;
  }

 private:
  [[noreturn]] void Fail(std::size_t at, const std::string& what) const {
    throw ParseFailure(std::string(file_), LineOf(src_, at), what);
  }

  // Skips whitespace and comments; returns whether a line terminator was
  // crossed.
  bool SkipTrivia() {
    bool newline = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (IsLineTerminator(c)) {
        newline = true;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\f' || c == '\v') {
        ++pos_;
      } else if (src_.compare(pos_, 2, "//") == 0) {
        while (pos_ < src_.size() && !IsLineTerminator(src_[pos_])) ++pos_;
      } else if (src_.compare(pos_, 2, "/*") == 0) {
        std::size_t close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) Fail(pos_, "unterminated comment");
        if (src_.substr(pos_, close - pos_).find('\n') != std::string_view::npos)
          newline = true;
        pos_ = close + 2;
      } else if (static_cast<unsigned char>(c) == 0xC2 && pos_ + 1 < src_.size() &&
                 static_cast<unsigned char>(src_[pos_ + 1]) == 0xA0) {
        pos_ += 2;  // no-break space
      } else {
        break;
      }
    }
    return newline;
  }

  Token Make(TokenKind kind, std::size_t begin) {
    Token t;
    t.kind = kind;
    t.begin = begin;
    t.end = pos_;
    t.text = src_.substr(begin, pos_ - begin);
    line_ += static_cast<int>(
        std::count(src_.begin() + line_pos_, src_.begin() + begin, '\n'));
    line_pos_ = begin;
    t.line = line_;
    return t;
  }

  bool RegexAllowed(const std::vector<Token>& prev) const {
    if (prev.empty()) return true;
    const Token& p = prev.back();
    switch (p.kind) {
      case TokenKind::kNumber:
      case TokenKind::kString:
      case TokenKind::kTemplate:
      case TokenKind::kRegex:
        return false;
      case TokenKind::kIdentifier:
        return KeywordPrecedesExpression(p.text);
      case TokenKind::kPunct:
        if (p.text == ")") return ClosesControlHead(prev);
        return !(p.text == "]" || p.text == "}" || p.text == "++" ||
                 p.text == "--");
    }
    return true;
  }

  // True when the ")" ending |prev| closes the head of if/while/for/with,
  // so a following "/" starts a statement rather than dividing.
  static bool ClosesControlHead(const std::vector<Token>& prev) {
    int depth = 0;
    for (std::size_t i = prev.size(); i-- > 0;) {
      const Token& t = prev[i];
      if (t.kind != TokenKind::kPunct) continue;
      if (t.text == ")") {
        ++depth;
      } else if (t.text == "(" && --depth == 0) {
        if (i == 0 || prev[i - 1].kind != TokenKind::kIdentifier) return false;
        std::string_view w = prev[i - 1].text;
        return w == "if" || w == "while" || w == "for" || w == "with";
      }
    }
    return false;
  }

  Token Next(const std::vector<Token>& prev) {
    std::size_t begin = pos_;
    unsigned char c = static_cast<unsigned char>(src_[pos_]);
    if (IsIdentStart(c) || c == '\\') {
      while (pos_ < src_.size() &&
             (IsIdentPart(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '\\'))
        ++pos_;
      return Make(TokenKind::kIdentifier, begin);
    }
    if (std::isdigit(c) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      ScanNumber();
      return Make(TokenKind::kNumber, begin);
    }
    if (c == '"' || c == '\'') {
      ScanString();
      return Make(TokenKind::kString, begin);
    }
    if (c == '`') {
      ScanTemplate();
      return Make(TokenKind::kTemplate, begin);
    }
    if (c == '/' && RegexAllowed(prev)) {
      ScanRegex();
      return Make(TokenKind::kRegex, begin);
    }
    for (std::string_view p : kPuncts) {
      if (src_.compare(pos_, p.size(), p) == 0) {
        // `a ?.5 : b` is a conditional, not optional chaining.
        if (p == "?." && pos_ + 2 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 2])))
          continue;
        pos_ += p.size();
        return Make(TokenKind::kPunct, begin);
      }
    }
    if (kSinglePuncts.find(static_cast<char>(c)) != std::string_view::npos) {
      ++pos_;
      return Make(TokenKind::kPunct, begin);
    }
    Fail(begin, std::string("unexpected character '") + static_cast<char>(c) +
                    "'");
  }

  void ScanNumber() {
    while (pos_ < src_.size()) {
      unsigned char c = static_cast<unsigned char>(src_[pos_]);
      if (std::isalnum(c) || c == '_' || c == '.') {
        bool exponent = (c == 'e' || c == 'E') && pos_ + 1 < src_.size() &&
                        (src_[pos_ + 1] == '+' || src_[pos_ + 1] == '-');
        pos_ += exponent ? 2 : 1;
      } else {
        break;
      }
    }
  }

  void ScanString() {
    std::size_t begin = pos_;
    char quote = src_[pos_++];
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
        // Line continuation with CRLF.
        if (pos_ <= src_.size() && src_[pos_ - 1] == '\r' &&
            pos_ < src_.size() && src_[pos_] == '\n')
          ++pos_;
        continue;
      }
      if (IsLineTerminator(c)) break;
      ++pos_;
      if (c == quote) return;
    }
    Fail(begin, "unterminated string literal");
  }

  void ScanTemplate() {
    std::size_t begin = pos_;
    ++pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\\') {
        pos_ += 2;
      } else if (c == '`') {
        ++pos_;
        return;
      } else if (c == '$' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '{') {
        pos_ += 2;
        SkipSubstitution(begin);
      } else {
        ++pos_;
      }
    }
    Fail(begin, "unterminated template literal");
  }

  // Consumes a ${...} body up to and including its closing brace.
  void SkipSubstitution(std::size_t template_begin) {
    int depth = 0;
    while (true) {
      SkipTrivia();
      if (pos_ >= src_.size()) Fail(template_begin, "unterminated template literal");
      char c = src_[pos_];
      if (c == '}') {
        ++pos_;
        if (depth == 0) return;
        --depth;
      } else if (c == '{') {
        ++depth;
        ++pos_;
      } else if (c == '"' || c == '\'') {
        ScanString();
      } else if (c == '`') {
        ScanTemplate();
      } else {
        ++pos_;
      }
    }
  }

  void ScanRegex() {
    std::size_t begin = pos_;
    ++pos_;
    bool in_class = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (IsLineTerminator(c)) break;
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      ++pos_;
      if (c == '[') {
        in_class = true;
      } else if (c == ']') {
        in_class = false;
      } else if (c == '/' && !in_class) {
        while (pos_ < src_.size() &&
               IsIdentPart(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
        return;
      }
    }
    Fail(begin, "unterminated regular expression literal");
  }

  void MatchBrackets(TokenStream& out) {
    const std::size_t n = out.tokens.size();
    out.match.assign(n, kNpos);
    out.parent.assign(n, kNpos);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i) {
      const Token& t = out.tokens[i];
      out.parent[i] = stack.empty() ? kNpos : stack.back();
      if (t.kind != TokenKind::kPunct) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") {
        stack.push_back(i);
      } else if (t.text == ")" || t.text == "]" || t.text == "}") {
        if (stack.empty()) Fail(t.begin, "unbalanced '" + std::string(t.text) + "'");
        const Token& open = out.tokens[stack.back()];
        char want = t.text == ")" ? '(' : t.text == "]" ? '[' : '{';
        if (open.text[0] != want)
          Fail(t.begin, "mismatched '" + std::string(t.text) + "'");
        out.match[i] = stack.back();
        out.match[stack.back()] = i;
        stack.pop_back();
        out.parent[i] = stack.empty() ? kNpos : stack.back();
      }
    }
    if (!stack.empty())
      Fail(out.tokens[stack.back()].begin,
           "unclosed '" + std::string(out.tokens[stack.back()].text) + "'");
  }

  std::string_view src_;
  std::string_view file_;
  std::size_t pos_ = 0;
  // Line bookkeeping for Make(); tokens arrive in source order.
  int line_ = 1;
  std::size_t line_pos_ = 0;
};

}  // namespace

TokenStream Tokenize(std::string_view source, std::string_view file) {
  return Lexer(source, file).Run();
}

}  // namespace wefix
