#include "wefix/js_lexer.h"

#include <gtest/gtest.h>

#include <string>
#include <vector>

namespace wefix {
namespace {

std::vector<std::string> Texts(const TokenStream& ts) {
  std::vector<std::string> out;
  for (const Token& t : ts.tokens) out.emplace_back(t.text);
  return out;
}

TEST(JsLexerTest, BasicStatement) {
  TokenStream ts = Tokenize("await driver.findElement(By.id('x')).click();");
  EXPECT_EQ(Texts(ts),
            (std::vector<std::string>{"await", "driver", ".", "findElement",
                                      "(", "By", ".", "id", "(", "'x'", ")",
                                      ")", ".", "click", "(", ")", ";"}));
  EXPECT_EQ(ts.tokens[9].kind, TokenKind::kString);
  EXPECT_EQ(ts.match[4], 11u);
  EXPECT_EQ(ts.match[11], 4u);
  EXPECT_EQ(ts.parent[9], 8u);
  EXPECT_EQ(ts.parent[0], static_cast<std::size_t>(-1));
}

TEST(JsLexerTest, CommentsAreSkippedButNewlinesRemembered) {
  TokenStream ts = Tokenize("a // c1\n/* x\n y */ b /* same line */ c");
  ASSERT_EQ(Texts(ts), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(ts.tokens[1].newline_before);
  EXPECT_EQ(ts.tokens[1].line, 3);
  EXPECT_FALSE(ts.tokens[2].newline_before);
}

TEST(JsLexerTest, TemplatesWithNestedSubstitutions) {
  std::string src = "x = `a ${b + `c ${d}`} }`; y";
  TokenStream ts = Tokenize(src);
  ASSERT_EQ(ts.tokens.size(), 5u);
  EXPECT_EQ(ts.tokens[2].kind, TokenKind::kTemplate);
  EXPECT_EQ(ts.tokens[2].text, "`a ${b + `c ${d}`} }`");
  EXPECT_EQ(ts.tokens[4].text, "y");
}

TEST(JsLexerTest, RegexVersusDivision) {
  TokenStream ts = Tokenize("const r = /a\\/[/]b/gi; const q = x / 2 / y;");
  EXPECT_EQ(ts.tokens[3].kind, TokenKind::kRegex);
  EXPECT_EQ(ts.tokens[3].text, "/a\\/[/]b/gi");
  EXPECT_EQ(ts.tokens[9].text, "/");
  EXPECT_EQ(ts.tokens[9].kind, TokenKind::kPunct);

  TokenStream after_paren = Tokenize("if (x) /re/.test(s)");
  EXPECT_EQ(after_paren.tokens[4].kind, TokenKind::kRegex);
  TokenStream after_call = Tokenize("f(a) / 2");
  EXPECT_EQ(after_call.tokens[4].kind, TokenKind::kPunct);
}

TEST(JsLexerTest, LongestPunctuatorWins) {
  TokenStream ts = Tokenize("a ??= b?.c >>>= d => e !== f ...g");
  EXPECT_EQ(Texts(ts),
            (std::vector<std::string>{"a", "?\?=", "b", "?.", "c", ">>>=", "d",
                                      "=>", "e", "!==", "f", "...", "g"}));
  TokenStream ternary = Tokenize("a ?.5 : 1");
  EXPECT_EQ(ternary.tokens[1].text, "?");
}

TEST(JsLexerTest, StringsWithEscapesAndNumbers) {
  TokenStream ts = Tokenize(R"(f("a\"b", 'c\'d', 1.5e3, 0x1F, 10n))");
  EXPECT_EQ(ts.tokens[2].text, R"("a\"b")");
  EXPECT_EQ(ts.tokens[4].text, R"('c\'d')");
  EXPECT_EQ(ts.tokens[6].kind, TokenKind::kNumber);
  EXPECT_EQ(ts.tokens[6].text, "1.5e3");
  EXPECT_EQ(ts.tokens[8].text, "0x1F");
  EXPECT_EQ(ts.tokens[10].text, "10n");
}

TEST(JsLexerTest, HashbangAndUnicodeIdentifiers) {
  TokenStream ts = Tokenize("#!/usr/bin/env node\nconst café = 'ü';");
  EXPECT_EQ(ts.tokens[0].text, "const");
  EXPECT_EQ(ts.tokens[0].line, 2);
  EXPECT_EQ(ts.tokens[1].text, "café");
}

TEST(JsLexerTest, CrlfLineCounting) {
  TokenStream ts = Tokenize("a\r\nb\r\n\r\nc");
  EXPECT_EQ(ts.tokens[1].line, 2);
  EXPECT_EQ(ts.tokens[2].line, 4);
  EXPECT_EQ(LineOf("a\r\nb\r\n\r\nc", 8), 4);
}

TEST(JsLexerTest, ReportsUnterminatedInput) {
  auto line_of_failure = [](std::string_view src) {
    try {
      Tokenize(src, "f.js");
    } catch (const ParseFailure& e) {
      EXPECT_EQ(e.file(), "f.js");
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of_failure("a;\n'open"), 2);
  EXPECT_EQ(line_of_failure("a;\n\n/* open"), 3);
  EXPECT_EQ(line_of_failure("`x ${ y"), 1);
  EXPECT_EQ(line_of_failure("f(\n[)"), 2);
  EXPECT_EQ(line_of_failure("}"), 1);
  EXPECT_EQ(line_of_failure("x = /abc"), 1);
}

TEST(JsLexerTest, EmptyInput) {
  EXPECT_TRUE(Tokenize("").tokens.empty());
  EXPECT_TRUE(Tokenize("  // only a comment\n").tokens.empty());
  EXPECT_EQ(LineOf("", 0), 1);
}

}  // namespace
}  // namespace wefix
