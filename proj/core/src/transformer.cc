#include "wefix/transformer.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

namespace wefix {
namespace {

constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

constexpr std::array<std::string_view, 8> kSeleniumVerbs = {
    "click",    "sendKeys",      "clear",
    "submit",   "perform",       "executeScript",
    "navigate", "executeAsyncScript"};
constexpr std::array<std::string_view, 14> kCypressVerbs = {
    "visit",    "click",      "type",    "select", "check",
    "uncheck",  "clear",      "dblclick", "rightclick",
    "trigger",  "submit",     "reload",  "go",     "contains"};
constexpr std::array<std::string_view, 3> kTestFunctions = {"it", "test",
                                                             "specify"};

template <std::size_t N>
bool Contains(const std::array<std::string_view, N>& words,
              std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

bool IsVerb(Dialect d, std::string_view w) {
  return d == Dialect::kCypress ? Contains(kCypressVerbs, w)
                                : Contains(kSeleniumVerbs, w);
}

// `get` is a navigation command only when called directly on the driver.
bool IsDriverName(std::string_view root) {
  std::string lower(root);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lower.find("driver") != std::string::npos ||
         lower.find("browser") != std::string::npos;
}

// Identifiers that cannot start a command chain.
bool IsReservedWord(std::string_view w) {
  static const std::set<std::string_view> kWords = {
      "await",  "async",  "break",  "case",     "catch",  "class",
      "const",  "continue", "debugger", "default", "delete", "do",
      "else",   "export", "extends", "finally",  "for",    "function",
      "if",     "import", "in",     "instanceof", "let",  "new",
      "return", "super",  "switch", "throw",    "try",    "typeof",
      "var",    "void",   "while",  "with",     "yield",  "null",
      "true",   "false"};
  return kWords.count(w) > 0;
}

bool EndsExpression(const Token& t) {
  switch (t.kind) {
    case TokenKind::kNumber:
    case TokenKind::kString:
    case TokenKind::kTemplate:
    case TokenKind::kRegex:
      return true;
    case TokenKind::kIdentifier: {
      static const std::set<std::string_view> kOpen = {
          "typeof", "new", "delete", "void", "await", "in", "instanceof",
          "of", "const", "let", "var", "async", "extends", "case", "export",
          "import", "else", "do", "function", "class"};
      return kOpen.count(t.text) == 0;
    }
    case TokenKind::kPunct:
      return t.text == ")" || t.text == "]" || t.text == "}" ||
             t.text == "++" || t.text == "--";
  }
  return false;
}

// Whether |t|, at the start of a new line, continues the previous
// expression instead of starting a statement.
bool ContinuesExpression(const Token& t) {
  switch (t.kind) {
    case TokenKind::kTemplate:
      return true;
    case TokenKind::kIdentifier:
      return t.text == "in" || t.text == "instanceof" || t.text == "as" ||
             t.text == "satisfies";
    case TokenKind::kPunct:
      return !(t.text == "{" || t.text == "}" || t.text == ")" ||
               t.text == "]" || t.text == ";" || t.text == "++" ||
               t.text == "--" || t.text == "!" || t.text == "~" ||
               t.text == "@" || t.text == "#");
    default:
      return false;
  }
}

struct Ctx {
  bool in_function = false;
  bool in_test = false;
  bool async_fn = false;
  // The statement is the unbraced body of if/else/for/while/do.
  bool bare_body = false;
};

struct Candidate {
  CommandSite site;
  std::size_t first = 0;  // token range [first, last]
  std::size_t last = 0;
  std::string skip_reason;
};

class Scanner {
 public:
  Scanner(std::string_view src, const TokenStream& ts, Dialect dialect)
      : src_(src), ts_(ts), dialect_(dialect) {}

  ScanResult Run() {
    ScanRange(0, ts_.tokens.size(), Ctx{});
    std::sort(candidates_.begin(), candidates_.end(),
              [](const Candidate& a, const Candidate& b) {
                return a.first < b.first;
              });
    for (Candidate& c : candidates_) {
      for (const Candidate& d : candidates_) {
        if (&c != &d && d.first <= c.first && c.last <= d.last) {
          c.skip_reason = "command nested inside another command";
          break;
        }
      }
    }
    ScanResult out;
    std::set<std::pair<int, std::string>> skipped;
    for (const Candidate& c : candidates_) {
      if (c.skip_reason.empty()) {
        out.sites.push_back(c.site);
      } else {
        skipped.emplace(c.site.line, c.skip_reason);
      }
    }
    for (std::size_t k = 0; k < ts_.tokens.size(); ++k) {
      if (covered_.count(k) || !IsVerbCall(k)) continue;
      std::string reason = "command used in an unsupported position";
      for (const Candidate& c : candidates_) {
        if (c.first <= k && k <= c.last) {
          reason = "command nested inside another command";
          break;
        }
      }
      skipped.emplace(tok(k).line, reason);
    }
    for (const auto& [line, reason] : skipped) {
      out.skipped.push_back({line, reason});
    }
    return out;
  }

 private:
  const Token& tok(std::size_t i) const { return ts_.tokens[i]; }
  std::size_t match(std::size_t i) const { return ts_.match[i]; }
  bool IsOpen(std::size_t i) const {
    const Token& t = tok(i);
    return t.kind == TokenKind::kPunct &&
           (t.text == "(" || t.text == "[" || t.text == "{");
  }
  // Index just past token |i|, skipping a bracketed group as a whole.
  std::size_t Skip(std::size_t i) const {
    return IsOpen(i) ? match(i) + 1 : i + 1;
  }

  void ScanRange(std::size_t b, std::size_t e, const Ctx& ctx) {
    Ctx inner = ctx;
    inner.bare_body = false;
    std::size_t i = b;
    while (i < e) {
      std::size_t next = ScanStatement(i, e, inner);
      i = std::max(next, i + 1);
    }
  }

  std::size_t ScanBlockAt(std::size_t i, std::size_t e, const Ctx& ctx) {
    if (i < e && tok(i).Is("{")) {
      ScanRange(i + 1, match(i), ctx);
      return match(i) + 1;
    }
    return i;
  }

  std::size_t ScanStatement(std::size_t i, std::size_t e, const Ctx& ctx) {
    const Token& t = tok(i);
    Ctx body_ctx = ctx;
    body_ctx.bare_body = true;
    if (t.Is(";")) return i + 1;
    if (t.Is("{")) return ScanBlockAt(i, e, ctx);
    if (t.kind == TokenKind::kIdentifier) {
      std::string_view w = t.text;
      if (w == "if" || w == "while" || w == "with" || w == "switch" ||
          w == "for") {
        std::size_t j = i + 1;
        if (w == "for" && j < e && tok(j).Is("await")) ++j;
        if (j < e && tok(j).Is("(")) {
          Descend(j, match(j) + 1, ctx);
          std::size_t body = match(j) + 1;
          if (w == "switch") return ScanBlockAt(body, e, ctx);
          if (body >= e) return e;
          std::size_t after = ScanStatement(body, e, body_ctx);
          if (w == "if" && after < e && tok(after).Is("else"))
            after = after + 1 < e ? ScanStatement(after + 1, e, body_ctx) : e;
          return after;
        }
      }
      if (w == "else")
        return i + 1 < e ? ScanStatement(i + 1, e, body_ctx) : e;
      if (w == "do") {
        if (i + 1 >= e) return e;
        std::size_t after = ScanStatement(i + 1, e, body_ctx);
        if (after < e && tok(after).Is("while") && after + 1 < e &&
            tok(after + 1).Is("(")) {
          after = match(after + 1) + 1;
          if (after < e && tok(after).Is(";")) ++after;
        }
        return after;
      }
      if (w == "try" || w == "finally") return ScanBlockAt(i + 1, e, ctx);
      if (w == "catch") {
        std::size_t j = i + 1;
        if (j < e && tok(j).Is("(")) j = match(j) + 1;
        return ScanBlockAt(j, e, ctx);
      }
      if (w == "function" ||
          (w == "async" && i + 1 < e && tok(i + 1).Is("function") &&
           !tok(i + 1).newline_before)) {
        return ScanFunctionDeclaration(i, e, ctx);
      }
      if (w == "class") {
        std::size_t j = i + 1;
        while (j < e && !tok(j).Is("{")) j = Skip(j);
        return j < e ? match(j) + 1 : e;
      }
      if (w == "case") {
        std::size_t j = i + 1;
        while (j < e && !tok(j).Is(":")) j = Skip(j);
        return j + 1;
      }
      if (w == "default" && i + 1 < e && tok(i + 1).Is(":")) return i + 2;
      if (w == "export") {
        std::size_t j = i + 1;
        if (j < e && tok(j).Is("default")) ++j;
        return j < e ? ScanStatement(j, e, ctx) : e;
      }
      if (!IsReservedWord(w) && i + 1 < e && tok(i + 1).Is(":"))
        return i + 2;  // label
    }
    std::size_t end = StatementEnd(i, e);
    Consider(i, end, ctx);
    Descend(i, end, ctx);
    return end;
  }

  std::size_t ScanFunctionDeclaration(std::size_t i, std::size_t e,
                                      const Ctx& ctx) {
    bool async = tok(i).Is("async");
    std::size_t j = i;
    while (j < e && !tok(j).Is("(")) ++j;
    if (j >= e) return e;
    std::size_t body = match(j) + 1;
    while (body < e && !tok(body).Is("{")) body = Skip(body);  // return type
    if (body >= e) return e;
    Ctx inner{true, ctx.in_test, async, false};
    ScanRange(body + 1, match(body), inner);
    return match(body) + 1;
  }

  std::size_t StatementEnd(std::size_t i, std::size_t e) const {
    std::size_t k = i;
    while (true) {
      if (k >= e) return e;
      if (tok(k).Is(";")) return k + 1;
      std::size_t next = Skip(k);
      if (next < e && tok(next).newline_before &&
          EndsExpression(tok(next - 1)) && !ContinuesExpression(tok(next)))
        return next;
      k = next;
    }
  }

  // Finds function bodies inside an expression and scans their statements.
  void Descend(std::size_t b, std::size_t e, const Ctx& ctx) {
    std::size_t k = b;
    while (k < e) {
      bool async = false;
      if (tok(k).Is("{") && IsFunctionBody(k, &async)) {
        Ctx inner{true, ctx.in_test || IsTestCallback(k), async, false};
        ScanRange(k + 1, match(k), inner);
        k = match(k) + 1;
      } else {
        ++k;
      }
    }
  }

  bool IsFunctionBody(std::size_t k, bool* async) const {
    if (k == 0) return false;
    const Token& p = tok(k - 1);
    if (p.Is("=>")) {
      if (k < 2) return true;
      std::size_t head = ReturnTypeStart(k - 2);
      if (tok(head).Is(")")) head = match(head);
      *async = head > 0 && tok(head - 1).Is("async");
      return true;
    }
    if (!p.Is(")")) return false;
    std::size_t open = match(k - 1);
    if (open == 0) return false;
    std::size_t before = open - 1;
    const Token& b = tok(before);
    if (b.Is("function") || (b.Is("*") && before > 0 &&
                             tok(before - 1).Is("function"))) {
      std::size_t f = b.Is("*") ? before - 1 : before;
      *async = f > 0 && tok(f - 1).Is("async");
      return true;
    }
    if (b.kind != TokenKind::kIdentifier) return false;
    static const std::set<std::string_view> kControl = {
        "if", "for", "while", "switch", "catch", "with"};
    if (kControl.count(b.text)) return false;
    if (before > 0 && tok(before - 1).Is("function")) {
      *async = before > 1 && tok(before - 2).Is("async");
      return true;
    }
    // Method shorthand: `name(...) {` directly inside an object or class.
    if (before > 0) {
      const Token& bb = tok(before - 1);
      if (bb.Is("async")) {
        *async = true;
        return true;
      }
      if (bb.Is("{") || bb.Is(",") || bb.Is("}") || bb.Is(";") ||
          bb.Is("static") || bb.Is("get") || bb.Is("set")) {
        *async = false;
        return true;
      }
    }
    return false;
  }

  // For `(params): Type =>`, the index of the closing parenthesis of the
  // parameter list; |k| (the token before the arrow) otherwise.
  std::size_t ReturnTypeStart(std::size_t k) const {
    std::size_t j = k;
    for (int steps = 0; steps < 64 && j > 0; ++steps) {
      const Token& t = tok(j);
      if (t.Is(":")) return tok(j - 1).Is(")") ? j - 1 : k;
      if (t.Is(")") || t.Is("]") || t.Is("}")) {
        if (j == k && t.Is(")")) return k;
        j = match(j);
        if (j == 0) return k;
        --j;
        continue;
      }
      if (t.Is(";") || t.Is("{") || t.Is("(") || t.Is("=>") || t.Is("=") ||
          t.Is(","))
        return k;
      --j;
    }
    return k;
  }

  // If |k| opens TypeScript type arguments that are directly followed by a
  // call, the index of that call's "("; npos otherwise.
  std::size_t TypeArgsCall(std::size_t k, std::size_t e) const {
    if (k >= e || !tok(k).Is("<")) return kNpos;
    int depth = 0;
    std::size_t j = k;
    for (int steps = 0; steps < 64 && j < e; ++steps) {
      const Token& t = tok(j);
      if (t.Is("<")) {
        ++depth;
      } else if (t.Is(">")) {
        --depth;
      } else if (t.Is(">>")) {
        depth -= 2;
      } else if (t.Is(";") || t.Is("&&") || t.Is("||") || t.Is("=")) {
        return kNpos;
      }
      if (depth < 0) return kNpos;
      j = Skip(j);
      if (depth == 0) return j < e && tok(j).Is("(") ? j : kNpos;
    }
    return kNpos;
  }

  // If |k| closes type arguments, the index of their opening "<"; |k|
  // otherwise.
  std::size_t TypeArgsOpen(std::size_t k) const {
    if (!(tok(k).Is(">") || tok(k).Is(">>"))) return k;
    int depth = 0;
    std::size_t j = k;
    for (int steps = 0; steps < 64; ++steps) {
      const Token& t = tok(j);
      if (t.Is(">")) {
        ++depth;
      } else if (t.Is(">>")) {
        depth += 2;
      } else if (t.Is("<")) {
        --depth;
      } else if (t.Is(")") || t.Is("]") || t.Is("}")) {
        j = match(j);
      } else if (t.Is(";") || t.Is("=") || t.Is("{") || t.Is("(")) {
        return k;
      }
      if (depth == 0) return j;
      if (depth < 0 || j == 0) return k;
      --j;
    }
    return k;
  }

  // The body at |k| is the callback argument of it()/test()/specify().
  bool IsTestCallback(std::size_t k) const {
    std::size_t call = ts_.parent[k];
    if (call == kNpos || !tok(call).Is("(") || call == 0) return false;
    std::size_t callee = call - 1;
    if (tok(callee).kind != TokenKind::kIdentifier) return false;
    if (callee >= 2 && tok(callee - 1).Is(".") &&
        tok(callee - 2).kind == TokenKind::kIdentifier &&
        Contains(kTestFunctions, tok(callee - 2).text)) {
      std::string_view mod = tok(callee).text;
      return mod == "only" || mod == "skip" || mod == "concurrent";
    }
    if (!Contains(kTestFunctions, tok(callee).text)) return false;
    return callee == 0 || !(tok(callee - 1).Is(".") || tok(callee - 1).Is("?."));
  }

  // Walks back from the member token |k| to the root identifier of its chain.
  std::size_t ChainRoot(std::size_t k) const {
    std::size_t j = k;
    while (j >= 2 && (tok(j - 1).Is(".") || tok(j - 1).Is("?."))) {
      std::size_t p = j - 2;
      while (tok(p).Is(")") || tok(p).Is("]")) {
        p = match(p);
        if (p == 0) return kNpos;
        --p;
        std::size_t open = TypeArgsOpen(p);
        if (open != p) {
          if (open == 0) return kNpos;
          p = open - 1;
        }
      }
      if (tok(p).kind != TokenKind::kIdentifier) return kNpos;
      j = p;
    }
    return j;
  }

  bool IsVerbCall(std::size_t k) const {
    const Token& t = tok(k);
    if (t.kind != TokenKind::kIdentifier || k == 0 ||
        k + 1 >= ts_.tokens.size())
      return false;
    if (!(tok(k - 1).Is(".") || tok(k - 1).Is("?.")))
      return false;
    if (!tok(k + 1).Is("(") &&
        TypeArgsCall(k + 1, ts_.tokens.size()) == kNpos)
      return false;
    std::size_t root = ChainRoot(k);
    if (dialect_ == Dialect::kCypress) {
      return IsVerb(dialect_, t.text) && root != kNpos &&
             tok(root).text == "cy";
    }
    if (t.text == "get") {
      return root != kNpos && root + 2 == k && IsDriverName(tok(root).text);
    }
    return IsVerb(dialect_, t.text);
  }

  // Records a candidate site if [i, end) is a bare command chain, optionally
  // awaited and optionally bound by a declaration.
  void Consider(std::size_t i, std::size_t end, const Ctx& ctx) {
    std::size_t last = end;
    if (last > i && tok(last - 1).Is(";")) --last;
    std::size_t k = i;
    if (k < last &&
        (tok(k).Is("const") || tok(k).Is("let") || tok(k).Is("var"))) {
      ++k;
      if (k >= last) return;
      if (tok(k).Is("{") || tok(k).Is("[")) {
        k = match(k) + 1;
      } else if (tok(k).kind == TokenKind::kIdentifier) {
        ++k;
      } else {
        return;
      }
      if (k < last && tok(k).Is(":")) {
        while (k < last && !tok(k).Is("=")) k = Skip(k);
      }
      if (k >= last || !tok(k).Is("=")) return;
      ++k;
    }
    bool awaited = false;
    if (k < last && tok(k).Is("await")) {
      awaited = true;
      ++k;
    }
    if (k >= last || tok(k).kind != TokenKind::kIdentifier ||
        (IsReservedWord(tok(k).text)))
      return;
    const std::size_t root = k++;
    std::size_t root_end = root;  // last token of the receiver expression
    bool seen_call = false;
    std::vector<std::size_t> called;
    while (k < last) {
      const Token& t = tok(k);
      if ((t.Is(".") || t.Is("?.")) && k + 1 < last &&
          tok(k + 1).kind == TokenKind::kIdentifier) {
        std::size_t name = k + 1;
        k += 2;
        if (std::size_t call = TypeArgsCall(k, last); call != kNpos) k = call;
        if (k + 1 < last && tok(k).Is("?.") && tok(k + 1).Is("(")) ++k;
        if (k < last && tok(k).Is("(")) {
          called.push_back(name);
          seen_call = true;
          k = match(k) + 1;
        } else if (!seen_call) {
          root_end = name;
        }
        continue;
      }
      if (t.Is("?.") && k + 1 < last &&
          (tok(k + 1).Is("(") || tok(k + 1).Is("["))) {
        ++k;
        continue;
      }
      if (t.Is("(") || t.Is("[")) {
        seen_call = true;
        k = match(k) + 1;
        continue;
      }
      if (t.Is("!") || t.kind == TokenKind::kTemplate) {
        ++k;
        continue;
      }
      break;
    }
    if (k != last) return;

    std::string_view root_text = tok(root).text;
    if (dialect_ == Dialect::kCypress && root_text != "cy") return;
    std::string verb;
    std::vector<std::size_t> verbs;
    for (std::size_t name : called) {
      if (IsVerbCall(name)) {
        verb = std::string(tok(name).text);
        verbs.push_back(name);
      }
    }
    if (verb.empty()) return;

    Candidate c;
    c.first = i;
    c.last = end - 1;
    c.site.begin = tok(i).begin;
    c.site.end = tok(end - 1).end;
    c.site.line = tok(i).line;
    c.site.name = verb;
    c.site.dialect = dialect_;
    c.site.chain_root = std::string(
        src_.substr(tok(root).begin, tok(root_end).end - tok(root).begin));
    c.site.awaited = awaited;
    if (!ctx.in_function || !ctx.in_test) {
      c.skip_reason = "command outside a test body";
    } else if (ctx.bare_body) {
      c.skip_reason = "command is the unbraced body of a control statement";
    } else if (dialect_ == Dialect::kSelenium && !ctx.async_fn) {
      c.skip_reason = "command in a non-async function";
    }
    covered_.insert(verbs.begin(), verbs.end());
    candidates_.push_back(std::move(c));
  }

  std::string_view src_;
  const TokenStream& ts_;
  Dialect dialect_;
  std::vector<Candidate> candidates_;
  std::set<std::size_t> covered_;
};

std::string_view NewlineOf(std::string_view source) {
  std::size_t nl = source.find('\n');
  if (nl != std::string_view::npos && nl > 0 && source[nl - 1] == '\r')
    return "\r\n";
  return "\n";
}

// Leading blanks of the line containing |pos|, up to |pos|.
std::string_view IndentAt(std::string_view source, std::size_t pos) {
  std::size_t ls = pos == 0 ? 0 : source.rfind('\n', pos - 1);
  ls = ls == std::string_view::npos || pos == 0 ? 0 : ls + 1;
  std::size_t j = ls;
  while (j < pos && (source[j] == ' ' || source[j] == '\t')) ++j;
  return source.substr(ls, j - ls);
}

std::string OpenMarker(std::string_view kind, int id) {
  return std::string(kSentinelBegin) + std::string(kind) + " " +
         std::to_string(id) + " */";
}

std::string InlineRegion(std::string_view kind, int id,
                         const std::string& body) {
  return OpenMarker(kind, id) + " " + body + " " + std::string(kSentinelEnd);
}

std::string Quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

bool UsesModules(const TokenStream& ts) {
  for (std::size_t i = 0; i < ts.tokens.size(); ++i) {
    const Token& t = ts.tokens[i];
    if (ts.parent[i] != kNpos || t.kind != TokenKind::kIdentifier) continue;
    if (t.text == "export") return true;
    if (t.text == "import" && i + 1 < ts.tokens.size() &&
        !ts.tokens[i + 1].Is("(") && !ts.tokens[i + 1].Is("."))
      return true;
  }
  return false;
}

struct Edit {
  std::size_t pos;
  int order;  // among edits at the same position, lower goes first
  std::string text;
};

std::string ApplyEdits(std::string_view source, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    return std::tie(a.pos, a.order) < std::tie(b.pos, b.order);
  });
  std::string out;
  std::size_t at = 0;
  for (const Edit& e : edits) {
    out.append(source.substr(at, e.pos - at));
    out += e.text;
    at = e.pos;
  }
  out.append(source.substr(at));
  return out;
}

}  // namespace

ScanResult FindCommands(std::string_view source, Dialect dialect,
                        std::string_view file) {
  TokenStream ts = Tokenize(source, file);
  return Scanner(source, ts, dialect).Run();
}

Dialect DetectDialect(std::string_view source) {
  try {
    TokenStream ts = Tokenize(source);
    for (std::size_t i = 0; i + 1 < ts.tokens.size(); ++i) {
      if (ts.tokens[i].kind == TokenKind::kIdentifier &&
          ts.tokens[i].text == "cy" && ts.tokens[i + 1].Is("."))
        return Dialect::kCypress;
    }
    return Dialect::kSelenium;
  } catch (const ParseFailure&) {
    return source.find("cy.") != std::string_view::npos ? Dialect::kCypress
                                                        : Dialect::kSelenium;
  }
}

bool HasSentinels(std::string_view source) {
  return source.find(kSentinelBegin) != std::string_view::npos ||
         source.find(kSentinelEnd) != std::string_view::npos;
}

InstrumentResult InstrumentRecording(std::string_view source, Dialect dialect,
                                     std::string_view file,
                                     const InstrumentOptions& options) {
  if (HasSentinels(source))
    throw AlreadyInstrumented(std::string(file) +
                              ": file already contains wefix sentinels");
  TokenStream ts = Tokenize(source, file);
  InstrumentResult result;
  result.scan = Scanner(source, ts, dialect).Run();
  if (result.scan.sites.empty()) {
    result.text = std::string(source);
    return result;
  }
  const std::string nl(NewlineOf(source));
  const std::string loc_file =
      options.loc_file.empty() ? std::string(file) : options.loc_file;

  std::vector<Edit> edits;
  int ordinal = 0;
  for (const CommandSite& site : result.scan.sites) {
    ++ordinal;
    const std::string indent(IndentAt(source, site.begin));
    const std::string loc = loc_file + ":" + std::to_string(site.line);
    std::string pre, post;
    if (dialect == Dialect::kSelenium) {
      pre = "await wefix.pre(" + site.chain_root + ", " +
            std::to_string(ordinal) + ", " + Quote(site.name) + ", " +
            Quote(loc) + ");";
      post = "await wefix.post(" + site.chain_root + ", " +
             std::to_string(ordinal) + ");";
    } else {
      pre = "wefix.pre(" + std::to_string(ordinal) + ", " + Quote(site.name) +
            ", " + Quote(loc) + ");";
      post = "wefix.post(" + std::to_string(ordinal) + ");";
    }
    edits.push_back({site.begin, 1,
                     InlineRegion("hook-pre", ordinal, pre) + nl + indent});
    edits.push_back(
        {site.end, 0, nl + indent + InlineRegion("hook-post", ordinal, post)});
  }

  // The helper is loaded before the first statement that is not part of a
  // directive prologue, so "use strict" keeps its meaning.
  std::size_t k = 0;
  const std::size_t n = ts.tokens.size();
  while (k < n && ts.tokens[k].kind == TokenKind::kString &&
         (k + 1 >= n || ts.tokens[k + 1].Is(";") ||
          ts.tokens[k + 1].newline_before)) {
    k += (k + 1 < n && ts.tokens[k + 1].Is(";")) ? 2 : 1;
  }
  const std::size_t anchor = k < n ? ts.tokens[k].begin : source.size();
  const std::string spec = Quote(options.runtime_specifier);
  const std::string load = UsesModules(ts)
                               ? "import * as wefix from " + spec + ";"
                               : "const wefix = require(" + spec + ");";
  edits.push_back({anchor, 2,
                   InlineRegion("hook-pre", 0, load) + nl +
                       std::string(IndentAt(source, anchor))});
  result.text = ApplyEdits(source, std::move(edits));
  return result;
}

std::string InsertWaits(std::string_view source, const FixPlan& plan) {
  if (plan.insertions.empty()) return std::string(source);
  const Dialect dialect = plan.insertions.front().site.dialect;
  ScanResult scan = FindCommands(source, dialect, plan.file);
  const std::string nl(NewlineOf(source));
  std::set<int> seen;
  std::vector<Edit> edits;
  for (const WaitInsertion& ins : plan.insertions) {
    if (ins.snippet_dialect != ins.site.dialect)
      throw DialectMismatch(plan.file + ":" + std::to_string(ins.site.line) +
                            ": " + std::string(DialectName(ins.snippet_dialect)) +
                            " wait for a " +
                            std::string(DialectName(ins.site.dialect)) +
                            " command");
    if (ins.site_ordinal < 1 ||
        static_cast<std::size_t>(ins.site_ordinal) > scan.sites.size() ||
        !(scan.sites[ins.site_ordinal - 1] == ins.site))
      throw StaleSites(plan.file + ":" + std::to_string(ins.site.line) +
                       ": command site no longer matches the source");
    if (!seen.insert(ins.site_ordinal).second)
      throw std::invalid_argument(plan.file + ": two waits for command " +
                                  std::to_string(ins.site_ordinal));
    const std::string indent(IndentAt(source, ins.site.begin));
    std::string region = OpenMarker("wait", ins.site_ordinal);
    std::size_t from = 0;
    while (from <= ins.snippet.size()) {
      std::size_t to = ins.snippet.find('\n', from);
      if (to == std::string::npos) to = ins.snippet.size();
      std::string_view line =
          std::string_view(ins.snippet).substr(from, to - from);
      region += nl;
      if (!line.empty()) region += indent + std::string(line);
      from = to + 1;
    }
    region += nl + indent + std::string(kSentinelEnd);
    edits.push_back({ins.site.end, 0, nl + indent + region});
  }
  return ApplyEdits(source, std::move(edits));
}

std::string StripHooks(std::string_view source) {
  struct Range {
    std::size_t begin, end;
  };
  std::vector<Range> removals;
  std::size_t pos = 0;
  auto fail = [&](std::size_t at, const std::string& what) {
    throw UnbalancedSentinels("line " + std::to_string(LineOf(source, at)) +
                              ": " + what);
  };
  while (true) {
    std::size_t b = source.find(kSentinelBegin, pos);
    std::size_t e = source.find(kSentinelEnd, pos);
    if (b == std::string_view::npos) {
      if (e != std::string_view::npos) fail(e, "end marker without begin");
      break;
    }
    if (e == std::string_view::npos) fail(b, "begin marker without end");
    if (e < b) fail(e, "end marker without begin");
    std::size_t next = source.find(kSentinelBegin, b + 1);
    if (next < e) fail(next, "nested begin marker");
    std::size_t header_end = source.find(" */", b + kSentinelBegin.size());
    if (header_end > e) fail(b, "malformed begin marker");
    std::string_view header = source.substr(
        b + kSentinelBegin.size(), header_end - b - kSentinelBegin.size());
    std::size_t space = header.find(' ');
    std::string_view kind = header.substr(0, space);
    std::string_view id =
        space == std::string_view::npos ? "" : header.substr(space + 1);
    if (!(kind == "hook-pre" || kind == "hook-post" || kind == "wait") ||
        id.empty() ||
        !std::all_of(id.begin(), id.end(),
                     [](unsigned char c) { return std::isdigit(c); }))
      fail(b, "malformed begin marker");
    std::size_t region_end = e + kSentinelEnd.size();
    if (kind == "hook-pre") {
      std::string_view indent = IndentAt(source, b);
      std::size_t j = region_end;
      if (source.compare(j, 2, "\r\n") == 0) {
        j += 2;
      } else if (source.compare(j, 1, "\n") == 0) {
        j += 1;
      } else {
        fail(b, "hook region not followed by a line break");
      }
      if (source.compare(j, indent.size(), indent) != 0)
        fail(b, "hook region indentation changed");
      removals.push_back({b, j + indent.size()});
    } else {
      std::size_t j = b;
      while (j > 0 && (source[j - 1] == ' ' || source[j - 1] == '\t')) --j;
      if (j == 0 || source[j - 1] != '\n')
        fail(b, "region not preceded by a line break");
      --j;
      if (j > 0 && source[j - 1] == '\r') --j;
      removals.push_back({j, region_end});
    }
    pos = region_end;
  }
  std::sort(removals.begin(), removals.end(),
            [](const Range& a, const Range& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t at = 0;
  for (const Range& r : removals) {
    if (r.begin < at) fail(r.begin, "overlapping regions");
    out.append(source.substr(at, r.begin - at));
    at = r.end;
  }
  out.append(source.substr(at));
  return out;
}

}  // namespace wefix
