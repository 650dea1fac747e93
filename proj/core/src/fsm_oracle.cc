#include "wefix/fsm_oracle.h"

#include <algorithm>
#include <charconv>

namespace wefix {

namespace {

// Parses the leading "tag[k]" step of |rest| and returns k, or nullopt when
// the step is not positional.
std::optional<int> LeadingStepPosition(std::string_view rest) {
  std::string_view step = rest.substr(0, rest.find('/'));
  auto open = step.find('[');
  if (open == std::string_view::npos) return std::nullopt;
  if (step.back() != ']') return std::nullopt;
  std::string_view digits = step.substr(open + 1, step.size() - open - 2);
  int pos = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), pos);
  if (ec != std::errc() || ptr != digits.data() + digits.size())
    return std::nullopt;
  return pos;
}

// Removes tracked elements below |parent| that cannot exist once the parent
// holds only |count| children: a node addressed as tag[k] implies at least
// k children.
void DropDetachedChildren(DomState& state, const std::string& parent,
                          std::int64_t count) {
  const std::string prefix = parent + "/";
  std::vector<std::string> detached;
  for (const auto& [loc, status] : state.elements) {
    if (loc.xpath.size() <= prefix.size() ||
        loc.xpath.compare(0, prefix.size(), prefix) != 0)
      continue;
    std::string_view rest = std::string_view(loc.xpath).substr(prefix.size());
    auto pos = LeadingStepPosition(rest);
    if (pos && *pos > count) {
      std::string child(prefix);
      child += rest.substr(0, rest.find('/'));
      detached.push_back(child);
    }
  }
  for (const std::string& child : detached) {
    for (auto it = state.elements.begin(); it != state.elements.end();) {
      const std::string& x = it->first.xpath;
      bool inside = x == child || (x.size() > child.size() &&
                                   x.compare(0, child.size(), child) == 0 &&
                                   x[child.size()] == '/');
      it = inside ? state.elements.erase(it) : std::next(it);
    }
  }
}

ElementStatus& ElementFor(DomState& state, const ElementLocator& target) {
  auto it = state.elements.find(target);
  if (it == state.elements.end())
    it = state.elements.emplace(target, ElementStatus{}).first;
  return it->second;
}

bool SameValue(const PropertyRef& a, const PropertyRef& b) {
  if (a.kind == PropertyKind::kChildLen) return a.count_value == b.count_value;
  return a.string_value == b.string_value;
}

bool Holds(const PropertyRef& expected, const PropertyRef& actual) {
  if (expected.kind == PropertyKind::kChildLen)
    return actual.count_value == expected.count_value;
  if (expected.truncated && expected.string_value) {
    return actual.string_value &&
           actual.string_value->compare(0, expected.string_value->size(),
                                        *expected.string_value) == 0;
  }
  return actual.string_value == expected.string_value;
}

std::vector<PropertyRef> MutatedByRecency(const DomState& state) {
  std::vector<PropertyRef> props;
  for (PropertyRef& p : AllProperties(state))
    if (p.last_mut_idx > 0) props.push_back(std::move(p));
  // AllProperties is already in tie-break order; a stable sort keeps it.
  std::stable_sort(props.begin(), props.end(),
                   [](const PropertyRef& a, const PropertyRef& b) {
                     return a.last_mut_idx > b.last_mut_idx;
                   });
  return props;
}

constexpr std::string_view kPrefixNote =
    "// wefix: prefix match, value truncated at capture";

std::string CypressLine(const PropertyRef& p, int timeout_ms) {
  std::string head = "cy.xpath(" + JsStringLiteral(OracleXpath(p.element)) +
                     ", { timeout: " + std::to_string(timeout_ms) + " })";
  switch (p.kind) {
    case PropertyKind::kChildLen:
      return head + ".children().should(\"have.length\", " +
             std::to_string(p.count_value) + ");";
    case PropertyKind::kText:
      if (p.truncated)
        return std::string(kPrefixNote) + "\n" + head +
               ".should(($el) => expect($el.text().startsWith(" +
               JsStringLiteral(*p.string_value) + ")).to.equal(true));";
      return head + ".should(\"have.text\", " +
             JsStringLiteral(p.string_value.value_or("")) + ");";
    case PropertyKind::kAttr: {
      std::string name = JsStringLiteral(p.attr_name);
      if (!p.string_value)
        return head + ".should(\"not.have.attr\", " + name + ");";
      if (p.truncated)
        return std::string(kPrefixNote) + "\n" + head +
               ".should(($el) => expect(String($el.attr(" + name +
               ")).startsWith(" + JsStringLiteral(*p.string_value) +
               ")).to.equal(true));";
      return head + ".should(\"have.attr\", " + name + ", " +
             JsStringLiteral(*p.string_value) + ");";
    }
  }
  return head + ";";
}

std::string SeleniumCheck(const PropertyRef& p, const std::string& el) {
  const std::string first = el + "[0]";
  switch (p.kind) {
    case PropertyKind::kChildLen:
      return "(await " + first + ".findElements({ xpath: \"./*\" })).length !== " +
             std::to_string(p.count_value);
    case PropertyKind::kText:
    case PropertyKind::kAttr: {
      std::string name = p.kind == PropertyKind::kText
                             ? JsStringLiteral("textContent")
                             : JsStringLiteral(p.attr_name);
      std::string read = "await " + first + ".getAttribute(" + name + ")";
      if (!p.string_value) return "(" + read + ") !== null";
      if (p.truncated)
        return "!String(" + read + ").startsWith(" +
               JsStringLiteral(*p.string_value) + ")";
      return "(" + read + ") !== " + JsStringLiteral(*p.string_value);
    }
  }
  return "false";
}

}  // namespace

std::string_view DialectName(Dialect dialect) {
  return dialect == Dialect::kCypress ? "cypress" : "selenium-webdriver";
}

Dialect ParseDialect(std::string_view name) {
  if (name == "cypress") return Dialect::kCypress;
  if (name == "selenium" || name == "selenium-webdriver")
    return Dialect::kSelenium;
  throw UnsupportedDialect("unsupported framework: " + std::string(name));
}

DomState InitialStateFrom(std::span<const MutationRecord> mutations) {
  DomState state;
  for (const MutationRecord& m : mutations) {
    ElementStatus& e = ElementFor(state, m.target);
    if (m.attr_change) {
      if (!e.attrs.count(m.attr_change->name))
        e.attrs[m.attr_change->name] = {m.attr_change->old_value, 0,
                                        m.truncated};
    } else if (m.text_change) {
      if (!e.text) e.text = Versioned<std::string>{m.text_change->old_value, 0,
                                                   m.truncated};
    } else if (m.child_change && !e.child_count) {
      std::int64_t before = m.child_change->resulting_count -
                            m.child_change->added + m.child_change->removed;
      if (before >= 0) e.child_count = Versioned<std::int64_t>{before, 0, false};
    }
  }
  return state;
}

void ApplyMutation(DomState& state, const MutationRecord& m,
                   std::uint32_t index,
                   std::vector<InconsistentMutation>* issues) {
  ElementStatus& e = ElementFor(state, m.target);
  if (m.attr_change) {
    e.attrs[m.attr_change->name] = {m.attr_change->new_value, index,
                                    m.truncated};
  } else if (m.text_change) {
    e.text = Versioned<std::string>{m.text_change->new_value, index,
                                    m.truncated};
  } else if (m.child_change) {
    const ChildChange& c = *m.child_change;
    if (e.child_count) {
      std::int64_t replayed = e.child_count->value + c.added - c.removed;
      if (replayed != c.resulting_count && issues)
        issues->push_back({index, m.seq, replayed, c.resulting_count});
    }
    e.child_count = Versioned<std::int64_t>{c.resulting_count, index, false};
    if (c.removed > 0) DropDetachedChildren(state, m.target.xpath, c.resulting_count);
  }
  state.index = index;
}

MutationFSM BuildFsm(std::span<const MutationRecord> kept,
                     const DomState& initial) {
  MutationFSM fsm;
  fsm.states.reserve(kept.size() + 1);
  fsm.states.push_back(initial);
  fsm.states.back().index = 0;
  for (std::size_t t = 1; t <= kept.size(); ++t) {
    DomState next = fsm.states.back();
    auto idx = static_cast<std::uint32_t>(t);
    ApplyMutation(next, kept[t - 1], idx, &fsm.issues);
    fsm.states.push_back(std::move(next));
    fsm.transitions.push_back({idx - 1, kept[t - 1].seq, idx});
  }
  return fsm;
}

const DomState& EndState(const MutationFSM& fsm) { return fsm.states.back(); }

std::vector<PropertyRef> AllProperties(const DomState& state) {
  std::vector<PropertyRef> out;
  for (const auto& [loc, status] : state.elements) {
    for (const auto& [name, attr] : status.attrs) {
      PropertyRef p;
      p.element = loc;
      p.kind = PropertyKind::kAttr;
      p.attr_name = name;
      p.string_value = attr.value;
      p.last_mut_idx = attr.last_mut_idx;
      p.truncated = attr.truncated;
      out.push_back(std::move(p));
    }
    if (status.text) {
      PropertyRef p;
      p.element = loc;
      p.kind = PropertyKind::kText;
      p.string_value = status.text->value;
      p.last_mut_idx = status.text->last_mut_idx;
      p.truncated = status.text->truncated;
      out.push_back(std::move(p));
    }
    if (status.child_count) {
      PropertyRef p;
      p.element = loc;
      p.kind = PropertyKind::kChildLen;
      p.count_value = status.child_count->value;
      p.last_mut_idx = status.child_count->last_mut_idx;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::optional<PropertyRef> FindProperty(const DomState& state,
                                        const PropertyRef& ref) {
  auto it = state.elements.find(ref.element);
  if (it == state.elements.end()) return std::nullopt;
  const ElementStatus& e = it->second;
  PropertyRef out;
  out.element = it->first;
  out.kind = ref.kind;
  switch (ref.kind) {
    case PropertyKind::kAttr: {
      auto a = e.attrs.find(ref.attr_name);
      if (a == e.attrs.end()) return std::nullopt;
      out.attr_name = ref.attr_name;
      out.string_value = a->second.value;
      out.last_mut_idx = a->second.last_mut_idx;
      out.truncated = a->second.truncated;
      return out;
    }
    case PropertyKind::kText:
      if (!e.text) return std::nullopt;
      out.string_value = e.text->value;
      out.last_mut_idx = e.text->last_mut_idx;
      out.truncated = e.text->truncated;
      return out;
    case PropertyKind::kChildLen:
      if (!e.child_count) return std::nullopt;
      out.count_value = e.child_count->value;
      out.last_mut_idx = e.child_count->last_mut_idx;
      return out;
  }
  return std::nullopt;
}

std::vector<PropertyRef> SelectProperties(const DomState& end,
                                          std::size_t max_props) {
  std::vector<PropertyRef> props = MutatedByRecency(end);
  if (props.empty()) throw NoMutatedProperty();
  if (props.size() > max_props) props.resize(max_props);
  return props;
}

WaitOracle GenerateOracle(const DomState& end, const OracleOptions& options) {
  WaitOracle oracle;
  oracle.predicates = SelectProperties(end, options.max_props);
  oracle.poll_ms = options.poll_ms;
  oracle.timeout_ms = options.timeout_ms;
  return oracle;
}

WaitOracle GenerateOracle(const MutationFSM& fsm, const OracleOptions& options) {
  const DomState& end = EndState(fsm);
  std::vector<PropertyRef> ranked = MutatedByRecency(end);
  if (ranked.empty()) throw NoMutatedProperty();

  std::size_t first = ranked.size();
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    std::uint32_t idx = ranked[i].last_mut_idx;
    if (idx == 0 || idx >= fsm.states.size()) {
      first = i;
      break;
    }
    auto before = FindProperty(fsm.states[idx - 1], ranked[i]);
    if (!before || !SameValue(*before, ranked[i])) {
      first = i;
      break;
    }
  }
  if (first == ranked.size()) return GenerateOracle(end, options);

  WaitOracle oracle;
  std::size_t stop = std::min(ranked.size(), first + options.max_props);
  oracle.predicates.assign(ranked.begin() + static_cast<std::ptrdiff_t>(first),
                           ranked.begin() + static_cast<std::ptrdiff_t>(stop));
  oracle.poll_ms = options.poll_ms;
  oracle.timeout_ms = options.timeout_ms;
  return oracle;
}

bool EvalOracle(const WaitOracle& oracle, const DomState& state) {
  for (const PropertyRef& expected : oracle.predicates) {
    auto actual = FindProperty(state, expected);
    if (!actual || !Holds(expected, *actual)) return false;
  }
  return true;
}

std::string XpathLiteral(std::string_view text) {
  if (text.find('"') == std::string_view::npos)
    return "\"" + std::string(text) + "\"";
  if (text.find('\'') == std::string_view::npos)
    return "'" + std::string(text) + "'";
  std::string out = "concat(";
  std::size_t start = 0;
  bool first = true;
  while (start <= text.size()) {
    std::size_t quote = text.find('"', start);
    std::string_view part = text.substr(
        start, quote == std::string_view::npos ? std::string_view::npos
                                               : quote - start);
    if (!part.empty()) {
      if (!first) out += ", ";
      out += "\"" + std::string(part) + "\"";
      first = false;
    }
    if (quote == std::string_view::npos) break;
    if (!first) out += ", ";
    out += "'\"'";
    first = false;
    start = quote + 1;
  }
  return out + ")";
}

std::string BuildXpath(std::span<const PathStep> root_to_element) {
  std::size_t anchor = root_to_element.size();
  for (std::size_t i = root_to_element.size(); i-- > 0;) {
    if (root_to_element[i].dom_id) {
      anchor = i;
      break;
    }
  }
  std::string out;
  std::size_t from = 0;
  if (anchor < root_to_element.size()) {
    out = "//*[@id=" + XpathLiteral(*root_to_element[anchor].dom_id) + "]";
    from = anchor + 1;
  }
  for (std::size_t i = from; i < root_to_element.size(); ++i)
    out += "/" + root_to_element[i].tag + "[" +
           std::to_string(root_to_element[i].position) + "]";
  return out.empty() ? "/" : out;
}

std::string OracleXpath(const ElementLocator& element) {
  if (element.dom_id) return "//*[@id=" + XpathLiteral(*element.dom_id) + "]";
  return element.xpath;
}

std::string JsStringLiteral(std::string_view text) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "\"";
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    switch (c) {
      case '"':
        out += "\\\"";
        continue;
      case '\\':
        out += "\\\\";
        continue;
      case '\n':
        out += "\\n";
        continue;
      case '\r':
        out += "\\r";
        continue;
      case '\t':
        out += "\\t";
        continue;
      default:
        break;
    }
    // U+2028 and U+2029 terminate lines inside JavaScript string literals.
    if (c == 0xE2 && i + 2 < text.size() &&
        static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[i + 2]) == 0xA8 ||
         static_cast<unsigned char>(text[i + 2]) == 0xA9)) {
      out += static_cast<unsigned char>(text[i + 2]) == 0xA8 ? "\\u2028"
                                                               : "\\u2029";
      i += 2;
      continue;
    }
    if (c < 0x20 || c == 0x7F) {
      out += "\\u00";
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
      continue;
    }
    out += static_cast<char>(c);
  }
  return out + "\"";
}

std::string RenderOracle(const WaitOracle& oracle, Dialect dialect,
                         std::string_view driver) {
  std::string out;
  if (dialect == Dialect::kCypress) {
    for (const PropertyRef& p : oracle.predicates) {
      if (!out.empty()) out += '\n';
      out += CypressLine(p, oracle.timeout_ms);
    }
    return out;
  }

  const std::string d(driver);
  out = "await " + d + ".wait(async () => {\n";
  for (std::size_t i = 0; i < oracle.predicates.size(); ++i) {
    const PropertyRef& p = oracle.predicates[i];
    const std::string el = "e" + std::to_string(i + 1);
    out += "  const " + el + " = await " + d + ".findElements({ xpath: " +
           JsStringLiteral(OracleXpath(p.element)) + " });\n";
    if (p.truncated && p.kind != PropertyKind::kChildLen && p.string_value)
      out += "  " + std::string(kPrefixNote) + "\n";
    out += "  if (" + el + ".length === 0 || " + SeleniumCheck(p, el) +
           ") return false;\n";
  }
  out += "  return true;\n";
  out += "}, " + std::to_string(oracle.timeout_ms) +
         ", \"wefix: explicit wait timed out\", " +
         std::to_string(oracle.poll_ms) + ");";
  return out;
}

}  // namespace wefix
