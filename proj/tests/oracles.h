// Independent reference implementations shared by the unit tests and the
// acceptance run. They use none of the library's algorithms.

#ifndef WEFIX_TESTS_ORACLES_H_
#define WEFIX_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "wefix/analyzer.h"
#include "wefix/fsm_oracle.h"
#include "wefix/trace_model.h"

namespace wefix::testing {

// Listen window -----------------------------------------------------------------

// The window is recomputed from scratch over the events captured so far
// rather than updated incrementally.
struct NaiveResult {
  double omega = 1.0;
  std::vector<std::size_t> captured;
};

inline NaiveResult NaiveWindow(const std::vector<double>& ev) {
  NaiveResult r;
  auto omega_of = [&] {
    double largest = 0.0;
    for (std::size_t c : r.captured) largest = std::max(largest, ev[c]);
    return std::min(20.0, std::max(1.0, 2.0 * largest));
  };
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i] >= omega_of()) break;
    r.captured.push_back(i);
  }
  r.omega = omega_of();
  return r;
}

inline std::vector<double> RandomStream(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 12);
  std::uniform_int_distribution<int> scale(0, 2);
  std::vector<double> ev(count(rng));
  double hi = std::array<double, 3>{2.0, 8.0, 25.0}[scale(rng)];
  std::uniform_real_distribution<double> t(0.0, hi);
  for (double& e : ev) e = t(rng);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Mutation builders ---------------------------------------------------------------

inline MutationRecord TextMut(std::uint32_t seq, const ElementLocator& el,
                              std::string from, std::string to) {
  MutationRecord m;
  m.cmd_id = 1;
  m.seq = seq;
  m.t_ms = seq * 10;
  m.kind = MutationKind::kCharacterData;
  m.target = el;
  m.text_change = TextChange{std::move(from), std::move(to)};
  return m;
}

inline MutationRecord AttrMut(std::uint32_t seq, const ElementLocator& el,
                              std::string name, std::optional<std::string> from,
                              std::optional<std::string> to) {
  MutationRecord m = TextMut(seq, el, "", "");
  m.kind = MutationKind::kAttributes;
  m.text_change.reset();
  m.attr_change = AttrChange{std::move(name), std::move(from), std::move(to)};
  return m;
}

inline MutationRecord ChildMut(std::uint32_t seq, const ElementLocator& el,
                               std::int64_t added, std::int64_t removed,
                               std::int64_t count) {
  MutationRecord m = TextMut(seq, el, "", "");
  m.kind = MutationKind::kChildList;
  m.text_change.reset();
  m.child_change = ChildChange{added, removed, count};
  return m;
}

// Flaky-prone ---------------------------------------------------------------------

struct RandomSpan {
  CommandSpan span;
  bool flaky_prone = false;  // some mutation strictly after the settle
};

inline RandomSpan RandomFlakySpan(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_int_distribution<std::int64_t> time(0, 400);
  RandomSpan r;
  r.span.cmd_id = 1;
  r.span.name = "click";
  r.span.source_loc = {"a.test.js", 1};
  r.span.settle_ms = time(rng);
  std::vector<std::int64_t> ts(count(rng));
  for (auto& t : ts) t = time(rng);
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    MutationRecord m = TextMut(static_cast<std::uint32_t>(i + 1),
                               {"/html/body/p[1]", std::nullopt}, "", "v");
    m.t_ms = ts[i];
    r.span.mutations.push_back(m);
    if (ts[i] > r.span.settle_ms) r.flaky_prone = true;
  }
  return r;
}

// FSM instances -------------------------------------------------------------------

// (xpath, kind 0 attr / 1 text / 2 child count, attribute name)
using PropKey = std::tuple<std::string, int, std::string>;
// Absent attributes are tracked as nullopt; text and counts always hold a
// value.
using Snapshot = std::map<PropKey, std::optional<std::string>>;

struct FsmInstance {
  std::vector<MutationRecord> muts;
  std::vector<Snapshot> values;               // S_0..S_j
  std::map<PropKey, std::uint32_t> last_idx;  // brute-force superscripts
};

// Up to 10 elements and 20 mutations over class/title attributes, text and
// child counts.
inline FsmInstance RandomFsmInstance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_el(1, 10), n_mut(0, 20), pick(0, 99);
  const int elements = n_el(rng);
  const int count = n_mut(rng);
  const char* const kValues[] = {"a", "b", "c"};
  const char* const kAttrs[] = {"class", "title"};

  FsmInstance inst;
  Snapshot truth;  // the page as it really is, including never-mutated props
  auto locator = [](int k) {
    ElementLocator loc{"/html/body/div[" + std::to_string(k + 1) + "]",
                       std::nullopt};
    if (k % 3 == 0) loc.dom_id = "el" + std::to_string(k);
    return loc;
  };
  for (int k = 0; k < elements; ++k) {
    std::string x = locator(k).xpath;
    truth[{x, 1, ""}] = kValues[pick(rng) % 3];
    truth[{x, 2, ""}] = std::to_string(pick(rng) % 4);
    for (const char* a : kAttrs)
      truth[{x, 0, a}] = pick(rng) % 4 == 0
                             ? std::nullopt
                             : std::optional<std::string>(kValues[pick(rng) % 3]);
  }

  Snapshot tracked;
  for (int t = 1; t <= count; ++t) {
    ElementLocator el = locator(pick(rng) % elements);
    int kind = pick(rng) % 3;
    std::string attr = kind == 0 ? kAttrs[pick(rng) % 2] : "";
    PropKey key{el.xpath, kind, attr};
    std::optional<std::string> old = truth[key];
    std::optional<std::string> next;
    MutationRecord m;
    if (kind == 0) {
      next = pick(rng) % 4 == 0 ? std::nullopt
                                : std::optional<std::string>(kValues[pick(rng) % 3]);
      m = AttrMut(t, el, attr, old, next);
    } else if (kind == 1) {
      next = kValues[pick(rng) % 3];
      m = TextMut(t, el, *old, *next);
    } else {
      std::int64_t before = std::stoll(*old);
      std::int64_t removed = before > 0 ? pick(rng) % (before + 1) : 0;
      std::int64_t added = pick(rng) % 3;
      next = std::to_string(before - removed + added);
      m = ChildMut(t, el, added, removed, before - removed + added);
    }
    if (!tracked.count(key)) tracked[key] = old;
    inst.muts.push_back(m);
    truth[key] = next;
    inst.last_idx[key] = static_cast<std::uint32_t>(t);
  }

  Snapshot s = tracked;
  inst.values.push_back(s);
  for (const MutationRecord& m : inst.muts) {
    if (m.attr_change) {
      s[{m.target.xpath, 0, m.attr_change->name}] = m.attr_change->new_value;
    } else if (m.text_change) {
      s[{m.target.xpath, 1, ""}] = m.text_change->new_value;
    } else {
      s[{m.target.xpath, 2, ""}] =
          std::to_string(m.child_change->resulting_count);
    }
    inst.values.push_back(s);
  }
  return inst;
}

inline PropKey KeyOf(const PropertyRef& p) {
  return {p.element.xpath, static_cast<int>(p.kind), p.attr_name};
}

inline std::optional<std::string> ValueOf(const PropertyRef& p) {
  if (p.kind == PropertyKind::kChildLen) return std::to_string(p.count_value);
  return p.string_value;
}

struct FsmCheck {
  std::string failure;  // empty when every property holds
  bool has_oracle = false;
  bool fallback = false;
};

// Checks the FSM states against the replay, then the oracle generated from
// the FSM: true on the end state, and false on the state before its latest
// property was written unless no mutated property distinguishes the end
// state, in which case it must be the plain top-k selection.
inline FsmCheck CheckFsmInstance(const FsmInstance& inst) {
  FsmCheck c;
  MutationFSM fsm = BuildFsm(inst.muts, InitialStateFrom(inst.muts));
  if (fsm.states.size() != inst.muts.size() + 1) {
    c.failure = "state count";
    return c;
  }
  if (!fsm.issues.empty()) {
    c.failure = "unexpected child-count issue";
    return c;
  }
  for (std::size_t t = 0; t < fsm.states.size(); ++t) {
    std::map<PropKey, std::uint32_t> stamps;
    for (std::size_t u = 0; u < t; ++u) {
      const MutationRecord& m = inst.muts[u];
      int kind = m.attr_change ? 0 : m.text_change ? 1 : 2;
      stamps[{m.target.xpath, kind, m.attr_change ? m.attr_change->name : ""}] =
          static_cast<std::uint32_t>(u + 1);
    }
    std::vector<PropertyRef> props = AllProperties(fsm.states[t]);
    if (props.size() != inst.values[t].size()) {
      c.failure = "property count in S_" + std::to_string(t);
      return c;
    }
    for (const PropertyRef& p : props) {
      PropKey k = KeyOf(p);
      auto v = inst.values[t].find(k);
      if (v == inst.values[t].end() || ValueOf(p) != v->second) {
        c.failure = "value in S_" + std::to_string(t);
        return c;
      }
      auto it = stamps.find(k);
      if (p.last_mut_idx != (it == stamps.end() ? 0u : it->second)) {
        c.failure = "superscript in S_" + std::to_string(t);
        return c;
      }
    }
  }
  if (inst.muts.empty()) return c;

  c.has_oracle = true;
  const DomState& end = EndState(fsm);
  WaitOracle raw = GenerateOracle(end);
  WaitOracle o = GenerateOracle(fsm);
  if (o.predicates.empty() || !EvalOracle(o, end) || !EvalOracle(raw, end)) {
    c.failure = "oracle false on the end state";
    return c;
  }
  std::uint32_t t_star = 0;
  for (const PropertyRef& p : o.predicates)
    t_star = std::max(t_star, p.last_mut_idx);
  bool distinguishes = false;
  for (const auto& [key, idx] : inst.last_idx)
    if (inst.values[idx - 1].at(key) != inst.values.back().at(key))
      distinguishes = true;
  if (distinguishes) {
    if (EvalOracle(o, fsm.states[t_star - 1]))
      c.failure = "oracle true before its latest write";
  } else {
    c.fallback = true;
    if (!(o.predicates == raw.predicates)) c.failure = "fallback selection";
  }
  return c;
}

}  // namespace wefix::testing

#endif  // WEFIX_TESTS_ORACLES_H_
