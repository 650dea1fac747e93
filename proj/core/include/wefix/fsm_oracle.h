// Per-command mutation state machine and wait-oracle synthesis.
//
// A DomState is the status of every element the command's mutations touch.
// Each property remembers the index of the mutation that last wrote it (0
// for the state before the command ran). Replaying mutations m_1..m_j from
// S_0 yields the linear chain S_0..S_j; the oracle is built from the
// properties most recently written in S_j.

#ifndef WEFIX_FSM_ORACLE_H_
#define WEFIX_FSM_ORACLE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wefix/dialect.h"
#include "wefix/trace_model.h"

namespace wefix {

template <typename T>
struct Versioned {
  T value{};
  std::uint32_t last_mut_idx = 0;
  // The value came from a record whose payload was cut at capture time.
  bool truncated = false;

  friend bool operator==(const Versioned&, const Versioned&) = default;
};

struct ElementStatus {
  // A nullopt value means the attribute is absent.
  std::map<std::string, Versioned<std::optional<std::string>>> attrs;
  // Properties never observed stay unknown rather than defaulting.
  std::optional<Versioned<std::string>> text;
  std::optional<Versioned<std::int64_t>> child_count;

  friend bool operator==(const ElementStatus&, const ElementStatus&) = default;
};

struct DomState {
  std::uint32_t index = 0;
  std::map<ElementLocator, ElementStatus, XpathLess> elements;

  friend bool operator==(const DomState&, const DomState&) = default;
};

struct Transition {
  std::uint32_t from_idx = 0;
  std::uint32_t mutation_seq = 0;
  std::uint32_t to_idx = 0;
};

// A child-list record whose resulting count disagrees with the replayed
// count. Replay trusts the record.
struct InconsistentMutation {
  std::uint32_t state_index = 0;
  std::uint32_t mutation_seq = 0;
  std::int64_t replayed_count = 0;
  std::int64_t recorded_count = 0;
};

struct MutationFSM {
  std::vector<DomState> states;
  std::vector<Transition> transitions;
  std::vector<InconsistentMutation> issues;
};

// Reconstructs S_0 from the old values carried by |mutations|: the first
// record touching a property provides its pre-command value.
DomState InitialStateFrom(std::span<const MutationRecord> mutations);

// Applies one mutation in place, stamping the touched property with |index|
// and advancing state.index. Child-list removals also drop tracked children
// whose positional XPath step can no longer exist under the new count.
void ApplyMutation(DomState& state, const MutationRecord& m,
                   std::uint32_t index,
                   std::vector<InconsistentMutation>* issues = nullptr);

MutationFSM BuildFsm(std::span<const MutationRecord> kept,
                     const DomState& initial);

const DomState& EndState(const MutationFSM& fsm);

enum class PropertyKind { kAttr = 0, kText = 1, kChildLen = 2 };

struct PropertyRef {
  ElementLocator element;
  PropertyKind kind = PropertyKind::kText;
  std::string attr_name;                    // kAttr only
  std::optional<std::string> string_value;  // kAttr (nullopt: absent), kText
  std::int64_t count_value = 0;             // kChildLen
  std::uint32_t last_mut_idx = 0;
  bool truncated = false;

  friend bool operator==(const PropertyRef&, const PropertyRef&) = default;
};

// Every property of |state| in (xpath, kind, attr name) order.
std::vector<PropertyRef> AllProperties(const DomState& state);

// Looks up the current status of the property |ref| names.
std::optional<PropertyRef> FindProperty(const DomState& state,
                                        const PropertyRef& ref);

class NoMutatedProperty : public std::runtime_error {
 public:
  NoMutatedProperty() : std::runtime_error("no property changed") {}
};

inline constexpr std::size_t kDefaultMaxProps = 3;
inline constexpr int kDefaultPollMs = 100;
inline constexpr int kDefaultTimeoutMs = 4000;

// Up to |max_props| properties with the largest last_mut_idx, descending.
// Ties are broken by (xpath, kind, attr name). Throws NoMutatedProperty
// when nothing was written.
std::vector<PropertyRef> SelectProperties(const DomState& end,
                                          std::size_t max_props =
                                              kDefaultMaxProps);

struct WaitOracle {
  // Conjunction; last_mut_idx is informational and ignored by evaluation.
  std::vector<PropertyRef> predicates;
  int poll_ms = kDefaultPollMs;
  int timeout_ms = kDefaultTimeoutMs;
};

struct OracleOptions {
  std::size_t max_props = kDefaultMaxProps;  // 1..5
  int poll_ms = kDefaultPollMs;
  int timeout_ms = kDefaultTimeoutMs;
};

// One predicate per selected property of |end|.
WaitOracle GenerateOracle(const DomState& end, const OracleOptions& options = {});

// As above, but skips leading selections whose end value equals the value
// they had just before their last write (a reverted or idempotent write),
// so the oracle still distinguishes S_j from S_{t*-1}. Falls back to the
// plain selection when no property qualifies.
WaitOracle GenerateOracle(const MutationFSM& fsm,
                          const OracleOptions& options = {});

// True iff every predicate's element exists in |state| and its property
// currently holds the expected value. Truncated predicates match by prefix.
bool EvalOracle(const WaitOracle& oracle, const DomState& state);

// XPath helpers ---------------------------------------------------------------

struct PathStep {
  std::string tag;
  int position = 1;  // 1-based among same-tag siblings
  std::optional<std::string> dom_id;
};

// Quotes |text| as an XPath string literal, using concat() when it contains
// both quote characters.
std::string XpathLiteral(std::string_view text);

// Id-rooted path from the nearest ancestor-or-self carrying an id, else an
// absolute positional path from the document root.
std::string BuildXpath(std::span<const PathStep> root_to_element);

// The XPath an oracle uses to fetch |element|.
std::string OracleXpath(const ElementLocator& element);

// Rendering -------------------------------------------------------------------

// Double-quoted JavaScript string literal; escapes quotes, backslashes, line
// terminators and control characters.
std::string JsStringLiteral(std::string_view text);

// Renders the oracle as test-language statements without indentation,
// lines separated by '\n'. |driver| names the WebDriver handle for the
// selenium dialect.
std::string RenderOracle(const WaitOracle& oracle, Dialect dialect,
                         std::string_view driver = "driver");

}  // namespace wefix

#endif  // WEFIX_FSM_ORACLE_H_
