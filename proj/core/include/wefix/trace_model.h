// Canonical trace data model and the line-delimited mutation.log format.
//
// A mutation.log is a sequence of flat JSON objects, one per line. Every
// line carries a "record" discriminator naming one of the record kinds
// below; all other keys are the record's fields. Field order is irrelevant
// and unknown fields are ignored.
//
//   meta          {version, suite, started_at_ms}
//   cmd_start     {cmd_id, name, loc, t_ms}
//   cmd_settle    {cmd_id, t_ms}
//   mutation      {cmd_id, seq, t_ms, kind, xpath, dom_id?, attr_name?,
//                  attr_old?, attr_new?, text_old?, text_new?, child_added?,
//                  child_removed?, child_count?, in_body, visible,
//                  css_effective, truncated?, late?}
//   window_close  {cmd_id, t_ms, omega_s}

#ifndef WEFIX_TRACE_MODEL_H_
#define WEFIX_TRACE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wefix {

inline constexpr int kLogFormatVersion = 1;

// Attribute and text values longer than this are cut at capture time and the
// owning record is flagged |truncated|.
inline constexpr std::size_t kMaxValueLength = 256;

enum class MutationKind { kAttributes, kChildList, kCharacterData };

std::string_view MutationKindName(MutationKind kind);
std::optional<MutationKind> ParseMutationKind(std::string_view name);

struct ElementLocator {
  std::string xpath;
  std::optional<std::string> dom_id;

  friend bool operator==(const ElementLocator&,
                         const ElementLocator&) = default;
};

// Orders locators by XPath only; two locators naming the same path are the
// same element.
struct XpathLess {
  bool operator()(const ElementLocator& a, const ElementLocator& b) const {
    return a.xpath < b.xpath;
  }
};

struct AttrChange {
  std::string name;
  std::optional<std::string> old_value;
  std::optional<std::string> new_value;

  friend bool operator==(const AttrChange&, const AttrChange&) = default;
};

struct TextChange {
  std::string old_value;
  std::string new_value;

  friend bool operator==(const TextChange&, const TextChange&) = default;
};

struct ChildChange {
  std::int64_t added = 0;
  std::int64_t removed = 0;
  std::int64_t resulting_count = 0;

  friend bool operator==(const ChildChange&, const ChildChange&) = default;
};

struct MutationRecord {
  std::uint32_t seq = 0;
  std::int64_t t_ms = 0;
  std::uint32_t cmd_id = 0;
  MutationKind kind = MutationKind::kAttributes;
  ElementLocator target;
  std::optional<AttrChange> attr_change;
  std::optional<TextChange> text_change;
  std::optional<ChildChange> child_change;
  bool in_body = true;
  bool visible = true;
  bool css_effective = true;
  bool truncated = false;
  // Observed after the command's listen window closed.
  bool late = false;

  friend bool operator==(const MutationRecord&,
                         const MutationRecord&) = default;
};

// Identifies a mutation within a log.
struct MutationId {
  std::uint32_t cmd_id = 0;
  std::uint32_t seq = 0;

  friend auto operator<=>(const MutationId&, const MutationId&) = default;
};

inline MutationId IdOf(const MutationRecord& m) { return {m.cmd_id, m.seq}; }

struct SourceLoc {
  std::string file;
  int line = 0;

  friend bool operator==(const SourceLoc&, const SourceLoc&) = default;
};

// "file:line"; the line is taken after the last colon so Windows drive
// letters survive.
std::string FormatSourceLoc(const SourceLoc& loc);
std::optional<SourceLoc> ParseSourceLoc(std::string_view text);

// The listen window as recorded by the test-side hook.
struct RecordedWindow {
  std::int64_t close_ms = 0;
  double omega_s = 0.0;

  friend bool operator==(const RecordedWindow&,
                         const RecordedWindow&) = default;
};

struct CommandSpan {
  std::uint32_t cmd_id = 0;
  std::string name;
  SourceLoc source_loc;
  std::int64_t start_ms = 0;
  std::int64_t settle_ms = 0;
  // Absent when the log carries no window_close line for the command.
  std::optional<RecordedWindow> window;
  std::vector<MutationRecord> mutations;

  friend bool operator==(const CommandSpan&, const CommandSpan&) = default;
};

struct MutationLog {
  int version = kLogFormatVersion;
  std::string suite_name;
  std::int64_t started_at_ms = 0;
  std::vector<CommandSpan> spans;

  friend bool operator==(const MutationLog&, const MutationLog&) = default;
};

struct ParseStats {
  // Records of unknown kind skipped because the file declares a newer
  // format version than this reader.
  std::size_t skipped_records = 0;
};

// Errors ---------------------------------------------------------------------

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public TraceError {
 public:
  MalformedRecord(std::size_t line_no, const std::string& what);
  std::size_t line_no() const { return line_no_; }

 private:
  std::size_t line_no_;
};

class OrphanMutation : public TraceError {
 public:
  OrphanMutation(std::uint32_t cmd_id, std::uint32_t seq);
  std::uint32_t seq() const { return seq_; }
  std::uint32_t cmd_id() const { return cmd_id_; }

 private:
  std::uint32_t cmd_id_;
  std::uint32_t seq_;
};

class NonMonotonicTime : public TraceError {
 public:
  NonMonotonicTime(std::uint32_t cmd_id, std::uint32_t seq);
};

// Construction helpers --------------------------------------------------------

// Cuts |value| to kMaxValueLength bytes without splitting a UTF-8 sequence.
// Returns true when anything was removed.
bool TruncateValue(std::string& value);

// Applies TruncateValue to every string payload of |record| and sets its
// truncated flag when needed.
void TruncateRecord(MutationRecord& record);

// Checks the structural invariants of a log: consecutive cmd_ids, ordered
// spans, exactly one payload matching each mutation kind, increasing seq and
// non-decreasing time within a span. Throws TraceError subclasses.
void ValidateLog(const MutationLog& log);

// Serialization ---------------------------------------------------------------

MutationLog ParseLog(std::string_view bytes, ParseStats* stats = nullptr);
std::string SerializeLog(const MutationLog& log);

MutationLog ReadLogFile(const std::string& path, ParseStats* stats = nullptr);
void WriteLogFile(const std::string& path, const MutationLog& log);

}  // namespace wefix

#endif  // WEFIX_TRACE_MODEL_H_
