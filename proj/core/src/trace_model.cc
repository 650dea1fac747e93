#include "wefix/trace_model.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace wefix {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr std::string_view kRecordKey = "record";

std::string Describe(std::uint32_t cmd_id, std::uint32_t seq) {
  return "cmd " + std::to_string(cmd_id) + " seq " + std::to_string(seq);
}

// Typed field access for one parsed line. Every failure is reported as a
// MalformedRecord carrying the line number.
class LineReader {
 public:
  LineReader(const Json& obj, std::size_t line_no)
      : obj_(obj), line_no_(line_no) {}

  bool Has(const char* key) const {
    auto it = obj_.find(key);
    return it != obj_.end() && !it->is_null();
  }

  std::int64_t Int(const char* key) const {
    const Json& v = Require(key);
    if (!v.is_number_integer()) Fail(std::string(key) + " is not an integer");
    return v.get<std::int64_t>();
  }

  std::uint32_t Id(const char* key) const {
    std::int64_t v = Int(key);
    if (v < 0 || v > static_cast<std::int64_t>(UINT32_MAX))
      Fail(std::string(key) + " out of range");
    return static_cast<std::uint32_t>(v);
  }

  double Number(const char* key) const {
    const Json& v = Require(key);
    if (!v.is_number()) Fail(std::string(key) + " is not a number");
    return v.get<double>();
  }

  std::string String(const char* key) const {
    const Json& v = Require(key);
    if (!v.is_string()) Fail(std::string(key) + " is not a string");
    return v.get<std::string>();
  }

  std::optional<std::string> OptString(const char* key) const {
    if (!Has(key)) return std::nullopt;
    return String(key);
  }

  bool Bool(const char* key) const {
    const Json& v = Require(key);
    if (!v.is_boolean()) Fail(std::string(key) + " is not a boolean");
    return v.get<bool>();
  }

  bool OptBool(const char* key) const { return Has(key) && Bool(key); }

  [[noreturn]] void Fail(const std::string& what) const {
    throw MalformedRecord(line_no_, what);
  }

 private:
  const Json& Require(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null())
      Fail(std::string("missing field ") + key);
    return *it;
  }

  const Json& obj_;
  std::size_t line_no_;
};

MutationRecord ReadMutation(const LineReader& in) {
  MutationRecord m;
  m.cmd_id = in.Id("cmd_id");
  m.seq = in.Id("seq");
  m.t_ms = in.Int("t_ms");
  std::string kind = in.String("kind");
  auto parsed_kind = ParseMutationKind(kind);
  if (!parsed_kind) in.Fail("unknown mutation kind " + kind);
  m.kind = *parsed_kind;
  m.target.xpath = in.String("xpath");
  if (m.target.xpath.empty()) in.Fail("empty xpath");
  m.target.dom_id = in.OptString("dom_id");

  bool has_attr = in.Has("attr_name") || in.Has("attr_old") ||
                  in.Has("attr_new");
  bool has_text = in.Has("text_old") || in.Has("text_new");
  bool has_child = in.Has("child_added") || in.Has("child_removed") ||
                   in.Has("child_count");
  switch (m.kind) {
    case MutationKind::kAttributes:
      if (has_text || has_child) in.Fail("foreign payload on attributes");
      m.attr_change = AttrChange{in.String("attr_name"),
                                 in.OptString("attr_old"),
                                 in.OptString("attr_new")};
      break;
    case MutationKind::kCharacterData:
      if (has_attr || has_child) in.Fail("foreign payload on characterData");
      m.text_change = TextChange{in.OptString("text_old").value_or(""),
                                 in.String("text_new")};
      break;
    case MutationKind::kChildList: {
      if (has_attr || has_text) in.Fail("foreign payload on childList");
      ChildChange c{in.Int("child_added"), in.Int("child_removed"),
                    in.Int("child_count")};
      if (c.added < 0 || c.removed < 0 || c.resulting_count < 0)
        in.Fail("negative child counts");
      m.child_change = c;
      break;
    }
  }
  m.in_body = in.Bool("in_body");
  m.visible = in.Bool("visible");
  m.css_effective = in.Bool("css_effective");
  m.truncated = in.OptBool("truncated");
  m.late = in.OptBool("late");
  return m;
}

struct PendingSpan {
  CommandSpan span;
  std::size_t start_line = 0;
  bool settled = false;
};

OrderedJson MutationLine(const MutationRecord& m) {
  OrderedJson j;
  j[kRecordKey] = "mutation";
  j["cmd_id"] = m.cmd_id;
  j["seq"] = m.seq;
  j["t_ms"] = m.t_ms;
  j["kind"] = MutationKindName(m.kind);
  j["xpath"] = m.target.xpath;
  if (m.target.dom_id) j["dom_id"] = *m.target.dom_id;
  if (m.attr_change) {
    j["attr_name"] = m.attr_change->name;
    if (m.attr_change->old_value) j["attr_old"] = *m.attr_change->old_value;
    if (m.attr_change->new_value) j["attr_new"] = *m.attr_change->new_value;
  }
  if (m.text_change) {
    j["text_old"] = m.text_change->old_value;
    j["text_new"] = m.text_change->new_value;
  }
  if (m.child_change) {
    j["child_added"] = m.child_change->added;
    j["child_removed"] = m.child_change->removed;
    j["child_count"] = m.child_change->resulting_count;
  }
  j["in_body"] = m.in_body;
  j["visible"] = m.visible;
  j["css_effective"] = m.css_effective;
  if (m.truncated) j["truncated"] = true;
  if (m.late) j["late"] = true;
  return j;
}

void AppendLine(std::string& out, const OrderedJson& j) {
  out += j.dump(-1, ' ', false, Json::error_handler_t::replace);
  out += '\n';
}

}  // namespace

std::string_view MutationKindName(MutationKind kind) {
  switch (kind) {
    case MutationKind::kAttributes:
      return "attributes";
    case MutationKind::kChildList:
      return "childList";
    case MutationKind::kCharacterData:
      return "characterData";
  }
  return "attributes";
}

std::optional<MutationKind> ParseMutationKind(std::string_view name) {
  if (name == "attributes") return MutationKind::kAttributes;
  if (name == "childList") return MutationKind::kChildList;
  if (name == "characterData") return MutationKind::kCharacterData;
  return std::nullopt;
}

std::string FormatSourceLoc(const SourceLoc& loc) {
  return loc.file + ":" + std::to_string(loc.line);
}

std::optional<SourceLoc> ParseSourceLoc(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 >= text.size())
    return std::nullopt;
  int line = 0;
  auto digits = text.substr(colon + 1);
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), line);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || line < 0)
    return std::nullopt;
  return SourceLoc{std::string(text.substr(0, colon)), line};
}

MalformedRecord::MalformedRecord(std::size_t line_no, const std::string& what)
    : TraceError("malformed record at line " + std::to_string(line_no) +
                 ": " + what),
      line_no_(line_no) {}

OrphanMutation::OrphanMutation(std::uint32_t cmd_id, std::uint32_t seq)
    : TraceError("mutation " + Describe(cmd_id, seq) +
                 " references an unknown command"),
      cmd_id_(cmd_id),
      seq_(seq) {}

NonMonotonicTime::NonMonotonicTime(std::uint32_t cmd_id, std::uint32_t seq)
    : TraceError("timestamp decreases at mutation " + Describe(cmd_id, seq)) {}

bool TruncateValue(std::string& value) {
  if (value.size() <= kMaxValueLength) return false;
  std::size_t cut = kMaxValueLength;
  // Back up over UTF-8 continuation bytes so the cut lands on a boundary.
  while (cut > 0 &&
         (static_cast<unsigned char>(value[cut]) & 0xC0) == 0x80) {
    --cut;
  }
  value.resize(cut);
  return true;
}

void TruncateRecord(MutationRecord& record) {
  bool cut = false;
  if (record.attr_change) {
    if (record.attr_change->old_value)
      cut |= TruncateValue(*record.attr_change->old_value);
    if (record.attr_change->new_value)
      cut |= TruncateValue(*record.attr_change->new_value);
  }
  if (record.text_change) {
    cut |= TruncateValue(record.text_change->old_value);
    cut |= TruncateValue(record.text_change->new_value);
  }
  if (cut) record.truncated = true;
}

void ValidateLog(const MutationLog& log) {
  std::int64_t last_start = INT64_MIN;
  for (std::size_t i = 0; i < log.spans.size(); ++i) {
    const CommandSpan& span = log.spans[i];
    if (span.cmd_id != i + 1)
      throw TraceError("cmd_id values must be 1..n consecutive");
    if (span.start_ms < last_start)
      throw TraceError("spans are not ordered by start time");
    last_start = span.start_ms;
    if (span.settle_ms < span.start_ms)
      throw TraceError("command " + std::to_string(span.cmd_id) +
                       " settles before it starts");
    if (span.window && span.window->close_ms < span.settle_ms)
      throw TraceError("command " + std::to_string(span.cmd_id) +
                       " closes its window before settling");
    for (std::size_t k = 0; k < span.mutations.size(); ++k) {
      const MutationRecord& m = span.mutations[k];
      if (m.cmd_id != span.cmd_id) throw OrphanMutation(m.cmd_id, m.seq);
      bool payload_ok = false;
      switch (m.kind) {
        case MutationKind::kAttributes:
          payload_ok = m.attr_change && !m.text_change && !m.child_change;
          break;
        case MutationKind::kCharacterData:
          payload_ok = !m.attr_change && m.text_change && !m.child_change;
          break;
        case MutationKind::kChildList:
          payload_ok = !m.attr_change && !m.text_change && m.child_change;
          break;
      }
      if (!payload_ok)
        throw TraceError("mutation " + Describe(m.cmd_id, m.seq) +
                         " payload does not match its kind");
      if (m.target.xpath.empty())
        throw TraceError("mutation " + Describe(m.cmd_id, m.seq) +
                         " has an empty xpath");
      if (span.window && m.t_ms > span.window->close_ms && !m.late)
        throw TraceError("mutation " + Describe(m.cmd_id, m.seq) +
                         " follows the window close without a late flag");
      if (k > 0) {
        const MutationRecord& prev = span.mutations[k - 1];
        if (m.seq <= prev.seq)
          throw TraceError("seq not increasing at " +
                           Describe(m.cmd_id, m.seq));
        if (m.t_ms < prev.t_ms) throw NonMonotonicTime(m.cmd_id, m.seq);
      }
    }
  }
}

MutationLog ParseLog(std::string_view bytes, ParseStats* stats) {
  MutationLog log;
  bool have_meta = false;
  std::vector<PendingSpan> pending;
  std::vector<std::pair<std::size_t, MutationRecord>> mutations;
  std::map<std::uint32_t, std::pair<std::size_t, RecordedWindow>> windows;
  std::size_t skipped = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw MalformedRecord(line_no, e.what());
    }
    if (!obj.is_object()) throw MalformedRecord(line_no, "not an object");
    LineReader in(obj, line_no);
    std::string record = in.String("record");

    if (!have_meta) {
      if (record != "meta") in.Fail("first record must be meta");
      std::int64_t version = in.Int("version");
      if (version < 1) in.Fail("bad version");
      log.version = static_cast<int>(version);
      log.suite_name = in.String("suite");
      log.started_at_ms = in.Int("started_at_ms");
      have_meta = true;
      continue;
    }

    if (record == "cmd_start") {
      std::uint32_t id = in.Id("cmd_id");
      if (id != pending.size() + 1)
        in.Fail("cmd_id " + std::to_string(id) + " is not the next ordinal");
      PendingSpan p;
      p.span.cmd_id = id;
      p.span.name = in.String("name");
      auto loc = ParseSourceLoc(in.String("loc"));
      if (!loc) in.Fail("loc is not file:line");
      p.span.source_loc = *loc;
      p.span.start_ms = in.Int("t_ms");
      p.start_line = line_no;
      pending.push_back(std::move(p));
    } else if (record == "cmd_settle") {
      std::uint32_t id = in.Id("cmd_id");
      if (id == 0 || id > pending.size())
        in.Fail("settle for unknown command " + std::to_string(id));
      PendingSpan& p = pending[id - 1];
      if (p.settled) in.Fail("duplicate settle");
      p.span.settle_ms = in.Int("t_ms");
      if (p.span.settle_ms < p.span.start_ms) in.Fail("settle before start");
      p.settled = true;
    } else if (record == "window_close") {
      std::uint32_t id = in.Id("cmd_id");
      if (windows.count(id)) in.Fail("duplicate window_close");
      windows[id] = {line_no, RecordedWindow{in.Int("t_ms"),
                                             in.Number("omega_s")}};
    } else if (record == "mutation") {
      mutations.emplace_back(line_no, ReadMutation(in));
    } else if (record == "meta") {
      in.Fail("duplicate meta");
    } else if (log.version > kLogFormatVersion) {
      ++skipped;
    } else {
      in.Fail("unknown record kind " + record);
    }
  }

  if (!have_meta) throw MalformedRecord(line_no == 0 ? 1 : line_no, "no meta");

  for (const auto& [id, entry] : windows) {
    if (id == 0 || id > pending.size())
      throw MalformedRecord(entry.first, "window_close for unknown command");
    pending[id - 1].span.window = entry.second;
  }
  for (PendingSpan& p : pending) {
    if (!p.settled) throw MalformedRecord(p.start_line, "command never settles");
    if (p.span.window && p.span.window->close_ms < p.span.settle_ms)
      throw MalformedRecord(windows[p.span.cmd_id].first,
                            "window closes before settle");
  }

  for (auto& [where, m] : mutations) {
    if (m.cmd_id == 0 || m.cmd_id > pending.size())
      throw OrphanMutation(m.cmd_id, m.seq);
    CommandSpan& span = pending[m.cmd_id - 1].span;
    if (!span.mutations.empty()) {
      const MutationRecord& prev = span.mutations.back();
      if (m.t_ms < prev.t_ms) throw NonMonotonicTime(m.cmd_id, m.seq);
      if (m.seq <= prev.seq) throw MalformedRecord(where, "seq not increasing");
    }
    if (span.window && m.t_ms > span.window->close_ms) m.late = true;
    span.mutations.push_back(std::move(m));
  }

  std::int64_t last_start = INT64_MIN;
  for (PendingSpan& p : pending) {
    if (p.span.start_ms < last_start)
      throw MalformedRecord(p.start_line, "spans out of start order");
    last_start = p.span.start_ms;
    log.spans.push_back(std::move(p.span));
  }
  if (stats) stats->skipped_records = skipped;
  return log;
}

std::string SerializeLog(const MutationLog& log) {
  std::string out;
  OrderedJson meta;
  meta[kRecordKey] = "meta";
  meta["version"] = log.version;
  meta["suite"] = log.suite_name;
  meta["started_at_ms"] = log.started_at_ms;
  AppendLine(out, meta);

  for (const CommandSpan& span : log.spans) {
    OrderedJson start;
    start[kRecordKey] = "cmd_start";
    start["cmd_id"] = span.cmd_id;
    start["name"] = span.name;
    start["loc"] = FormatSourceLoc(span.source_loc);
    start["t_ms"] = span.start_ms;
    AppendLine(out, start);

    OrderedJson settle;
    settle[kRecordKey] = "cmd_settle";
    settle["cmd_id"] = span.cmd_id;
    settle["t_ms"] = span.settle_ms;
    AppendLine(out, settle);

    for (const MutationRecord& m : span.mutations) AppendLine(out, MutationLine(m));

    if (span.window) {
      OrderedJson close;
      close[kRecordKey] = "window_close";
      close["cmd_id"] = span.cmd_id;
      close["t_ms"] = span.window->close_ms;
      close["omega_s"] = span.window->omega_s;
      AppendLine(out, close);
    }
  }
  return out;
}

MutationLog ReadLogFile(const std::string& path, ParseStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseLog(buf.str(), stats);
}

void WriteLogFile(const std::string& path, const MutationLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot write " + path);
  out << SerializeLog(log);
}

}  // namespace wefix
