#include "wefix/pipeline.h"

#include <cctype>
#include <map>

#include "wefix/listen_window.h"

namespace wefix {
namespace {

bool EndsWithAtBoundary(std::string_view longer, std::string_view shorter) {
  if (shorter.size() > longer.size()) return false;
  if (longer.substr(longer.size() - shorter.size()) != shorter) return false;
  if (shorter.size() == longer.size()) return true;
  char sep = longer[longer.size() - shorter.size() - 1];
  return sep == '/' || sep == '\\';
}

std::string_view StripDotSlash(std::string_view p) {
  while (p.substr(0, 2) == "./") p.remove_prefix(2);
  return p;
}

// Expression handing the WebDriver to the oracle.
std::string DriverExpression(const CommandSite& site) {
  std::string lower = site.chain_root;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower.find("driver") != std::string::npos ||
      lower.find("browser") != std::string::npos)
    return site.chain_root;
  return site.chain_root + ".getDriver()";
}

}  // namespace

bool LocMatchesFile(const SourceLoc& loc, std::string_view file) {
  std::string_view a = StripDotSlash(loc.file);
  std::string_view b = StripDotSlash(file);
  if (a.empty() || b.empty()) return false;
  return EndsWithAtBoundary(a, b) || EndsWithAtBoundary(b, a);
}

FixResult FixSource(std::string_view source, std::string_view file,
                    Dialect dialect, const MutationLog& log,
                    const FixOptions& options) {
  FixResult result;
  result.scan = FindCommands(source, dialect, file);
  result.plan.file = std::string(file);

  std::map<int, int> ordinal_by_line;
  for (std::size_t i = 0; i < result.scan.sites.size(); ++i)
    ordinal_by_line.emplace(result.scan.sites[i].line, static_cast<int>(i) + 1);

  PrunedLog pruned = PruneLog(log, options.baseline, options.background);
  // Last span per site.
  std::map<int, const CommandSpan*> span_for_site;
  for (std::size_t i = 0; i < pruned.log.spans.size(); ++i) {
    const CommandSpan& span = pruned.log.spans[i];
    if (!LocMatchesFile(span.source_loc, file)) continue;
    auto it = ordinal_by_line.find(span.source_loc.line);
    if (it == ordinal_by_line.end()) {
      result.notes.push_back("command " + std::to_string(span.cmd_id) + " (" +
                             FormatSourceLoc(span.source_loc) +
                             ") has no matching command site");
      continue;
    }
    WindowReplay replay = ReplayWindow(log.spans[i]);
    if (replay.divergent)
      result.notes.push_back("command " + std::to_string(span.cmd_id) +
                             ": recorded listen window differs from replay by " +
                             std::to_string(replay.divergence_ms) + " ms");
    span_for_site[it->second] = &span;
  }

  for (const auto& [ordinal, span] : span_for_site) {
    if (!ClassifyFlakyProne(*span, span->mutations)) continue;
    const CommandSite& site = result.scan.sites[ordinal - 1];
    MutationFSM fsm = BuildFsm(span->mutations, InitialStateFrom(span->mutations));
    for (const InconsistentMutation& issue : fsm.issues)
      result.notes.push_back(
          "command " + std::to_string(span->cmd_id) + ": mutation " +
          std::to_string(issue.mutation_seq) + " reports " +
          std::to_string(issue.recorded_count) + " children, replay has " +
          std::to_string(issue.replayed_count));
    PlannedWait wait;
    wait.site_ordinal = ordinal;
    wait.site = site;
    wait.cmd_id = span->cmd_id;
    wait.oracle = GenerateOracle(fsm, options.oracle);
    wait.snippet = RenderOracle(wait.oracle, dialect,
                                dialect == Dialect::kSelenium
                                    ? DriverExpression(site)
                                    : std::string("driver"));
    result.plan.insertions.push_back({site, ordinal, dialect, wait.snippet});
    result.waits.push_back(std::move(wait));
  }
  result.text = InsertWaits(source, result.plan);
  return result;
}

}  // namespace wefix
