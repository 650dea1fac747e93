// The fix pipeline: mutation log + test source -> source with explicit
// waits after each flaky-prone command.

#ifndef WEFIX_PIPELINE_H_
#define WEFIX_PIPELINE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wefix/analyzer.h"
#include "wefix/dialect.h"
#include "wefix/fsm_oracle.h"
#include "wefix/trace_model.h"
#include "wefix/transformer.h"

namespace wefix {

struct FixOptions {
  OracleOptions oracle;
  BackgroundConfig background;
  // Mutations recorded on the idle page, for background detection.
  const MutationLog* baseline = nullptr;
};

struct PlannedWait {
  int site_ordinal = 0;
  CommandSite site;
  std::uint32_t cmd_id = 0;
  WaitOracle oracle;
  std::string snippet;
};

struct FixResult {
  std::string text;
  FixPlan plan;
  std::vector<PlannedWait> waits;
  ScanResult scan;
  // Spans with no matching site, divergent listen windows, inconsistent
  // child counts.
  std::vector<std::string> notes;
};

// True when |loc| names |file|: equal paths, or one path ends with the
// other at a separator boundary.
bool LocMatchesFile(const SourceLoc& loc, std::string_view file);

// Spans are matched to command sites by source location; when a location
// was recorded more than once the last span wins.
FixResult FixSource(std::string_view source, std::string_view file,
                    Dialect dialect, const MutationLog& log,
                    const FixOptions& options = {});

}  // namespace wefix

#endif  // WEFIX_PIPELINE_H_
