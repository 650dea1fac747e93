// Statement-level source rewriting for e2e test files: locating UI commands,
// adding recording hooks, inserting explicit waits, and removing everything
// this module added.
//
// Every inserted region is delimited by a pair of block comments
//
//   /* wefix:begin <kind> <id> */ ... /* wefix:end */
//
// with kind one of hook-pre, hook-post or wait. A hook-pre region is placed
// at the start of a statement and is followed by a line break plus the
// statement's indentation; hook-post and wait regions follow the end of a
// statement and are preceded by a line break plus indentation. StripHooks
// relies on exactly this layout to restore the original bytes.

#ifndef WEFIX_TRANSFORMER_H_
#define WEFIX_TRANSFORMER_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wefix/dialect.h"
#include "wefix/js_lexer.h"

namespace wefix {

inline constexpr std::string_view kSentinelBegin = "/* wefix:begin ";
inline constexpr std::string_view kSentinelEnd = "/* wefix:end */";
inline constexpr std::string_view kRuntimeFileName = "wefix-runtime.js";

// A statement that issues one UI command.
struct CommandSite {
  std::size_t begin = 0;  // byte range of the statement, terminator included
  std::size_t end = 0;
  int line = 0;  // 1-based line of the statement's first token
  std::string name;  // command verb, e.g. "click" or "sendKeys"
  Dialect dialect = Dialect::kSelenium;
  // Root identifier of the call chain ("driver", "cy", an element...).
  std::string chain_root;
  bool awaited = false;

  friend bool operator==(const CommandSite&, const CommandSite&) = default;
};

struct SkippedConstruct {
  int line = 0;
  std::string reason;

  friend bool operator==(const SkippedConstruct&,
                         const SkippedConstruct&) = default;
};

struct ScanResult {
  std::vector<CommandSite> sites;  // ordered by position
  std::vector<SkippedConstruct> skipped;
};

// Errors ---------------------------------------------------------------------

class TransformError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlreadyInstrumented : public TransformError {
 public:
  using TransformError::TransformError;
};

class StaleSites : public TransformError {
 public:
  using TransformError::TransformError;
};

class DialectMismatch : public TransformError {
 public:
  using TransformError::TransformError;
};

class UnbalancedSentinels : public TransformError {
 public:
  using TransformError::TransformError;
};

// Scanning --------------------------------------------------------------------

// Finds command statements inside test bodies. Commands the rewriter cannot
// wrap safely (outside a test body, nested in another command, used as an
// expression, in a non-async Selenium context) are reported in |skipped|.
// Throws ParseFailure when the file does not tokenize.
ScanResult FindCommands(std::string_view source, Dialect dialect,
                        std::string_view file = "");

// Guesses the dialect from the presence of `cy.` call chains.
Dialect DetectDialect(std::string_view source);

bool HasSentinels(std::string_view source);

// Recording instrumentation ------------------------------------------------

struct InstrumentOptions {
  // Module specifier used to load the runtime helper.
  std::string runtime_specifier = std::string("./") + std::string(kRuntimeFileName);
  // File label written into hook calls; defaults to the |file| argument.
  std::string loc_file;
};

struct InstrumentResult {
  std::string text;
  ScanResult scan;
};

// Wraps every command site with pre/post hooks and loads the runtime helper
// at the top of the file. A file without command sites is returned
// unchanged. Throws AlreadyInstrumented if the source already
// contains sentinels.
InstrumentResult InstrumentRecording(std::string_view source, Dialect dialect,
                                     std::string_view file,
                                     const InstrumentOptions& options = {});

// Wait insertion ---------------------------------------------------------------

struct WaitInsertion {
  CommandSite site;  // as returned by FindCommands on the same text
  int site_ordinal = 0;  // 1-based position among the file's sites
  Dialect snippet_dialect = Dialect::kSelenium;
  std::string snippet;  // may span several lines, without indentation
};

struct FixPlan {
  std::string file;
  std::vector<WaitInsertion> insertions;
};

// Inserts each snippet right after its command statement. Throws StaleSites
// if a site no longer matches the text, DialectMismatch if a snippet's
// dialect differs from its site's, and std::invalid_argument when two
// insertions target the same site.
std::string InsertWaits(std::string_view source, const FixPlan& plan);

// Removal --------------------------------------------------------------------

// Removes all sentinel regions and the line breaks they introduced. Throws
// UnbalancedSentinels on unmatched or nested markers or when the layout
// around a region is not the one the inserter produces.
std::string StripHooks(std::string_view source);

}  // namespace wefix

#endif  // WEFIX_TRANSFORMER_H_
