// JavaScript support files written next to instrumented tests.
//
// The helper loaded by the recording hooks exposes pre(...) and post(...).
// pre() installs the in-page observer (the separate wefix-shim.js module,
// which must export install(window)), clears the labeled cookie channel and
// logs cmd_start. post() logs cmd_settle, drains the channel for the dynamic
// listen window and appends the captured mutation lines plus window_close
// to the mutation log.

#ifndef WEFIX_RUNTIME_SUPPORT_H_
#define WEFIX_RUNTIME_SUPPORT_H_

#include <string>
#include <string_view>

#include "wefix/dialect.h"

namespace wefix {

// Every cookie the tool creates starts with this label.
inline constexpr std::string_view kCookiePrefix = "__wefix__";
inline constexpr std::string_view kCounterCookie = "__wefix__n";
inline constexpr std::string_view kRecordCookiePrefix = "__wefix__r";
inline constexpr std::string_view kShimFileName = "wefix-shim.js";

// Source of wefix-runtime.js for |dialect|.
std::string RuntimeHelperSource(Dialect dialect);

}  // namespace wefix

#endif  // WEFIX_RUNTIME_SUPPORT_H_
