// Dynamic listen window: after a command settles, the recorder keeps draining
// mutation records while the elapsed time is below the window size. Each
// observed mutation at relative time r stretches the window to 2r, never
// shrinking it and never exceeding the cap.

#ifndef WEFIX_LISTEN_WINDOW_H_
#define WEFIX_LISTEN_WINDOW_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "wefix/trace_model.h"

namespace wefix {

struct WindowPolicy {
  double initial_s = 1.0;
  double cap_s = 20.0;
};

// Tolerance used when auditing a recorded window against its replay; the
// browser-side loop polls the cookie channel at this cadence.
inline constexpr std::int64_t kWindowAuditToleranceMs = 50;

struct WindowStep {
  double event_rel_s = 0.0;
  double omega_after_s = 0.0;
};

struct WindowTrace {
  std::int64_t start_ms = 0;
  // One entry per captured event.
  std::vector<WindowStep> omega_history;
  double omega_final_s = 1.0;
  // Indices into the input of the events seen before the window closed.
  std::vector<std::size_t> captured;
};

class UnsortedInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Replays the window policy over event times (seconds since listen start).
// Events at or beyond the window in force when they occur are not captured.
// Throws UnsortedInput unless times are ascending and non-negative.
WindowTrace ComputeWindow(std::span<const double> event_rel_s,
                          const WindowPolicy& policy = {});

struct WindowReplay {
  WindowTrace trace;
  // settle_ms + omega_final in milliseconds.
  std::int64_t close_ms = 0;
  // Mutations the policy would not have seen, by seq.
  std::vector<std::uint32_t> missed_seqs;
  // Set when the span carries a recorded window whose close time differs
  // from the replay by more than kWindowAuditToleranceMs.
  bool divergent = false;
  std::int64_t divergence_ms = 0;
};

// Listening starts at the span's settle time. Mutations recorded before the
// settle are already in the channel when the first drain runs, so they are
// replayed at relative time zero.
WindowReplay ReplayWindow(const CommandSpan& span,
                          const WindowPolicy& policy = {});

}  // namespace wefix

#endif  // WEFIX_LISTEN_WINDOW_H_
