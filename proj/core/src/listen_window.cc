#include "wefix/listen_window.h"

#include <algorithm>
#include <cmath>

namespace wefix {

WindowTrace ComputeWindow(std::span<const double> event_rel_s,
                          const WindowPolicy& policy) {
  for (std::size_t i = 0; i < event_rel_s.size(); ++i) {
    if (!(event_rel_s[i] >= 0.0))
      throw UnsortedInput("event times must be non-negative");
    if (i > 0 && event_rel_s[i] < event_rel_s[i - 1])
      throw UnsortedInput("event times must be sorted ascending");
  }

  WindowTrace trace;
  double omega = policy.initial_s;
  for (std::size_t i = 0; i < event_rel_s.size(); ++i) {
    double rel = event_rel_s[i];
    // Input is sorted, so once one event falls outside the window the
    // listener has already stopped for every later one.
    if (!(rel < omega)) break;
    omega = std::max(2.0 * rel, omega);
    omega = std::min(policy.cap_s, omega);
    trace.omega_history.push_back({rel, omega});
    trace.captured.push_back(i);
  }
  trace.omega_final_s = omega;
  return trace;
}

WindowReplay ReplayWindow(const CommandSpan& span, const WindowPolicy& policy) {
  std::vector<double> rel;
  rel.reserve(span.mutations.size());
  for (const MutationRecord& m : span.mutations) {
    std::int64_t delta = std::max<std::int64_t>(0, m.t_ms - span.settle_ms);
    rel.push_back(static_cast<double>(delta) / 1000.0);
  }

  WindowReplay out;
  out.trace = ComputeWindow(rel, policy);
  out.trace.start_ms = span.settle_ms;
  out.close_ms = span.settle_ms +
                 static_cast<std::int64_t>(
                     std::llround(out.trace.omega_final_s * 1000.0));

  std::size_t next = 0;
  for (std::size_t i = 0; i < span.mutations.size(); ++i) {
    if (next < out.trace.captured.size() && out.trace.captured[next] == i) {
      ++next;
      continue;
    }
    out.missed_seqs.push_back(span.mutations[i].seq);
  }

  if (span.window) {
    out.divergence_ms = span.window->close_ms - out.close_ms;
    out.divergent = std::llabs(out.divergence_ms) > kWindowAuditToleranceMs;
  }
  return out;
}

}  // namespace wefix
