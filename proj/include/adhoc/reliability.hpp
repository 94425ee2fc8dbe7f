// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Host reliability scoring from assigned/completed/failed job counters, the
// mapping to a per-host failure probability, and host ranking for scheduling.

#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "adhoc/domain.hpp"

namespace adhoc {

struct ReliabilityOptions {
  // Score assigned to a host that has never been given a job. The counters
  // alone give 100 (no failures); the optimistic prior tempers that to 50.
  bool optimistic_prior = false;
};

struct ReliabilityView {
  HostId host;
  double reliability = 100.0;          // percentage in [0, 100]
  double failure_probability = 0.01;   // fraction in [0.01, 0.99]
};

inline constexpr double kMinFailureProbability = 0.01;
inline constexpr double kMaxFailureProbability = 0.99;

// Piecewise score: 0 when every assigned job ended in a failure, 100 when
// there were no failures, otherwise the completed fraction as a percentage.
inline double host_reliability(Count assigned, Count completed, Count failures,
                               const ReliabilityOptions& opts = {}) {
  if (completed > assigned) throw ContractError("host_reliability: CC > CA");
  if (failures > assigned) throw ContractError("host_reliability: NF > CA");
  if (assigned == 0) return opts.optimistic_prior ? 50.0 : 100.0;
  if (failures == assigned) return 0.0;
  if (failures == 0) return 100.0;
  return static_cast<double>(completed) / static_cast<double>(assigned) * 100.0;
}

inline double failure_probability(double reliability) {
  if (!(reliability >= 0.0 && reliability <= 100.0)) {
    throw ContractError("failure_probability: reliability outside [0, 100]");
  }
  return std::clamp((100.0 - reliability) / 100.0, kMinFailureProbability,
                    kMaxFailureProbability);
}

inline ReliabilityView make_view(const HostRecord& h, const ReliabilityOptions& opts = {}) {
  const double r = host_reliability(h.jobs_assigned, h.jobs_completed, h.failures, opts);
  return {h.id, r, failure_probability(r)};
}

// A host as seen by the scheduler: its record, the last stored reliability
// and whether it has an idle guest that can take a job.
struct HostStanding {
  HostRecord host;
  ReliabilityView view;
  bool guest_ready = false;
};

// Descending reliability, ties by ascending host id.
inline bool more_reliable(const ReliabilityView& a, const ReliabilityView& b) {
  if (a.reliability != b.reliability) return a.reliability > b.reliability;
  return a.host < b.host;
}

inline std::vector<HostId> rank_ready_hosts(std::span<const HostStanding> hosts) {
  std::vector<const HostStanding*> ready;
  for (const auto& s : hosts) {
    if (s.host.liveness == Liveness::Up && s.guest_ready && !s.host.in_use) {
      ready.push_back(&s);
    }
  }
  std::sort(ready.begin(), ready.end(), [](const HostStanding* a, const HostStanding* b) {
    return more_reliable(a->view, b->view);
  });
  std::vector<HostId> out;
  out.reserve(ready.size());
  for (const auto* s : ready) out.push_back(s->host.id);
  return out;
}

enum class HostEvent { JobAssigned, JobCompleted, HostFailure, GuestFailure };

struct HostEventOutcome {
  HostRecord host;
  // Present when the event triggers a reliability recomputation.
  std::optional<ReliabilityView> view;
};

// Counter update rules. A failure only counts while the host has an
// assignment that has neither completed nor already failed, so NF <= CA holds
// for every reachable state.
inline HostEventOutcome record_event(HostRecord host, HostEvent event,
                                     const ReliabilityOptions& opts = {}) {
  if (host.jobs_completed > host.jobs_assigned || host.failures > host.jobs_assigned) {
    throw ContractError("record_event: counters already violate invariants");
  }
  const auto outstanding = static_cast<long long>(host.jobs_assigned) -
                           host.jobs_completed - host.failures;
  switch (event) {
    case HostEvent::JobAssigned:
      if (host.jobs_assigned == std::numeric_limits<Count>::max()) {
        throw ContractError("record_event: CA overflow");
      }
      ++host.jobs_assigned;
      return {host, std::nullopt};
    case HostEvent::JobCompleted:
      if (host.jobs_completed >= host.jobs_assigned) {
        throw ContractError("record_event: completion would make CC > CA");
      }
      ++host.jobs_completed;
      break;
    case HostEvent::HostFailure:
    case HostEvent::GuestFailure:
      if (outstanding > 0) ++host.failures;
      break;
  }
  return {host, make_view(host, opts)};
}

inline std::string_view to_string(HostEvent e) {
  switch (e) {
    case HostEvent::JobAssigned: return "JobAssigned";
    case HostEvent::JobCompleted: return "JobCompleted";
    case HostEvent::HostFailure: return "HostFailure";
    case HostEvent::GuestFailure: return "GuestFailure";
  }
  return "?";
}

}  // namespace adhoc
