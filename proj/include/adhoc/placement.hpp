// Copyright 2026 The adhoc-cloud Authors
// SPDX-License-Identifier: Apache-2.0
//
// Snapshot receiver selection. Candidates are filtered and ordered, then the
// shortest prefix whose combined failure probability (the product of the
// per-host probabilities, i.e. the chance that every copy is lost) meets the
// threshold is taken.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adhoc/domain.hpp"
#include "adhoc/reliability.hpp"

namespace adhoc {

// How hosts whose guest is busy with a job are treated as receivers.
enum class InUsePolicy {
  Exclude,     // never receive snapshots
  PreferIdle,  // receive only after every idle candidate
};

struct PlacementConfig {
  double threshold = 0.05;
  Count min_replicas = 1;
  bool strict_cloudlet = false;
  InUsePolicy in_use = InUsePolicy::PreferIdle;
};

// A peer host as advertised in a poll response.
struct PeerInfo {
  HostId host;
  std::string address;
  double reliability = 100.0;
  double failure_probability = 0.01;
  bool in_use = false;
  Liveness liveness = Liveness::Up;
  Bytes storage_headroom = 0;
  std::set<CloudletId> cloudlets;
};

struct PlacementDecision {
  std::vector<HostId> receivers;
  double combined_failure_probability = 1.0;
  bool degraded = true;
};

inline bool shares_cloudlet(const std::set<CloudletId>& a, const std::set<CloudletId>& b) {
  return std::any_of(a.begin(), a.end(), [&](const CloudletId& c) { return b.contains(c); });
}

inline std::vector<PeerInfo> filter_receivers(const HostId& sender,
                                              const std::set<CloudletId>& sender_cloudlets,
                                              std::span<const PeerInfo> candidates,
                                              Bytes snapshot_size,
                                              const PlacementConfig& cfg = {}) {
  struct Keyed {
    int partition;
    const PeerInfo* peer;
  };
  std::vector<Keyed> kept;
  for (const auto& c : candidates) {
    if (c.host == sender || c.liveness != Liveness::Up) continue;
    if (c.storage_headroom < snapshot_size) continue;
    if (c.in_use && cfg.in_use == InUsePolicy::Exclude) continue;
    const bool same = shares_cloudlet(sender_cloudlets, c.cloudlets);
    if (cfg.strict_cloudlet && !same) continue;
    int partition = same ? 0 : 1;
    if (c.in_use) partition += 2;
    kept.push_back({partition, &c});
  }
  std::sort(kept.begin(), kept.end(), [](const Keyed& a, const Keyed& b) {
    if (a.partition != b.partition) return a.partition < b.partition;
    if (a.peer->reliability != b.peer->reliability) {
      return a.peer->reliability > b.peer->reliability;
    }
    return a.peer->host < b.peer->host;
  });
  std::vector<PeerInfo> out;
  out.reserve(kept.size());
  for (const auto& k : kept) out.push_back(*k.peer);
  return out;
}

struct PrefixChoice {
  std::size_t count = 0;
  double product = 1.0;
  bool degraded = true;
};

// Shortest prefix of `probabilities` whose product is <= threshold and whose
// length is at least min_replicas. When no prefix qualifies every candidate
// is taken.
inline PrefixChoice select_prefix(std::span<const double> probabilities, double threshold,
                                  Count min_replicas = 1) {
  for (double p : probabilities) {
    if (!(p > 0.0 && p < 1.0)) {
      throw ContractError("select_receivers: failure probability outside (0, 1)");
    }
  }
  PrefixChoice out;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    out.product *= probabilities[i];
    out.count = i + 1;
    if (out.product <= threshold && out.count >= min_replicas) break;
  }
  out.degraded = out.count == 0 || out.product > threshold;
  return out;
}

inline PlacementDecision select_receivers(std::span<const PeerInfo> ordered,
                                          double threshold = 0.05, Count min_replicas = 1) {
  std::vector<double> probs;
  probs.reserve(ordered.size());
  for (const auto& p : ordered) probs.push_back(p.failure_probability);
  const auto choice = select_prefix(probs, threshold, min_replicas);
  PlacementDecision d;
  d.combined_failure_probability = choice.product;
  d.degraded = choice.degraded;
  for (std::size_t i = 0; i < choice.count; ++i) d.receivers.push_back(ordered[i].host);
  return d;
}

struct SnapshotDeletion {
  HostId host;
  SnapshotId snapshot;
};

// Server-side index of the newest distributed snapshot per guest.
class SnapshotRegistry {
 public:
  void add_guest(const GuestId& g) { guests_.insert(g); }
  bool knows(const GuestId& g) const { return guests_.contains(g); }

  const SnapshotRecord* latest(const GuestId& g) const {
    auto it = entries_.find(g);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::map<GuestId, SnapshotRecord>& entries() const { return entries_; }

  // Replaces the guest's entry with `snapshot` stored at the decision's
  // receivers. Returns a deletion for every host holding the replaced copy.
  std::vector<SnapshotDeletion> register_snapshot(SnapshotRecord snapshot,
                                                  const PlacementDecision& decision) {
    if (!guests_.contains(snapshot.guest)) {
      throw ContractError("register_snapshot: unknown guest " + snapshot.guest.str());
    }
    std::vector<SnapshotDeletion> deletions;
    if (auto it = entries_.find(snapshot.guest); it != entries_.end()) {
      if (snapshot.sequence <= it->second.sequence) {
        throw ContractError("register_snapshot: sequence does not advance for guest " +
                            snapshot.guest.str());
      }
      for (const auto& h : it->second.locations) deletions.push_back({h, it->second.id});
      entries_.erase(it);
    }
    snapshot.locations = {decision.receivers.begin(), decision.receivers.end()};
    entries_.emplace(snapshot.guest, std::move(snapshot));
    return deletions;
  }

  // Drops the guest's entry; returns deletions for the hosts still holding it.
  std::vector<SnapshotDeletion> remove(const GuestId& g) {
    std::vector<SnapshotDeletion> deletions;
    if (auto it = entries_.find(g); it != entries_.end()) {
      for (const auto& h : it->second.locations) deletions.push_back({h, it->second.id});
      entries_.erase(it);
    }
    return deletions;
  }

  void add_location(const GuestId& g, const HostId& h) {
    if (auto it = entries_.find(g); it != entries_.end()) it->second.locations.insert(h);
  }

  void drop_location(const GuestId& g, const HostId& h) {
    if (auto it = entries_.find(g); it != entries_.end()) it->second.locations.erase(h);
  }

 private:
  std::set<GuestId> guests_;
  std::map<GuestId, SnapshotRecord> entries_;
};

}  // namespace adhoc
