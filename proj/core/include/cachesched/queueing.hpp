// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "cachesched/random.hpp"

namespace cachesched {

using Chunks = std::int64_t;

/// i.i.d. integer-uniform arrivals on {0, ..., a_max} for each of `users` users.
std::vector<Chunks> sample_arrivals(std::size_t users, Chunks a_max, Rng& rng);

/// Chunks one link can carry in a slot: floor(tau_c * rate / S).
Chunks chunk_capacity(double rate_bps, double slot_seconds, double chunk_bits) noexcept;

/// mu_n = min(floor(tau_c * R_n / S), Q_n).
std::vector<Chunks> departures(std::span<const double> rates_bps, std::span<const Chunks> backlog,
                               double slot_seconds, double chunk_bits);

/// Per-user FIFO queues of chunk arrival stamps plus delivery/failure counters.
///
/// A chunk fails threshold D if it is served after waiting more than D slots,
/// or if it is still queued with age greater than D when failures are measured.
class QueueState {
 public:
  QueueState() = default;
  QueueState(std::size_t users, std::vector<std::int64_t> delay_thresholds);

  std::size_t num_users() const noexcept { return queues_.size(); }
  Chunks backlog(std::size_t n) const noexcept { return static_cast<Chunks>(queues_[n].size()); }
  std::vector<Chunks> backlogs() const;
  Chunks total_backlog() const noexcept;

  /// One slot: pop `served[n]` oldest chunks (recording their waits), then append
  /// `arrivals[n]` chunks stamped with `slot`. served[n] > backlog(n) aborts.
  void advance(std::span<const Chunks> served, std::span<const Chunks> arrivals,
               std::int64_t slot);

  /// Arrival stamps of user n in FIFO order.
  const std::deque<std::int64_t>& stamps(std::size_t n) const noexcept { return queues_[n]; }

  const std::vector<std::int64_t>& delay_thresholds() const noexcept { return thresholds_; }
  std::int64_t arrived() const noexcept { return arrived_; }
  std::int64_t served() const noexcept { return served_; }
  /// Total waiting slots over all served chunks.
  std::int64_t total_wait() const noexcept { return total_wait_; }
  std::int64_t failed_served(std::size_t threshold_index) const noexcept {
    return failed_served_[threshold_index];
  }
  /// Served-late chunks plus queued chunks older than the threshold at slot `now`.
  std::int64_t failures(std::size_t threshold_index, std::int64_t now) const;
  /// failures / arrived (0 when nothing arrived).
  double failure_rate(std::size_t threshold_index, std::int64_t now) const;

 private:
  std::vector<std::deque<std::int64_t>> queues_;
  std::vector<std::int64_t> thresholds_;
  std::vector<std::int64_t> failed_served_;
  std::int64_t arrived_ = 0;
  std::int64_t served_ = 0;
  std::int64_t total_wait_ = 0;
};

}  // namespace cachesched
