// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cachesched/errors.hpp"

namespace cachesched {

std::vector<Chunks> sample_arrivals(std::size_t users, Chunks a_max, Rng& rng) {
  CACHESCHED_CHECK(a_max >= 0, "a_max must be non-negative");
  std::vector<Chunks> a(users, 0);
  if (a_max == 0) return a;
  std::uniform_int_distribution<Chunks> dist(0, a_max);
  for (auto& x : a) x = dist(rng);
  return a;
}

Chunks chunk_capacity(double rate_bps, double slot_seconds, double chunk_bits) noexcept {
  if (!(rate_bps > 0.0)) return 0;
  return static_cast<Chunks>(std::floor(slot_seconds * rate_bps / chunk_bits));
}

std::vector<Chunks> departures(std::span<const double> rates_bps, std::span<const Chunks> backlog,
                               double slot_seconds, double chunk_bits) {
  CACHESCHED_CHECK(rates_bps.size() == backlog.size(), "rate/backlog size mismatch");
  std::vector<Chunks> mu(rates_bps.size());
  for (std::size_t n = 0; n < mu.size(); ++n) {
    CACHESCHED_CHECK(rates_bps[n] >= 0.0, "negative rate");
    mu[n] = std::min(chunk_capacity(rates_bps[n], slot_seconds, chunk_bits), backlog[n]);
  }
  return mu;
}

QueueState::QueueState(std::size_t users, std::vector<std::int64_t> delay_thresholds)
    : queues_(users),
      thresholds_(std::move(delay_thresholds)),
      failed_served_(thresholds_.size(), 0) {}

std::vector<Chunks> QueueState::backlogs() const {
  std::vector<Chunks> q(queues_.size());
  for (std::size_t n = 0; n < q.size(); ++n) q[n] = backlog(n);
  return q;
}

Chunks QueueState::total_backlog() const noexcept {
  Chunks total = 0;
  for (const auto& q : queues_) total += static_cast<Chunks>(q.size());
  return total;
}

void QueueState::advance(std::span<const Chunks> served, std::span<const Chunks> arrivals,
                         std::int64_t slot) {
  CACHESCHED_CHECK(served.size() == queues_.size(), "served size mismatch");
  CACHESCHED_CHECK(arrivals.size() == queues_.size(), "arrivals size mismatch");
  for (std::size_t n = 0; n < queues_.size(); ++n) {
    auto& q = queues_[n];
    CACHESCHED_CHECK(served[n] >= 0 && served[n] <= static_cast<Chunks>(q.size()),
                     "user " + std::to_string(n) + " served more chunks than queued");
    CACHESCHED_CHECK(arrivals[n] >= 0, "negative arrivals");
    for (Chunks k = 0; k < served[n]; ++k) {
      const std::int64_t wait = slot - q.front();
      q.pop_front();
      total_wait_ += wait;
      for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        if (wait > thresholds_[i]) ++failed_served_[i];
      }
    }
    served_ += served[n];
    q.insert(q.end(), static_cast<std::size_t>(arrivals[n]), slot);
    arrived_ += arrivals[n];
  }
}

std::int64_t QueueState::failures(std::size_t threshold_index, std::int64_t now) const {
  const std::int64_t d = thresholds_[threshold_index];
  std::int64_t overdue = 0;
  for (const auto& q : queues_) {
    // Stamps are non-decreasing, so overdue chunks form a prefix.
    const auto first_recent =
        std::partition_point(q.begin(), q.end(), [&](std::int64_t s) { return now - s > d; });
    overdue += static_cast<std::int64_t>(first_recent - q.begin());
  }
  return failed_served_[threshold_index] + overdue;
}

double QueueState::failure_rate(std::size_t threshold_index, std::int64_t now) const {
  if (arrived_ == 0) return 0.0;
  return static_cast<double>(failures(threshold_index, now)) / static_cast<double>(arrived_);
}

}  // namespace cachesched
