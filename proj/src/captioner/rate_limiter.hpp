// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#pragma once

#include <algorithm>
#include <chrono>
#include <mutex>
#include <thread>

namespace meltcheck::captioner {

/// Token bucket shared by every request of one adapter. Capacity 1, so
/// after the first request calls are spaced 1/rate seconds apart.
/// A rate <= 0 disables limiting.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double rate_per_sec, double capacity = 1.0)
      : rate_(rate_per_sec), capacity_(capacity), tokens_(capacity), last_(Clock::now()) {}

  // Blocks until a token is available, then takes it. Safe to call from
  // many threads; waiters are served one at a time.
  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mutex_);
    while (true) {
      refill(Clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill(Clock::time_point now) {
    std::chrono::duration<double> elapsed = now - last_;
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_);
  }

  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

}  // namespace meltcheck::captioner
