#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <set>
#include <stop_token>
#include <thread>

namespace tnbody {

/// Time source for the benchmark harness. Background activities (the power
/// sampler) bracket their lifetime with attach()/detach() and wait with
/// sleep_until(); the foreground driver waits with sleep_for().
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_for(double seconds) = 0;
  /// Returns false if `stop` was requested before `deadline`.
  virtual bool sleep_until(double deadline, std::stop_token stop) = 0;
  virtual void attach() {}
  virtual void detach() {}
};

/// Monotonic wall clock.
class SteadyClock final : public Clock {
 public:
  double now() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  }

  void sleep_for(double seconds) override {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  bool sleep_until(double deadline, std::stop_token stop) override {
    const auto tp = std::chrono::steady_clock::time_point(
        std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(deadline)));
    std::unique_lock lock(mu_);
    cv_.wait_until(lock, stop, tp, [] { return false; });
    return !stop.stop_requested();
  }

 private:
  std::mutex mu_;
  std::condition_variable_any cv_;
};

/// Discrete-event clock for deterministic tests. Time moves only when the
/// driver calls sleep_for(); before moving past a sleeper's deadline it
/// stops there, wakes the sleeper, and waits for every attached activity
/// to go back to sleep. Sampling therefore happens at exact virtual times.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(double start = 0.0) : now_(start) {}

  double now() override {
    std::lock_guard lock(mu_);
    return now_;
  }

  void attach() override {
    std::lock_guard lock(mu_);
    ++awake_;
  }

  void detach() override {
    std::lock_guard lock(mu_);
    --awake_;
    cv_.notify_all();
  }

  bool sleep_until(double deadline, std::stop_token stop) override {
    std::unique_lock lock(mu_);
    auto it = deadlines_.insert(deadline);
    --awake_;
    cv_.notify_all();
    const bool reached = cv_.wait(lock, stop, [&] { return now_ >= deadline; });
    deadlines_.erase(it);
    ++awake_;
    return reached;
  }

  void sleep_for(double seconds) override {
    std::unique_lock lock(mu_);
    const double target = now_ + seconds;
    for (;;) {
      cv_.wait(lock, [&] { return settled(); });
      if (!deadlines_.empty() && *deadlines_.begin() <= target) {
        now_ = *deadlines_.begin();
        cv_.notify_all();
        continue;
      }
      now_ = target;
      cv_.notify_all();
      cv_.wait(lock, [&] { return settled(); });
      return;
    }
  }

 private:
  // No attached activity is running and nobody is due at the current time.
  bool settled() const { return awake_ == 0 && (deadlines_.empty() || *deadlines_.begin() > now_); }

  std::mutex mu_;
  std::condition_variable_any cv_;
  double now_;
  int awake_ = 0;
  std::multiset<double> deadlines_;
};

}  // namespace tnbody
