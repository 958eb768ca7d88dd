#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "tnbody/error.hpp"
#include "tnbody/tile.hpp"

namespace tnbody {

/// Counts kernel activities that are alive and how many of them are blocked
/// inside a circular-buffer call. Shared by every buffer in one pipeline so
/// a watchdog can detect the all-blocked state.
class BlockTracker {
 public:
  void activity_started() { live_.fetch_add(1); }
  void activity_finished() { live_.fetch_sub(1); }
  void enter_blocked() { blocked_.fetch_add(1); }
  void leave_blocked() { blocked_.fetch_sub(1); }

  int live() const { return live_.load(); }
  int blocked() const { return blocked_.load(); }
  bool all_blocked() const {
    const int l = live_.load();
    return l > 0 && blocked_.load() >= l;
  }

 private:
  std::atomic<int> live_{0};
  std::atomic<int> blocked_{0};
};

struct CircularBufferStats {
  std::size_t capacity = 0;
  std::size_t occupied = 0;
  std::size_t reserved = 0;
  std::size_t max_occupied = 0;
  std::size_t total_pushed = 0;
  std::size_t total_popped = 0;
  std::size_t invariant_violations = 0;
};

/// Bounded single-producer/single-consumer FIFO of tiles with blocking
/// back-pressure.
///
/// Producer side: reserve_back(n) -> write via reserved(i) -> push_back(n).
/// Consumer side: wait_front(n) -> read via front(i) -> pop_front(n).
/// shutdown() wakes every blocked call with ShutdownSignal.
class CircularBuffer {
 public:
  explicit CircularBuffer(std::size_t capacity, std::string name = "cb")
      : name_(std::move(name)), slots_(capacity) {
    if (capacity == 0) throw ConfigError("circular buffer '" + name_ + "' needs capacity >= 1");
  }

  CircularBuffer(const CircularBuffer&) = delete;
  CircularBuffer& operator=(const CircularBuffer&) = delete;

  const std::string& name() const { return name_; }
  std::size_t capacity() const { return slots_.size(); }

  void set_tracker(BlockTracker* tracker) { tracker_ = tracker; }

  void reserve_back(std::size_t n) {
    check_request(n, "reserve_back");
    std::unique_lock lock(mu_);
    block_until(lock, not_full_, [&] { return capacity() - occupied_ >= n; });
    reserved_ = n;
  }

  /// Slot i of the current reservation.
  Tile& reserved(std::size_t i) {
    if (i >= reserved_)
      throw ContractViolation("cb '" + name_ + "': write outside the current reservation");
    return slots_[(write_pos_ + i) % capacity()];
  }

  void push_back(std::size_t n) {
    {
      std::lock_guard lock(mu_);
      if (n > reserved_)
        throw ContractViolation("cb '" + name_ + "': push_back(" + std::to_string(n) +
                                ") exceeds reservation of " + std::to_string(reserved_));
      write_pos_ = (write_pos_ + n) % capacity();
      reserved_ -= n;
      occupied_ += n;
      total_pushed_ += n;
      if (occupied_ > capacity()) ++violations_;
      if (occupied_ > max_occupied_) max_occupied_ = occupied_;
    }
    not_empty_.notify_one();
  }

  /// Reserve, copy and push a single tile.
  void push(const Tile& t) {
    reserve_back(1);
    reserved(0) = t;
    push_back(1);
  }

  void wait_front(std::size_t n) {
    check_request(n, "wait_front");
    std::unique_lock lock(mu_);
    block_until(lock, not_empty_, [&] { return occupied_ >= n; });
  }

  /// Tile i from the front of the queue. Valid after a successful
  /// wait_front covering index i and before the matching pop.
  const Tile& front(std::size_t i) const { return slots_[(read_pos_ + i) % capacity()]; }

  void pop_front(std::size_t n) {
    {
      std::lock_guard lock(mu_);
      if (n > occupied_)
        throw ContractViolation("cb '" + name_ + "': pop_front(" + std::to_string(n) +
                                ") exceeds occupancy " + std::to_string(occupied_));
      read_pos_ = (read_pos_ + n) % capacity();
      occupied_ -= n;
      total_popped_ += n;
    }
    not_full_.notify_one();
  }

  void shutdown() {
    {
      std::lock_guard lock(mu_);
      shutdown_ = true;
    }
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  bool is_shutdown() const {
    std::lock_guard lock(mu_);
    return shutdown_;
  }

  std::size_t occupied() const {
    std::lock_guard lock(mu_);
    return occupied_;
  }

  CircularBufferStats stats() const {
    std::lock_guard lock(mu_);
    return {capacity(), occupied_, reserved_, max_occupied_, total_pushed_, total_popped_, violations_};
  }

  std::string describe() const {
    const auto s = stats();
    std::ostringstream os;
    os << name_ << ": occupied " << s.occupied << '/' << s.capacity << ", reserved " << s.reserved
       << ", pushed " << s.total_pushed << ", popped " << s.total_popped;
    return os.str();
  }

 private:
  void check_request(std::size_t n, const char* op) const {
    if (n > capacity())
      throw ConfigError("cb '" + name_ + "': " + op + "(" + std::to_string(n) +
                        ") exceeds capacity " + std::to_string(capacity()));
  }

  template <class Pred>
  void block_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv, Pred ready) {
    if (shutdown_) throw ShutdownSignal();
    if (ready()) return;
    if (tracker_) tracker_->enter_blocked();
    cv.wait(lock, [&] { return shutdown_ || ready(); });
    if (tracker_) tracker_->leave_blocked();
    if (shutdown_) throw ShutdownSignal();
  }

  std::string name_;
  std::vector<Tile> slots_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::size_t read_pos_ = 0;
  std::size_t write_pos_ = 0;
  std::size_t occupied_ = 0;
  std::size_t reserved_ = 0;
  std::size_t max_occupied_ = 0;
  std::size_t total_pushed_ = 0;
  std::size_t total_popped_ = 0;
  std::size_t violations_ = 0;
  bool shutdown_ = false;
  BlockTracker* tracker_ = nullptr;
};

}  // namespace tnbody
