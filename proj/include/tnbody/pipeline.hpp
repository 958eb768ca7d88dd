#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tnbody/circular_buffer.hpp"
#include "tnbody/error.hpp"

namespace tnbody {

enum class KernelStage { read, compute, write };

inline const char* to_string(KernelStage s) {
  switch (s) {
    case KernelStage::read: return "read";
    case KernelStage::compute: return "compute";
    case KernelStage::write: return "write";
  }
  return "?";
}

enum class CoreStatus { pending, running, done, failed };

inline const char* to_string(CoreStatus s) {
  switch (s) {
    case CoreStatus::pending: return "pending";
    case CoreStatus::running: return "running";
    case CoreStatus::done: return "done";
    case CoreStatus::failed: return "failed";
  }
  return "?";
}

/// One kernel activity: a body pinned to a core and a pipeline stage.
struct KernelTask {
  std::size_t core = 0;
  KernelStage stage = KernelStage::read;
  std::function<void()> body;
};

struct KernelFailure {
  std::size_t core = 0;
  KernelStage stage = KernelStage::read;
  std::string message;
};

/// Outcome of a group run: per-core status, the first failure, and timing.
struct GroupRun {
  std::vector<CoreStatus> core_status;
  std::optional<KernelFailure> failure;
  bool deadlock = false;
  std::string cb_dump;
  double elapsed_s = 0.0;

  bool ok() const { return !failure.has_value(); }
};

/// Owns the circular buffers of one pipeline so they can be shut down
/// together and dumped on failure.
class BufferSet {
 public:
  CircularBuffer& make(std::size_t capacity, std::string name) {
    buffers_.push_back(std::make_unique<CircularBuffer>(capacity, std::move(name)));
    buffers_.back()->set_tracker(&tracker_);
    return *buffers_.back();
  }

  BlockTracker& tracker() { return tracker_; }

  void shutdown_all() {
    for (auto& b : buffers_) b->shutdown();
  }

  std::string dump() const {
    std::ostringstream os;
    for (const auto& b : buffers_) os << "  " << b->describe() << '\n';
    return os.str();
  }

  std::size_t size() const { return buffers_.size(); }
  const CircularBuffer& operator[](std::size_t i) const { return *buffers_[i]; }

 private:
  BlockTracker tracker_;
  std::vector<std::unique_ptr<CircularBuffer>> buffers_;
};

/// Runs every task on its own thread and waits for all of them.
///
/// A task that throws (other than ShutdownSignal) fails its core and shuts
/// down every buffer; the remaining tasks then unwind. A watchdog reports a
/// deadlock when all live tasks stay blocked in buffer calls for longer than
/// `watchdog_s`.
inline GroupRun run_kernel_group(std::vector<KernelTask> tasks, BufferSet& buffers, std::size_t num_cores,
                                 double watchdog_s) {
  using clock = std::chrono::steady_clock;
  GroupRun run;
  run.core_status.assign(num_cores, CoreStatus::pending);
  std::vector<int> remaining(num_cores, 0);
  for (const auto& t : tasks) {
    if (t.core >= num_cores) throw ConfigError("kernel task assigned to core out of range");
    ++remaining[t.core];
  }

  std::mutex mu;
  std::condition_variable done_cv;
  std::size_t finished = 0;

  auto fail = [&](const KernelTask& t, std::string msg) {
    std::lock_guard lock(mu);
    run.core_status[t.core] = CoreStatus::failed;
    if (!run.failure) run.failure = KernelFailure{t.core, t.stage, std::move(msg)};
  };

  BlockTracker& tracker = buffers.tracker();
  const auto start = clock::now();
  for (std::size_t c = 0; c < num_cores; ++c)
    if (remaining[c] > 0) run.core_status[c] = CoreStatus::running;
    else run.core_status[c] = CoreStatus::done;

  std::vector<std::thread> threads;
  threads.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) tracker.activity_started();
  for (auto& task : tasks) {
    threads.emplace_back([&, t = &task] {
      bool failed = false;
      try {
        t->body();
      } catch (const ShutdownSignal&) {
        // Unwinding after another kernel failed; the failure is already recorded.
      } catch (const std::exception& e) {
        failed = true;
        fail(*t, e.what());
      } catch (...) {
        failed = true;
        fail(*t, "unknown exception");
      }
      if (failed) buffers.shutdown_all();
      tracker.activity_finished();
      std::lock_guard lock(mu);
      if (--remaining[t->core] == 0 && run.core_status[t->core] == CoreStatus::running)
        run.core_status[t->core] = CoreStatus::done;
      ++finished;
      done_cv.notify_all();
    });
  }

  {
    std::unique_lock lock(mu);
    const auto poll = std::chrono::milliseconds(10);
    std::optional<clock::time_point> blocked_since;
    while (finished < tasks.size()) {
      done_cv.wait_for(lock, poll);
      if (finished == tasks.size()) break;
      if (tracker.all_blocked()) {
        const auto now = clock::now();
        if (!blocked_since) blocked_since = now;
        if (!run.deadlock && std::chrono::duration<double>(now - *blocked_since).count() > watchdog_s) {
          run.deadlock = true;
          run.cb_dump = buffers.dump();
          if (!run.failure) {
            run.failure = KernelFailure{0, KernelStage::read,
                                        "deadlock: all kernels blocked on circular buffers for more than " +
                                            std::to_string(watchdog_s) + " s\n" + run.cb_dump};
          }
          for (auto& s : run.core_status)
            if (s == CoreStatus::running) s = CoreStatus::failed;
          lock.unlock();
          buffers.shutdown_all();
          lock.lock();
        }
      } else {
        blocked_since.reset();
      }
    }
  }
  for (auto& th : threads) th.join();
  run.elapsed_s = std::chrono::duration<double>(clock::now() - start).count();
  if (run.failure && run.cb_dump.empty()) run.cb_dump = buffers.dump();
  return run;
}

}  // namespace tnbody
