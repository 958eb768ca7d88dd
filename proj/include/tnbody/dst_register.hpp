#pragma once

#include <array>
#include <atomic>
#include <bitset>
#include <cstddef>
#include <string>

#include "tnbody/error.hpp"
#include "tnbody/tile.hpp"

namespace tnbody {

/// Raised when a compute kernel tries to hold more FP32 tiles in the
/// destination register than it has room for. Always a kernel bug.
class DstBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// Largest number of resident tiles observed by any DstRegister in this
/// process.
inline std::atomic<std::size_t>& dst_global_high_water() {
  static std::atomic<std::size_t> hw{0};
  return hw;
}

/// Destination register file of a compute core. Holds 16 BFP16 tiles, which
/// is 8 tiles in FP32. Slots are handed out as RAII handles.
class DstRegister {
 public:
  static constexpr std::size_t kFp32Capacity = 8;

  class Slot {
   public:
    Slot() = default;
    Slot(DstRegister* reg, std::size_t index) : reg_(reg), index_(index) {}
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;
    Slot(Slot&& o) noexcept : reg_(o.reg_), index_(o.index_) { o.reg_ = nullptr; }
    Slot& operator=(Slot&& o) noexcept {
      if (this != &o) {
        reset();
        reg_ = o.reg_;
        index_ = o.index_;
        o.reg_ = nullptr;
      }
      return *this;
    }
    ~Slot() { reset(); }

    void reset() {
      if (reg_) reg_->release(index_);
      reg_ = nullptr;
    }

    Tile& operator*() const { return reg_->tiles_[index_]; }
    Tile* operator->() const { return &reg_->tiles_[index_]; }
    std::size_t index() const { return index_; }

   private:
    DstRegister* reg_ = nullptr;
    std::size_t index_ = 0;
  };

  DstRegister() = default;
  DstRegister(const DstRegister&) = delete;
  DstRegister& operator=(const DstRegister&) = delete;

  Slot acquire() {
    if (used_.count() >= kFp32Capacity)
      throw DstBudgetExceeded("dst register budget exceeded: " + std::to_string(kFp32Capacity) +
                              " FP32 tiles already resident");
    std::size_t i = 0;
    while (used_.test(i)) ++i;
    used_.set(i);
    const std::size_t resident = used_.count();
    if (resident > high_water_) high_water_ = resident;
    auto& global = dst_global_high_water();
    std::size_t prev = global.load();
    while (resident > prev && !global.compare_exchange_weak(prev, resident)) {
    }
    return Slot(this, i);
  }

  std::size_t resident() const { return used_.count(); }
  std::size_t high_water() const { return high_water_; }

 private:
  void release(std::size_t i) { used_.reset(i); }

  std::array<Tile, kFp32Capacity> tiles_{};
  std::bitset<kFp32Capacity> used_;
  std::size_t high_water_ = 0;
};

}  // namespace tnbody
