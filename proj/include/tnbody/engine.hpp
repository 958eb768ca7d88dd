#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <cstddef>
#include <string>
#include <vector>

#include "tnbody/circular_buffer.hpp"
#include "tnbody/dst_register.hpp"
#include "tnbody/error.hpp"
#include "tnbody/kernels.hpp"
#include "tnbody/particles.hpp"
#include "tnbody/pipeline.hpp"
#include "tnbody/tile.hpp"

namespace tnbody {

struct EngineConfig {
  static constexpr std::size_t kHardwareCores = 64;

  std::size_t num_cores = 1;
  std::size_t cb_capacity_tiles = 2;
  double watchdog_seconds = 5.0;
  double softening = 0.0;
  /// Permit more virtual cores than the hardware grid has.
  bool allow_oversubscription = false;

  void validate() const {
    if (num_cores < 1) throw ConfigError("num_cores must be >= 1");
    if (num_cores > kHardwareCores && !allow_oversubscription)
      throw ConfigError("num_cores " + std::to_string(num_cores) + " exceeds the " +
                        std::to_string(kHardwareCores) + "-core grid");
    if (cb_capacity_tiles < 1) throw ConfigError("cb_capacity_tiles must be >= 1");
    if (!(watchdog_seconds > 0.0)) throw ConfigError("watchdog_seconds must be > 0");
    if (!(softening >= 0.0) || !std::isfinite(softening)) throw ConfigError("softening must be finite and >= 0");
  }
};

/// The virtual core grid: per-core tile ownership for one input size.
struct CoreGrid {
  EngineConfig config;
  std::vector<CoreTiles> cores;

  static CoreGrid build(const EngineConfig& cfg, std::size_t tile_count) {
    cfg.validate();
    return CoreGrid{cfg, replicate_for_cores(tile_count, cfg.num_cores)};
  }
};

struct PipelineRun {
  std::vector<CoreStatus> core_status;
  std::optional<KernelFailure> failure;
  bool deadlock = false;
  std::string cb_dump;
  AccelJerk result;
  std::vector<std::size_t> dst_high_water;  // per core
  double elapsed_s = 0.0;

  bool ok() const { return !failure.has_value(); }

  std::string failure_message() const {
    if (!failure) return {};
    return "core " + std::to_string(failure->core) + " " + to_string(failure->stage) +
           " kernel failed: " + failure->message;
  }
};

/// Runs the read/compute/write pipeline on every core of `grid` and gathers
/// the per-particle FP32 acceleration and jerk.
inline PipelineRun run_pipeline(const CoreGrid& grid, const ParticleTiles& input) {
  for (const auto* q : input.quantities())
    if (q->tile_count() != input.tile_count() || q->logical_len != input.n)
      throw ContractViolation("run_pipeline: input quantities have inconsistent tile counts");
  const std::size_t num_cores = grid.cores.size();
  for (const auto& c : grid.cores)
    if (c.inner_count != input.tile_count())
      throw ContractViolation("run_pipeline: grid was built for a different tile count");

  BufferSet buffers;
  ResultSink sink(input.n, input.tile_count());
  std::vector<CoreBuffers> cbs;
  cbs.reserve(num_cores);
  for (std::size_t c = 0; c < num_cores; ++c)
    cbs.push_back(CoreBuffers::make(buffers, c, grid.config.cb_capacity_tiles));

  std::vector<std::unique_ptr<DstRegister>> dst;
  for (std::size_t c = 0; c < num_cores; ++c) dst.push_back(std::make_unique<DstRegister>());

  const float softening2 = static_cast<float>(grid.config.softening * grid.config.softening);
  std::vector<KernelTask> tasks;
  for (std::size_t c = 0; c < num_cores; ++c) {
    const auto& own = grid.cores[c];
    KernelSpec base{KernelStage::read, c, own.outer, own.inner_count};
    KernelSpec rd = base, cp = base, wr = base;
    cp.kind = KernelStage::compute;
    wr.kind = KernelStage::write;
    tasks.push_back({c, KernelStage::read, [&, rd] { read_kernel(rd, input, cbs[rd.core]); }});
    tasks.push_back({c, KernelStage::compute,
                     [&, cp] { compute_force_jerk(cp, cbs[cp.core], *dst[cp.core], softening2); }});
    tasks.push_back({c, KernelStage::write, [&, wr] { write_kernel(wr, cbs[wr.core], sink); }});
  }

  GroupRun group = run_kernel_group(std::move(tasks), buffers, num_cores, grid.config.watchdog_seconds);

  PipelineRun run;
  run.core_status = std::move(group.core_status);
  run.failure = std::move(group.failure);
  run.deadlock = group.deadlock;
  run.cb_dump = std::move(group.cb_dump);
  run.elapsed_s = group.elapsed_s;
  for (const auto& d : dst) run.dst_high_water.push_back(d->high_water());
  if (run.ok() && !sink.complete())
    run.failure = KernelFailure{0, KernelStage::write, "pipeline finished without writing every output tile"};
  run.result = sink.take();
  return run;
}

inline PipelineRun run_pipeline(const EngineConfig& cfg, const ParticleTiles& input) {
  return run_pipeline(CoreGrid::build(cfg, input.tile_count()), input);
}

/// Accelerations and jerks from the emulated accelerator; throws
/// RuntimeFailure if the pipeline fails.
inline AccelJerk engine_accel_jerk(const ParticleSystem& sys, const EngineConfig& cfg) {
  sys.validate();
  PipelineRun run = run_pipeline(cfg, tilize_particles(sys));
  if (!run.ok()) throw RuntimeFailure(run.failure_message());
  return std::move(run.result);
}

}  // namespace tnbody
