// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tnbody/bench.hpp"
#include "tnbody/circular_buffer.hpp"
#include "tnbody/engine.hpp"
#include "tnbody/initial_conditions.hpp"
#include "tnbody/integrator.hpp"
#include "tnbody/oracle.hpp"
#include "tnbody/rng.hpp"
#include "tnbody/validation.hpp"

using namespace tnbody;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ParticleSystem plummer(std::size_t n, std::uint64_t seed = 42) {
  ICSpec spec;
  spec.n = n;
  spec.seed = seed;
  return generate(spec);
}

EngineConfig cores(std::size_t n) {
  EngineConfig c;
  c.num_cores = n;
  return c;
}

bool bit_identical(const AccelJerk& a, const AccelJerk& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t q = 0; q < 6; ++q)
    if (std::memcmp(a.arrays()[q]->data(), b.arrays()[q]->data(), a.size() * sizeof(double)) != 0) return false;
  return true;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string log = "acceptance_cli.log";
  const std::string cmd = std::string(NBODY_CLI) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome oracle_equivalence() {
  const auto s = plummer(2048);
  const auto rep = validate(engine_accel_jerk(s, cores(4)), brute_force_fp64(s));
  return {rep.pass, "accel " + fmt("%.3e", rep.max_rel_accel_err) + " (<= 5e-4), jerk " +
                        fmt("%.3e", rep.max_rel_jerk_err) + " (<= 2e-3)"};
}

Outcome core_invariance() {
  const auto s = plummer(4096);
  const auto ref = engine_accel_jerk(s, cores(1));
  bool ok = true;
  for (std::size_t c : {2, 4, 8}) ok = ok && bit_identical(engine_accel_jerk(s, cores(c)), ref);
  return {ok, "N=4096, cores 1/2/4/8 bit-identical: " + std::string(ok ? "yes" : "no")};
}

Outcome pipeline_safety() {
  std::size_t handoffs = 0, violations = 0, disorder = 0, deadlocks = 0;
  Xoshiro256 seeds(31337);
  for (std::size_t capacity = 1; capacity <= 8; ++capacity) {
    CircularBuffer cb(capacity, "stress");
    constexpr std::uint32_t kCount = 13000;
    const std::uint64_t ps = seeds(), cs = seeds();
    const std::size_t max_batch = (capacity + 1) / 2;
    auto producer = std::async(std::launch::async, [&] {
      Xoshiro256 rng(ps);
      for (std::uint32_t i = 0; i < kCount;) {
        const std::size_t k = std::min<std::size_t>(1 + static_cast<std::size_t>(rng.uniform() * max_batch), kCount - i);
        cb.reserve_back(k);
        for (std::size_t j = 0; j < k; ++j) cb.reserved(j)[0] = static_cast<float>(i++);
        if (rng.uniform() < 0.03) std::this_thread::sleep_for(std::chrono::microseconds(30));
        cb.push_back(k);
      }
    });
    Xoshiro256 rng(cs);
    std::uint32_t expect = 0;
    while (expect < kCount) {
      const std::size_t k = std::min<std::size_t>(1 + static_cast<std::size_t>(rng.uniform() * max_batch), kCount - expect);
      cb.wait_front(k);
      for (std::size_t j = 0; j < k; ++j)
        if (cb.front(j)[0] != static_cast<float>(expect++)) ++disorder;
      if (rng.uniform() < 0.03) std::this_thread::sleep_for(std::chrono::microseconds(30));
      cb.pop_front(k);
    }
    if (producer.wait_for(std::chrono::seconds(30)) != std::future_status::ready) {
      ++deadlocks;
      cb.shutdown();
    }
    producer.get();
    handoffs += cb.stats().total_popped;
    violations += cb.stats().invariant_violations + (cb.stats().max_occupied > capacity);
  }
  bool rejected = false;
  try {
    CircularBuffer cb(4);
    cb.reserve_back(5);
  } catch (const ConfigError&) {
    rejected = true;
  }
  const bool ok = handoffs >= 100000 && violations == 0 && disorder == 0 && deadlocks == 0 && rejected;
  return {ok, std::to_string(handoffs) + " handoffs, " + std::to_string(violations) + " invariant violations, " +
                  std::to_string(disorder) + " out of order, " + std::to_string(deadlocks) +
                  " deadlocks, oversize reserve rejected: " + (rejected ? "yes" : "no")};
}

Outcome dst_budget() {
  const std::size_t hw = dst_global_high_water().load();
  return {hw > 0 && hw <= DstRegister::kFp32Capacity,
          "high-water mark " + std::to_string(hw) + " of " + std::to_string(DstRegister::kFp32Capacity) +
              " FP32 tiles over every compute invocation in this run"};
}

Outcome two_body() {
  auto s = ParticleSystem::with_size(2);
  s.mass = {1.0, 1.0};
  s.x = {0.0, 1.0};
  const auto a = engine_accel_jerk(s, cores(1));
  const bool accel_ok = a.ax[0] == 1.0 && a.ax[1] == -1.0 && a.ay[0] == 0.0 && a.az[0] == 0.0;

  s.vy = {0.0, 1.0};
  const auto j = engine_accel_jerk(s, cores(1));
  const double h = 1e-6;
  auto fwd = s, bwd = s;
  fwd.y[1] += h;
  bwd.y[1] -= h;
  const auto af = brute_force_fp64(fwd), ab = brute_force_fp64(bwd);
  double jerr = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double fdx = (af.ax[i] - ab.ax[i]) / (2 * h), fdy = (af.ay[i] - ab.ay[i]) / (2 * h);
    jerr = std::max(jerr, std::hypot(j.jx[i] - fdx, j.jy[i] - fdy) / std::hypot(fdx, fdy));
  }

  ICSpec spec;
  spec.model = ICModel::two_body_circular;
  spec.n = 2;
  const auto orbit = generate(spec);
  const double period = 2.0 * std::numbers::pi / std::sqrt(2.0);
  auto one_period = [&](std::size_t steps) {
    SimulationConfig cfg;
    cfg.backend = Backend::oracle;
    cfg.cycles = steps;
    cfg.dt = period / static_cast<double>(steps);
    const auto end = run_simulation(cfg, orbit).final_state;
    double e = 0.0;
    for (std::size_t i = 0; i < 2; ++i) e = std::max(e, std::hypot(end.x[i] - orbit.x[i], end.y[i] - orbit.y[i]));
    return e;
  };
  const double e1 = one_period(100), e2 = one_period(200);
  const double ratio = e1 / e2;
  // Fourth-order bound: error at dt = T/100 stays below (dt/T)^4 times a modest constant.
  const bool orbit_ok = e1 < 1e3 * std::pow(0.01, 4) && ratio >= 12.0 && ratio <= 20.0;
  return {accel_ok && jerr < 1e-5 && orbit_ok,
          std::string("accel exact: ") + (accel_ok ? "yes" : "no") + ", jerk rel err " + fmt("%.2e", jerr) +
              ", one-period error " + fmt("%.3e", e1) + ", dt-halving ratio " + fmt("%.2f", ratio)};
}

Outcome momentum() {
  double worst64 = 0.0, worst32 = 0.0;
  for (std::size_t n : {1024, 4096}) {
    const auto s = plummer(n, 5);
    for (int which = 0; which < 2; ++which) {
      const auto a = which == 0 ? brute_force_fp64(s) : engine_accel_jerk(s, cores(4));
      double p[3] = {0, 0, 0}, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        p[0] += s.mass[i] * a.ax[i];
        p[1] += s.mass[i] * a.ay[i];
        p[2] += s.mass[i] * a.az[i];
        scale += s.mass[i] * std::sqrt(a.ax[i] * a.ax[i] + a.ay[i] * a.ay[i] + a.az[i] * a.az[i]);
      }
      const double rel = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / scale;
      (which == 0 ? worst64 : worst32) = std::max(which == 0 ? worst64 : worst32, rel);
    }
  }
  return {worst64 <= 1e-12 && worst32 <= 1e-3,
          "oracle " + fmt("%.2e", worst64) + " (<= 1e-12), engine " + fmt("%.2e", worst32) + " (<= 1e-3)"};
}

Outcome energy_integration() {
  PowerTrace flat, steps;
  for (int t = 0; t <= 300; ++t) flat.append({double(t), "dev0", 10.0});
  for (int t = 0; t <= 600; ++t) steps.append({double(t), "dev0", t < 300 ? 10.0 : 20.0});
  const double e_flat = integrate_energy(flat, 0, 300).total_J;
  const double e_steps = integrate_energy(steps, 0, 600).total_J;

  Xoshiro256 rng(8);
  PowerTrace noisy;
  for (int t = 0; t <= 200; ++t) noisy.append({0.5 * t, "dev0", rng.uniform(1.0, 90.0)});
  const double whole = integrate_energy(noisy, 1.3, 97.9).total_J;
  const double lin = integrate_energy(noisy.scaled(3.0), 1.3, 97.9).total_J;
  const double add = integrate_energy(noisy, 1.3, 40.2).total_J + integrate_energy(noisy, 40.2, 97.9).total_J;
  const bool props = std::abs(lin - 3.0 * whole) <= 1e-9 * whole && std::abs(add - whole) <= 1e-9 * whole;
  return {e_flat == 3000.0 && e_steps == 9000.0 && props,
          "constant " + fmt("%.6f", e_flat) + " J, two-level " + fmt("%.6f", e_steps) +
              " J, linearity/additivity: " + (props ? "ok" : "violated")};
}

BenchReport virtual_bench(double pad, PowerProvider& p, double work_s, std::size_t repeats = 3) {
  VirtualClock clock;
  BenchmarkConfig cfg;
  cfg.repeats = repeats;
  cfg.sleep_pad_s = pad;
  return run_benchmark(cfg, [&] { clock.sleep_for(work_s); }, p, clock);
}

Outcome sleep_exclusion() {
  SyntheticProvider p({{"dev0", 42.0}, {"dev1", 7.5}});
  const auto a = virtual_bench(60.0, p, 37.25);
  const auto b = virtual_bench(120.0, p, 37.25);
  bool same = a.runs.size() == b.runs.size();
  for (std::size_t k = 0; same && k < a.runs.size(); ++k)
    same = a.runs[k].time_to_solution_s == b.runs[k].time_to_solution_s &&
           a.runs[k].energy_total_J == b.runs[k].energy_total_J && a.runs[k].energy_J == b.runs[k].energy_J;
  same = same && a.time == b.time && a.energy == b.energy;
  return {same && a.valid, "pad 60 s vs 120 s: time " + fmt("%.4f", a.time.mean) + " / " + fmt("%.4f", b.time.mean) +
                               " s, energy " + fmt("%.4f", a.energy.mean) + " / " + fmt("%.4f", b.energy.mean) + " J"};
}

Outcome report_shape() {
  // (a) Replayed traces built from the published means.
  auto replay_of = [](double seconds, double joules) {
    PowerTrace t;
    const double watts = joules / seconds;
    for (int k = 0; k <= 2000; ++k) t.append({double(k), "acc0", watts});
    return ReplayProvider(t);
  };
  auto engine_p = replay_of(301.40, 71560.0);
  auto cpu_p = replay_of(672.90, 128890.0);
  const auto eng = virtual_bench(120.0, engine_p, 301.40, 1);
  const auto cpu = virtual_bench(120.0, cpu_p, 672.90, 1);
  const auto cmp = compare(eng, cpu);
  const bool ratios = std::abs(cmp.speedup - 2.23) <= 0.01 && std::abs(cmp.energy_ratio - 1.80) <= 0.01;

  // (b) The CLI end to end on N = 2048.
  const auto t0 = std::chrono::steady_clock::now();
  bool cli_ok = run_cli("generate --n 2048 --seed 42 --out acc_ic.txt") == 0;
  std::string out;
  cli_ok = cli_ok && run_cli("validate --ic acc_ic.txt --backend engine --cores 4", &out) == 0;
  const std::string bench = " --ic acc_ic.txt --cycles 2 --repeats 3 --sleep-pad 1 --interval 0.25";
  cli_ok = cli_ok && run_cli("bench" + bench + " --backend engine --cores 4 --out acc_engine.report") == 0;
  cli_ok = cli_ok && run_cli("bench" + bench + " --backend cpu_reference --out acc_cpu.report") == 0;
  cli_ok = cli_ok && run_cli("report --in acc_engine.report --in acc_cpu.report --out acc_cmp.csv", &out) == 0;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool shape = out.find("+-") != std::string::npos && out.find("speedup=") != std::string::npos &&
               out.find("energy_ratio=") != std::string::npos;
  for (const char* f : {"acc_cmp.0.engine.time_hist.csv", "acc_cmp.0.engine.energy_hist.csv",
                        "acc_cmp.1.cpu_reference.time_hist.csv", "acc_cmp.1.cpu_reference.energy_hist.csv"}) {
    std::ifstream is(f);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    shape = shape && text.find("\nmean,") != std::string::npos && text.find("\nbin,") != std::string::npos;
  }
  const bool ok = ratios && cli_ok && shape && elapsed < 300.0;
  return {ok, "replayed speedup " + format_ratio(cmp.speedup) + ", energy ratio " + format_ratio(cmp.energy_ratio) +
                  "; CLI pipeline " + (cli_ok ? "ok" : "failed") + ", report shape " + (shape ? "ok" : "bad") +
                  ", " + fmt("%.1f", elapsed) + " s"};
}

Outcome padding() {
  const auto s = plummer(1000, 42);
  const auto tiles = tilize_particles(s);
  bool zero_pad = true;
  for (const auto* q : tiles.quantities())
    for (std::size_t k = 1000; k < kTileSize; ++k) zero_pad = zero_pad && q->tiles[0][k] == 0.0f;
  const auto eng = engine_accel_jerk(s, cores(1));
  const auto rep = validate(eng, brute_force_fp64(s));
  // Zero-mass padding lanes must contribute exactly nothing: the padded engine
  // equals the unpadded FP32 reference bit for bit.
  const bool exact = bit_identical(eng, optimized_cpu(s, 1));
  return {rep.pass && zero_pad && exact, "accel " + fmt("%.3e", rep.max_rel_accel_err) + ", jerk " +
                                             fmt("%.3e", rep.max_rel_jerk_err) + ", padding contributes zero: " +
                                             (exact && zero_pad ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle-equivalence tolerance", oracle_equivalence},
      {"core-count invariance", core_invariance},
      {"pipeline safety and liveness", pipeline_safety},
      {"dst register budget", nullptr},  // evaluated last, after every compute invocation
      {"two-body analytics", two_body},
      {"momentum conservation", momentum},
      {"energy integration", energy_integration},
      {"sleep exclusion", sleep_exclusion},
      {"report shape", report_shape},
      {"padding neutrality", padding},
  };
  std::vector<Outcome> results(criteria.size());
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!criteria[i].second) continue;
    try {
      results[i] = criteria[i].second();
    } catch (const std::exception& e) {
      results[i] = {false, std::string("exception: ") + e.what()};
    }
  }
  results[3] = dst_budget();

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << (results[i].pass ? "PASS" : "FAIL")
              << " - " << results[i].detail << '\n';
    failed += results[i].pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
