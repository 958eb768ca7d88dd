#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "tnbody/clock.hpp"
#include "tnbody/energy.hpp"
#include "tnbody/error.hpp"
#include "tnbody/integrator.hpp"
#include "tnbody/power.hpp"

namespace tnbody {

/// Polls a provider every `interval` seconds on its own thread.
class PowerSampler {
 public:
  PowerSampler(PowerProvider& provider, Clock& clock, double interval_s)
      : provider_(provider), clock_(clock), interval_(interval_s) {
    if (!(interval_s > 0.0)) throw ConfigError("sampling interval must be > 0");
  }

  PowerSampler(const PowerSampler&) = delete;
  PowerSampler& operator=(const PowerSampler&) = delete;
  ~PowerSampler() {
    if (thread_.joinable()) stop();
  }

  void start() {
    trace_ = PowerTrace{};
    clock_.attach();
    thread_ = std::jthread([this](std::stop_token st) {
      double next = clock_.now();
      for (;;) {
        take(clock_.now());
        next += interval_;
        if (!clock_.sleep_until(next, st)) break;
      }
      clock_.detach();
    });
  }

  void mark_start(double t) {
    std::lock_guard lock(mu_);
    trace_.sim_start = t;
  }
  void mark_end(double t) {
    std::lock_guard lock(mu_);
    trace_.sim_end = t;
  }

  /// Stops the thread, takes one closing reading, and returns the trace.
  PowerTrace stop() {
    thread_.request_stop();
    thread_.join();
    take(clock_.now());
    std::lock_guard lock(mu_);
    return std::move(trace_);
  }

 private:
  void take(double t) {
    std::vector<PowerSample> batch;
    std::vector<std::string> errors;
    try {
      provider_.sample(t, batch, errors);
    } catch (const std::exception& e) {
      errors.push_back(std::string("provider failure: ") + e.what());
    }
    std::lock_guard lock(mu_);
    for (auto& s : batch) trace_.append(std::move(s));
    for (auto& e : errors) trace_.reject(std::move(e));
  }

  PowerProvider& provider_;
  Clock& clock_;
  double interval_;
  std::mutex mu_;
  PowerTrace trace_;
  std::jthread thread_;
};

/// Samples `provider` at `interval_s` until `stop_after_s` seconds of clock
/// time have passed (driver side), returning the trace.
inline PowerTrace sample_power(PowerProvider& provider, Clock& clock, double interval_s, double duration_s) {
  PowerSampler s(provider, clock, interval_s);
  s.start();
  clock.sleep_for(duration_s);
  return s.stop();
}

struct RunRecord {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  double time_to_solution_s = 0.0;
  std::map<std::string, double> energy_J;  // per source
  double energy_total_J = 0.0;

  bool operator==(const RunRecord&) const = default;
};

struct MetricStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)

  bool operator==(const MetricStats&) const = default;
};

inline MetricStats compute_stats(const std::vector<double>& v) {
  MetricStats s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

/// Metrics a report aggregates and histograms.
enum class Metric { time_to_solution, energy_to_solution };

struct BenchReport {
  std::string label;
  std::map<std::string, std::string> config;
  std::vector<RunRecord> runs;
  MetricStats time;
  MetricStats energy;
  std::map<std::string, MetricStats> energy_per_source;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  bool valid = false;

  std::vector<double> values(Metric m) const {
    std::vector<double> out;
    for (const auto& r : runs)
      if (r.ok) out.push_back(m == Metric::time_to_solution ? r.time_to_solution_s : r.energy_total_J);
    return out;
  }

  /// Rebuilds every aggregate from the per-run records.
  void recompute() {
    runs_ok = runs_failed = 0;
    std::map<std::string, std::vector<double>> per_source;
    for (const auto& r : runs) {
      if (!r.ok) {
        ++runs_failed;
        continue;
      }
      ++runs_ok;
      for (const auto& [id, j] : r.energy_J) per_source[id].push_back(j);
    }
    time = compute_stats(values(Metric::time_to_solution));
    energy = compute_stats(values(Metric::energy_to_solution));
    energy_per_source.clear();
    for (const auto& [id, v] : per_source) energy_per_source[id] = compute_stats(v);
    valid = runs_ok > 0;
  }

  bool operator==(const BenchReport&) const = default;
};

struct BenchmarkConfig {
  std::size_t repeats = 1;
  double sleep_pad_s = 120.0;
  double sample_interval_s = 1.0;
  std::string label = "bench";
};

using Workload = std::function<void()>;

/// Per repeat: start sampling, sleep the pad, mark start, run the workload,
/// mark end, sleep the pad, stop sampling. Time- and energy-to-solution
/// cover only [start, end]. A repeat whose workload throws, or whose window
/// cannot be integrated, is recorded as failed and left out of aggregates.
inline BenchReport run_benchmark(const BenchmarkConfig& cfg, const Workload& work, PowerProvider& provider,
                                 Clock& clock, std::vector<PowerTrace>* traces = nullptr) {
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (!(cfg.sleep_pad_s >= 0.0)) throw ConfigError("sleep pad must be >= 0");
  BenchReport report;
  report.label = cfg.label;
  for (std::size_t k = 0; k < cfg.repeats; ++k) {
    RunRecord rec;
    rec.index = k;
    PowerSampler sampler(provider, clock, cfg.sample_interval_s);
    sampler.start();
    clock.sleep_for(cfg.sleep_pad_s);
    const double start = clock.now();
    sampler.mark_start(start);
    bool work_ok = true;
    try {
      work();
    } catch (const std::exception& e) {
      work_ok = false;
      rec.error = e.what();
    }
    const double end = clock.now();
    sampler.mark_end(end);
    clock.sleep_for(cfg.sleep_pad_s);
    PowerTrace trace = sampler.stop();
    if (work_ok) {
      rec.time_to_solution_s = end - start;
      try {
        const auto e = integrate_energy(trace, start, end);
        rec.energy_J = e.per_source_J;
        rec.energy_total_J = e.total_J;
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
    }
    if (traces) traces->push_back(std::move(trace));
    report.runs.push_back(std::move(rec));
  }
  report.recompute();
  return report;
}

/// Benchmarks a simulation job; the run's own timer is ignored in favour of
/// the harness clock so sleep padding is excluded the same way for every
/// workload.
inline BenchReport run_benchmark(const BenchmarkConfig& cfg, const SimulationConfig& job, const ParticleSystem& ic,
                                 PowerProvider& provider, Clock& clock, std::vector<PowerTrace>* traces = nullptr) {
  job.validate();
  return run_benchmark(cfg, [&] { run_simulation(job, ic); }, provider, clock, traces);
}

/// Ratios of a reference report over a candidate (e.g. CPU over engine).
struct Comparison {
  double speedup = 0.0;       // mean_t_ref / mean_t_candidate
  double energy_ratio = 0.0;  // mean_E_ref / mean_E_candidate
};

inline Comparison compare(const BenchReport& candidate, const BenchReport& reference) {
  if (!candidate.valid || !reference.valid) throw InputError("compare: both reports need at least one valid run");
  return {reference.time.mean / candidate.time.mean, reference.energy.mean / candidate.energy.mean};
}

inline std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fx", r);
  return buf;
}

inline std::string format_mean_sd(const MetricStats& s, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f +- %.*f", digits, s.mean, digits, s.stddev);
  return buf;
}

// Report file: "[section]" headers followed by key=value lines. Sections are
// [meta], one [run.K] per repeat, then [aggregate].

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_stats(std::ostream& os, const std::string& key, const MetricStats& s) {
  os << key << ".count=" << s.count << '\n';
  os << key << ".mean=" << fmt17(s.mean) << '\n';
  os << key << ".stddev=" << fmt17(s.stddev) << '\n';
}

inline bool close(double a, double b) {
  return a == b || std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

inline bool stats_close(const MetricStats& a, const MetricStats& b) {
  return a.count == b.count && close(a.mean, b.mean) && close(a.stddev, b.stddev);
}

}  // namespace detail

inline void write_report(std::ostream& os, const BenchReport& r) {
  using detail::fmt17;
  os << "[meta]\n";
  os << "label=" << r.label << '\n';
  for (const auto& [k, v] : r.config) os << "config." << k << '=' << v << '\n';
  for (const auto& run : r.runs) {
    os << "\n[run." << run.index << "]\n";
    os << "status=" << (run.ok ? "ok" : "failed") << '\n';
    if (!run.error.empty()) {
      std::string e = run.error;
      std::replace(e.begin(), e.end(), '\n', ' ');
      os << "error=" << e << '\n';
    }
    os << "time_to_solution_s=" << fmt17(run.time_to_solution_s) << '\n';
    for (const auto& [id, j] : run.energy_J) os << "energy_J." << id << '=' << fmt17(j) << '\n';
    os << "energy_total_J=" << fmt17(run.energy_total_J) << '\n';
  }
  os << "\n[aggregate]\n";
  os << "runs_total=" << r.runs.size() << '\n';
  os << "runs_ok=" << r.runs_ok << '\n';
  os << "runs_failed=" << r.runs_failed << '\n';
  os << "valid=" << (r.valid ? "true" : "false") << '\n';
  detail::write_stats(os, "time_to_solution_s", r.time);
  detail::write_stats(os, "energy_total_J", r.energy);
  for (const auto& [id, s] : r.energy_per_source) detail::write_stats(os, "energy_J." + id, s);
}

/// Parses a report and checks that the stored aggregates match the ones
/// recomputed from its runs.
inline BenchReport read_report(std::istream& is) {
  BenchReport r;
  std::string section;
  std::map<std::string, std::string> agg;
  RunRecord* run = nullptr;
  std::string line;
  std::size_t lineno = 0;
  auto num = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw InputError("report: line " + std::to_string(lineno) + " has a non-numeric value");
    }
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError("report: malformed section at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      run = nullptr;
      if (section.rfind("run.", 0) == 0) {
        r.runs.emplace_back();
        run = &r.runs.back();
        run->index = static_cast<std::size_t>(num(section.substr(4)));
      } else if (section != "meta" && section != "aggregate") {
        throw InputError("report: unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("report: expected key=value at line " + std::to_string(lineno));
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (section == "meta") {
      if (key == "label") r.label = val;
      else if (key.rfind("config.", 0) == 0) r.config[key.substr(7)] = val;
      else throw InputError("report: unknown meta key '" + key + "'");
    } else if (run) {
      if (key == "status") run->ok = (val == "ok");
      else if (key == "error") run->error = val;
      else if (key == "time_to_solution_s") run->time_to_solution_s = num(val);
      else if (key == "energy_total_J") run->energy_total_J = num(val);
      else if (key.rfind("energy_J.", 0) == 0) run->energy_J[key.substr(9)] = num(val);
      else throw InputError("report: unknown run key '" + key + "'");
    } else if (section == "aggregate") {
      agg[key] = val;
    } else {
      throw InputError("report: key outside any section at line " + std::to_string(lineno));
    }
  }
  r.recompute();

  auto stored_stats = [&](const std::string& key) {
    MetricStats s;
    auto get = [&](const std::string& k) {
      auto it = agg.find(k);
      if (it == agg.end()) throw InputError("report: aggregate is missing '" + k + "'");
      return it->second;
    };
    s.count = static_cast<std::size_t>(num(get(key + ".count")));
    s.mean = num(get(key + ".mean"));
    s.stddev = num(get(key + ".stddev"));
    return s;
  };
  auto mismatch = [](const std::string& what) {
    return InputError("report: stored aggregate '" + what + "' does not match the per-run values");
  };
  if (agg.count("runs_ok") && static_cast<std::size_t>(num(agg["runs_ok"])) != r.runs_ok) throw mismatch("runs_ok");
  if (agg.count("runs_failed") && static_cast<std::size_t>(num(agg["runs_failed"])) != r.runs_failed)
    throw mismatch("runs_failed");
  if (!detail::stats_close(stored_stats("time_to_solution_s"), r.time)) throw mismatch("time_to_solution_s");
  if (!detail::stats_close(stored_stats("energy_total_J"), r.energy)) throw mismatch("energy_total_J");
  for (const auto& [id, s] : r.energy_per_source)
    if (!detail::stats_close(stored_stats("energy_J." + id), s)) throw mismatch("energy_J." + id);
  return r;
}

inline void save_report(const std::string& path, const BenchReport& r) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write report: " + path);
  write_report(os, r);
}

inline BenchReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open report: " + path);
  return read_report(is);
}

/// Histogram CSV with columns kind,lower,upper,count. "bin" rows cover
/// [min, max] in equal-width bins (the last one closed), followed by one
/// "mean" row whose lower and upper both hold the mean.
inline std::string emit_histogram(const BenchReport& report, Metric metric, std::size_t bins = 0) {
  const auto v = report.values(metric);
  std::ostringstream os;
  os << "kind,lower,upper,count\n";
  if (v.empty()) return os.str();
  if (bins == 0) bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(v.size()))));
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn_it, hi = *mx_it;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    std::size_t b = width > 0 ? static_cast<std::size_t>((x - lo) / width) : 0;
    counts[std::min(b, bins - 1)]++;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const double bl = lo + width * static_cast<double>(b);
    const double bu = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    os << "bin," << detail::fmt17(bl) << ',' << detail::fmt17(bu) << ',' << counts[b] << '\n';
  }
  const double mean = compute_stats(v).mean;
  os << "mean," << detail::fmt17(mean) << ',' << detail::fmt17(mean) << ",\n";
  return os.str();
}

}  // namespace tnbody
