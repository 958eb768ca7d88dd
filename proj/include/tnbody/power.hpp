#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tnbody/error.hpp"

namespace tnbody {

struct PowerSample {
  double timestamp_s = 0.0;
  std::string source_id;
  double watts = 0.0;

  bool operator==(const PowerSample&) const = default;
};

/// Whole-server readings (IPMI-style) are recorded but never counted in
/// energy-to-solution totals.
inline bool is_whole_server_source(const std::string& id) { return id.rfind("ipmi", 0) == 0; }

/// Power samples in acquisition order plus the simulation start/end marks.
struct PowerTrace {
  std::vector<PowerSample> samples;
  std::optional<double> sim_start;
  std::optional<double> sim_end;
  std::size_t skipped = 0;
  std::vector<std::string> log;

  /// Appends after checking watts >= 0 and per-source monotonic time;
  /// rejected samples are counted and logged.
  bool append(PowerSample s) {
    if (!(s.watts >= 0.0) || !std::isfinite(s.watts)) {
      reject("negative or non-finite reading from " + s.source_id);
      return false;
    }
    auto it = last_time_.find(s.source_id);
    if (it != last_time_.end() && s.timestamp_s < it->second) {
      reject("out-of-order timestamp from " + s.source_id);
      return false;
    }
    last_time_[s.source_id] = s.timestamp_s;
    samples.push_back(std::move(s));
    return true;
  }

  void reject(std::string why) {
    ++skipped;
    log.push_back(std::move(why));
  }

  std::vector<std::string> sources() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : samples)
      if (seen.insert(s.source_id).second) out.push_back(s.source_id);
    return out;
  }

  std::vector<PowerSample> for_source(const std::string& id) const {
    std::vector<PowerSample> out;
    for (const auto& s : samples)
      if (s.source_id == id) out.push_back(s);
    return out;
  }

  double begin_time() const {
    double t = samples.empty() ? 0.0 : samples.front().timestamp_s;
    for (const auto& s : samples) t = std::min(t, s.timestamp_s);
    return t;
  }

  double end_time() const {
    double t = samples.empty() ? 0.0 : samples.front().timestamp_s;
    for (const auto& s : samples) t = std::max(t, s.timestamp_s);
    return t;
  }

  /// Copy with every reading multiplied by `factor`.
  PowerTrace scaled(double factor) const {
    PowerTrace t = *this;
    for (auto& s : t.samples) s.watts *= factor;
    return t;
  }

 private:
  std::map<std::string, double> last_time_;
};

// CSV: header "timestamp_s,source_id,watts", one sample per line. Markers
// are carried on '#' comment lines ("# sim_start=<t>").

inline void write_trace_csv(std::ostream& os, const PowerTrace& t) {
  char buf[64];
  os << "timestamp_s,source_id,watts\n";
  if (t.sim_start) {
    std::snprintf(buf, sizeof buf, "%.17g", *t.sim_start);
    os << "# sim_start=" << buf << '\n';
  }
  if (t.sim_end) {
    std::snprintf(buf, sizeof buf, "%.17g", *t.sim_end);
    os << "# sim_end=" << buf << '\n';
  }
  for (const auto& s : t.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.timestamp_s);
    os << buf << ',' << s.source_id << ',';
    std::snprintf(buf, sizeof buf, "%.17g", s.watts);
    os << buf << '\n';
  }
}

inline PowerTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("power trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "timestamp_s,source_id,watts")
    throw InputError("power trace: expected header 'timestamp_s,source_id,watts', got '" + line + "'");
  PowerTrace t;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const double v = std::stod(line.substr(eq + 1));
      if (key == "sim_start") t.sim_start = v;
      else if (key == "sim_end") t.sim_end = v;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw InputError("power trace: line " + std::to_string(lineno) + " needs 3 fields");
    PowerSample s;
    try {
      s.timestamp_s = std::stod(line.substr(0, c1));
      s.source_id = line.substr(c1 + 1, c2 - c1 - 1);
      s.watts = std::stod(line.substr(c2 + 1));
    } catch (const std::exception&) {
      throw InputError("power trace: line " + std::to_string(lineno) + " is not numeric");
    }
    if (!t.append(s))
      throw InputError("power trace: line " + std::to_string(lineno) + " rejected: " + t.log.back());
  }
  return t;
}

inline PowerTrace load_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open power trace: " + path);
  return read_trace_csv(is);
}

inline void save_trace_csv(const std::string& path, const PowerTrace& t) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot write power trace: " + path);
  write_trace_csv(os, t);
}

/// A source of power readings. sample() is called once per sampling tick
/// with the tick's timestamp; it appends one reading per source that could
/// be read and one message per source that could not.
class PowerProvider {
 public:
  virtual ~PowerProvider() = default;
  virtual void sample(double t, std::vector<PowerSample>& out, std::vector<std::string>& errors) = 0;
  virtual std::string describe() const = 0;
};

/// Fixed readings, or a deterministic function of time, per source.
class SyntheticProvider final : public PowerProvider {
 public:
  using Profile = std::function<double(double)>;

  explicit SyntheticProvider(double watts = 10.0, std::string source = "synthetic0") {
    add_source(std::move(source), watts);
  }
  SyntheticProvider(std::vector<std::pair<std::string, double>> sources) {
    for (auto& [id, w] : sources) add_source(id, w);
  }

  void add_source(std::string id, double watts) {
    sources_.emplace_back(std::move(id), [watts](double) { return watts; });
  }
  void add_source(std::string id, Profile p) { sources_.emplace_back(std::move(id), std::move(p)); }

  void sample(double t, std::vector<PowerSample>& out, std::vector<std::string>&) override {
    for (const auto& [id, p] : sources_) out.push_back({t, id, p(t)});
  }

  std::string describe() const override { return "synthetic(" + std::to_string(sources_.size()) + " sources)"; }

 private:
  std::vector<std::pair<std::string, Profile>> sources_;
};

/// Plays back a recorded trace. The first call is anchored to the trace's
/// first timestamp; afterwards each source reports its most recent recorded
/// value at the same elapsed offset (the last value is held past the end).
class ReplayProvider final : public PowerProvider {
 public:
  explicit ReplayProvider(PowerTrace trace) : trace_(std::move(trace)) {
    if (trace_.samples.empty()) throw InputError("replay provider: trace has no samples");
    for (const auto& id : trace_.sources()) by_source_.emplace_back(id, trace_.for_source(id));
    origin_ = trace_.begin_time();
  }

  static ReplayProvider from_file(const std::string& path) { return ReplayProvider(load_trace_csv(path)); }

  void sample(double t, std::vector<PowerSample>& out, std::vector<std::string>&) override {
    if (!anchor_) anchor_ = t;
    const double ft = origin_ + (t - *anchor_);
    for (const auto& [id, rows] : by_source_) {
      auto it = std::upper_bound(rows.begin(), rows.end(), ft,
                                 [](double v, const PowerSample& s) { return v < s.timestamp_s; });
      if (it == rows.begin()) continue;  // source starts later in the recording
      out.push_back({t, id, std::prev(it)->watts});
    }
  }

  std::string describe() const override { return "replay(" + std::to_string(trace_.samples.size()) + " samples)"; }

 private:
  PowerTrace trace_;
  std::vector<std::pair<std::string, std::vector<PowerSample>>> by_source_;
  double origin_ = 0.0;
  std::optional<double> anchor_;
};

/// Reads monotonically increasing energy counters (RAPL-style files such as
/// energy_uj) and reports the average power since the previous read.
/// A counter that goes backwards has wrapped; that interval is discarded.
class CounterFileProvider final : public PowerProvider {
 public:
  struct Source {
    std::string path;
    std::string id;
    double joules_per_count = 1e-6;
  };

  explicit CounterFileProvider(std::vector<Source> sources) : sources_(std::move(sources)) {
    if (sources_.empty()) throw ConfigError("counter provider needs at least one path");
    prev_.resize(sources_.size());
  }

  static CounterFileProvider from_paths(const std::vector<std::string>& paths, double joules_per_count = 1e-6) {
    std::vector<Source> s;
    for (std::size_t i = 0; i < paths.size(); ++i) s.push_back({paths[i], "counter" + std::to_string(i), joules_per_count});
    return CounterFileProvider(std::move(s));
  }

  void sample(double t, std::vector<PowerSample>& out, std::vector<std::string>& errors) override {
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      const auto& src = sources_[i];
      std::ifstream is(src.path);
      double counter = 0.0;
      if (!is || !(is >> counter)) {
        errors.push_back("cannot read counter " + src.path);
        continue;
      }
      auto& prev = prev_[i];
      if (prev && counter >= prev->second && t > prev->first) {
        out.push_back({t, src.id, (counter - prev->second) * src.joules_per_count / (t - prev->first)});
      } else if (prev && counter < prev->second) {
        errors.push_back("counter " + src.path + " wrapped; interval discarded");
      }
      prev = std::make_pair(t, counter);
    }
  }

  std::string describe() const override { return "counters(" + std::to_string(sources_.size()) + " files)"; }

 private:
  std::vector<Source> sources_;
  std::vector<std::optional<std::pair<double, double>>> prev_;
};

}  // namespace tnbody
