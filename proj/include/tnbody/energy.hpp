#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "tnbody/error.hpp"
#include "tnbody/power.hpp"

namespace tnbody {

struct EnergyBreakdown {
  std::map<std::string, double> per_source_J;
  /// Sum over sources, excluding whole-server readings.
  double total_J = 0.0;
};

/// Left-point rectangle rule: each reading holds from its timestamp until
/// the next reading of the same source (the last one holds to the window
/// end), and the step function is integrated over [start, end].
///
/// Every source needs a reading at or before `start` and at least two
/// readings contributing to the window; otherwise the window is outside the
/// trace or there is too little data.
inline EnergyBreakdown integrate_energy(const PowerTrace& trace, double start, double end) {
  if (!(end >= start)) throw InputError("integrate_energy: window end precedes start");
  const auto sources = trace.sources();
  if (sources.empty()) throw InputError("integrate_energy: trace has no samples");
  EnergyBreakdown out;
  for (const auto& id : sources) {
    const auto rows = trace.for_source(id);
    if (rows.front().timestamp_s > start)
      throw InputError("integrate_energy: window starts before the first sample of " + id);
    double joules = 0.0;
    std::size_t contributing = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double lo = std::max(rows[k].timestamp_s, start);
      const double hi = k + 1 < rows.size() ? std::min(rows[k + 1].timestamp_s, end) : end;
      const bool covers_start = rows[k].timestamp_s <= start && (k + 1 == rows.size() || rows[k + 1].timestamp_s > start);
      const bool inside = rows[k].timestamp_s > start && rows[k].timestamp_s <= end;
      if (covers_start || inside) ++contributing;
      if (hi > lo) joules += rows[k].watts * (hi - lo);
    }
    if (contributing < 2)
      throw InputError("integrate_energy: fewer than 2 samples in window for " + id);
    out.per_source_J[id] = joules;
    if (!is_whole_server_source(id)) out.total_J += joules;
  }
  return out;
}

inline EnergyBreakdown integrate_energy(const PowerTrace& trace) {
  if (!trace.sim_start || !trace.sim_end) throw InputError("integrate_energy: trace has no simulation markers");
  return integrate_energy(trace, *trace.sim_start, *trace.sim_end);
}

}  // namespace tnbody
