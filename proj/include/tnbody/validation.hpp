#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "tnbody/error.hpp"
#include "tnbody/particles.hpp"

namespace tnbody {

/// Acceptance bands relative to the typical magnitude of each quantity.
inline constexpr double kAccelTolerance = 5e-4;
inline constexpr double kJerkTolerance = 2e-3;

struct ValidationReport {
  std::size_t n = 0;
  double typical_force_magnitude = 0.0;  // mean |a_i| of the golden result
  double typical_jerk_magnitude = 0.0;   // mean |j_i| of the golden result
  double max_rel_accel_err = 0.0;
  double max_rel_jerk_err = 0.0;
  std::size_t worst_particle_index = 0;  // by acceleration error
  std::size_t worst_jerk_particle_index = 0;
  bool pass = false;
};

namespace detail {

inline double mean_norm(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& z) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  return sum / static_cast<double>(x.size());
}

}  // namespace detail

/// Max-norm deviation of `candidate` from `golden`, per component, scaled
/// by the golden mean magnitude. The scale comes from `golden` alone; the
/// arguments are not interchangeable.
///
/// Golden jerks that are all exactly zero (e.g. a cold start) give a zero
/// scale; the jerk error is then 0 if the candidate's jerks are also all
/// zero and +inf otherwise.
inline ValidationReport validate(const AccelJerk& candidate, const AccelJerk& golden) {
  if (candidate.size() != golden.size())
    throw InputError("validate: candidate has " + std::to_string(candidate.size()) + " particles, golden has " +
                     std::to_string(golden.size()));
  if (golden.size() == 0) throw InputError("validate: empty input");
  ValidationReport r;
  r.n = golden.size();
  r.typical_force_magnitude = detail::mean_norm(golden.ax, golden.ay, golden.az);
  r.typical_jerk_magnitude = detail::mean_norm(golden.jx, golden.jy, golden.jz);
  if (!(r.typical_force_magnitude > 0.0))
    throw InputError("validate: degenerate golden result, typical force magnitude is zero");

  const auto c = candidate.arrays();
  const auto g = golden.arrays();
  for (std::size_t i = 0; i < r.n; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double e = std::abs((*c[k])[i] - (*g[k])[i]) / r.typical_force_magnitude;
      if (!(e <= r.max_rel_accel_err)) {
        r.max_rel_accel_err = std::isnan(e) ? std::numeric_limits<double>::infinity() : e;
        r.worst_particle_index = i;
      }
      const double dj = std::abs((*c[k + 3])[i] - (*g[k + 3])[i]);
      double ej = 0.0;
      if (r.typical_jerk_magnitude > 0.0) ej = dj / r.typical_jerk_magnitude;
      else if (dj != 0.0) ej = std::numeric_limits<double>::infinity();
      if (!(ej <= r.max_rel_jerk_err)) {
        r.max_rel_jerk_err = std::isnan(ej) ? std::numeric_limits<double>::infinity() : ej;
        r.worst_jerk_particle_index = i;
      }
    }
  }
  r.pass = r.max_rel_accel_err <= kAccelTolerance && r.max_rel_jerk_err <= kJerkTolerance;
  return r;
}

/// key=value lines, one per field.
inline void write_key_values(std::ostream& os, const ValidationReport& r) {
  char buf[64];
  auto kv = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << k << '=' << buf << '\n';
  };
  os << "n=" << r.n << '\n';
  kv("typical_force_magnitude", r.typical_force_magnitude);
  kv("typical_jerk_magnitude", r.typical_jerk_magnitude);
  kv("max_rel_accel_err", r.max_rel_accel_err);
  kv("max_rel_jerk_err", r.max_rel_jerk_err);
  kv("accel_tolerance", kAccelTolerance);
  kv("jerk_tolerance", kJerkTolerance);
  os << "worst_particle_index=" << r.worst_particle_index << '\n';
  os << "worst_jerk_particle_index=" << r.worst_jerk_particle_index << '\n';
  os << "pass=" << (r.pass ? "true" : "false") << '\n';
}

/// Human-readable summary.
inline void write_text(std::ostream& os, const ValidationReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "validation over %zu particles: %s\n"
                "  acceleration: max error %.3e of typical |a| = %.6g (limit %.1e), worst particle %zu\n"
                "  jerk:         max error %.3e of typical |j| = %.6g (limit %.1e), worst particle %zu\n",
                r.n, r.pass ? "PASS" : "FAIL", r.max_rel_accel_err, r.typical_force_magnitude, kAccelTolerance,
                r.worst_particle_index, r.max_rel_jerk_err, r.typical_jerk_magnitude, kJerkTolerance,
                r.worst_jerk_particle_index);
  os << buf;
}

}  // namespace tnbody
