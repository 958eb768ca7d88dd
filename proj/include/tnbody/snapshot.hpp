#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "tnbody/error.hpp"
#include "tnbody/particles.hpp"

namespace tnbody {

// Text snapshot: a line with n, then n lines "mass x y z vx vy vz".
// Values are written with 17 significant digits so doubles round-trip.

inline void write_snapshot(std::ostream& os, const ParticleSystem& s) {
  os << s.size() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double row[7] = {s.mass[i], s.x[i], s.y[i], s.z[i], s.vx[i], s.vy[i], s.vz[i]};
    for (int k = 0; k < 7; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      os << buf << (k == 6 ? '\n' : ' ');
    }
  }
}

inline ParticleSystem read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("snapshot: missing header line");
  std::size_t n = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> n)) throw InputError("snapshot: header must be the particle count");
  }
  ParticleSystem s = ParticleSystem::with_size(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line))
      throw InputError("snapshot: expected " + std::to_string(n) + " particle lines, got " + std::to_string(i));
    const char* p = line.data();
    const char* end = line.data() + line.size();
    double row[7];
    for (int k = 0; k < 7; ++k) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      auto [q, ec] = std::from_chars(p, end, row[k]);
      if (ec != std::errc{})
        throw InputError("snapshot: line " + std::to_string(i + 2) + " needs 7 numeric fields");
      p = q;
    }
    s.mass[i] = row[0];
    s.x[i] = row[1];
    s.y[i] = row[2];
    s.z[i] = row[3];
    s.vx[i] = row[4];
    s.vy[i] = row[5];
    s.vz[i] = row[6];
  }
  s.validate();
  return s;
}

inline void save_snapshot(const std::string& path, const ParticleSystem& s) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open snapshot for writing: " + path);
  write_snapshot(os, s);
  if (!os) throw InputError("failed writing snapshot: " + path);
}

inline ParticleSystem load_snapshot(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open snapshot: " + path);
  return read_snapshot(is);
}

}  // namespace tnbody
