#pragma once

// CSV writers for grid snapshots and number formatting shared by the
// experiment runner.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "grid.hpp"

namespace twogrid {

inline std::string format_sci(double v, int digits = 6) {
  if (std::isinf(v)) return "Inf";
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline std::string format_fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string format_g(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// i,j,x,y,value over every stored node.
inline void write_snapshot_csv(std::ostream& os, const GridFunction& u) {
  const Grid2D& g = u.grid();
  os << "i,j,x,y,value\n";
  char buf[160];
  for (int i = 0; i < g.points_x(); ++i)
    for (int j = 0; j < g.points_y(); ++j) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%.10g,%.12e\n", i, j, g.x(i), g.y(j), u(i, j));
      os << buf;
    }
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

} // namespace twogrid
