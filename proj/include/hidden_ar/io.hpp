#ifndef HIDDEN_AR_IO_HPP
#define HIDDEN_AR_IO_HPP

/** @file
 * CSV export of trajectories, filter tracks, estimator paths and adaptive
 * traces, and a reader for observation series. Numbers are written as the
 * shortest decimal that round-trips.
 */

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hidden_ar/adaptive.hpp"
#include "hidden_ar/error.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/onestep.hpp"
#include "hidden_ar/simulator.hpp"

namespace hidden_ar::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline void write_trajectory(std::ostream& os, const Trajectory& tr) {
  os << (tr.has_hidden() ? "t,x,y\n" : "t,x\n");
  for (std::size_t t = 0; t < tr.x.size(); ++t) {
    os << t << ',' << format_double(tr.x[t]);
    if (tr.has_hidden()) os << ',' << format_double(tr.y[t]);
    os << '\n';
  }
}

/// Columns t, x, m, gamma, innovation, then dm_<coord> for each derivative track.
inline void write_filter_trace(std::ostream& os, std::span<const double> x, const FilterTrace& tr) {
  os << "t,x,m,gamma,innovation";
  for (const auto& [c, _] : tr.dm) os << ",dm_" << name(c);
  os << '\n';
  for (std::size_t t = 0; t < tr.m.size(); ++t) {
    os << t << ',' << format_double(x[t]) << ',' << format_double(tr.m[t]) << ',' << format_double(tr.gamma_at(t))
       << ',';
    if (t > 0) os << format_double(tr.innovations[t - 1]);
    for (const auto& [c, dm] : tr.dm) os << ',' << format_double(dm[t]);
    os << '\n';
  }
}

/// Columns t, theta_1 [, theta_2], clipped.
inline void write_estimator_trace(std::ostream& os, const EstimatorTrace& tr) {
  os << 't';
  for (std::size_t i = 0; i < tr.dim(); ++i) os << ",theta_" << i + 1;
  os << ",clipped\n";
  for (std::size_t t = tr.first_t(); t <= tr.horizon; ++t) {
    os << t;
    for (std::size_t i = 0; i < tr.dim(); ++i) os << ',' << format_double(tr.value(t, i));
    os << ',' << (tr.clipped_at(t) ? 1 : 0) << '\n';
  }
}

/// Columns t, x, m_star, theta_star_<coord>..., oracle_m, sq_error. The last
/// two are empty when no oracle track is attached.
inline void write_adaptive_trace(std::ostream& os, std::span<const double> x, const AdaptiveTrace& tr) {
  const bool oracle = !tr.oracle_m.empty();
  os << "t,x,m_star";
  for (Coord c : tr.theta_track.coords) os << ",theta_star_" << name(c);
  os << ",oracle_m,sq_error\n";
  for (std::size_t t = tr.first_t(); t <= tr.horizon(); ++t) {
    os << t << ',' << format_double(x[t]) << ',' << format_double(tr.at(t));
    const ModelParams p = tr.theta_track.params_at(t);
    for (Coord c : tr.theta_track.coords) os << ',' << format_double(p.get(c));
    if (oracle) {
      const double d = tr.at(t) - tr.oracle_m[t];
      os << ',' << format_double(tr.oracle_m[t]) << ',' << format_double(d * d);
    } else {
      os << ",,";
    }
    os << '\n';
  }
}

/// Reads the `x` column of a CSV with a header row (or a bare single column).
inline std::vector<double> read_series(std::istream& is, const std::string& column = "x") {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::series_too_short, "empty input");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::size_t col = 0;
  bool has_header = false;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == column) {
      col = i;
      has_header = true;
    }
  auto parse = [](const std::string& s, std::size_t lineno) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r' || e[-1] == '\t')) --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e)
      throw Error(Errc::invalid_config, "cannot parse number '" + s + "' on line " + std::to_string(lineno));
    return v;
  };
  std::vector<double> out;
  std::size_t lineno = 1;
  if (!has_header) {
    if (header.size() != 1)
      throw Error(Errc::invalid_config, "input has no '" + column + "' column");
    out.push_back(parse(header[0], lineno));
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= col; ++i)
      if (!std::getline(ss, cell, ','))
        throw Error(Errc::invalid_config, "line " + std::to_string(lineno) + " has too few columns");
    out.push_back(parse(cell, lineno));
  }
  return out;
}

inline std::vector<double> read_series_file(const std::string& path, const std::string& column = "x") {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return read_series(in, column);
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  return out;
}

}  // namespace hidden_ar::io

#endif  // HIDDEN_AR_IO_HPP
