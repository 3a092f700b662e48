#pragma once

// CSV serialization. All floats are rendered with 17 significant digits so
// artifacts round-trip doubles exactly and reruns are byte-comparable.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tautband/extrema.hpp"
#include "tautband/path.hpp"
#include "tautband/renewal.hpp"
#include "tautband/taut_string.hpp"

namespace tautband {

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string path_to_csv(const PiecewiseLinearPath& p) {
  std::string out = "t,w\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += format_g17(p.times[i]);
    out += ',';
    out += format_g17(p.values[i]);
    out += '\n';
  }
  return out;
}

inline PiecewiseLinearPath path_from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,w", 0) != 0)
    throw std::invalid_argument("path CSV: missing t,w header");
  std::vector<double> t, v;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("path CSV: malformed row: " + line);
    t.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  return PiecewiseLinearPath(std::move(t), std::move(v));
}

inline std::string result_to_csv(const TautStringResult& r) {
  const double half = r.width / 2.0;
  std::vector<char> side(r.path.size(), '-');
  for (const Knot& k : r.knots)
    side[k.index] = k.side == KnotSide::upper ? 'U' : 'L';
  std::string out = "t,w,string,lower,upper,knot_side\n";
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    out += format_g17(r.path.times[i]);
    out += ',';
    out += format_g17(r.path.values[i]);
    out += ',';
    out += format_g17(r.string.values[i]);
    out += ',';
    out += format_g17(r.path.values[i] - half);
    out += ',';
    out += format_g17(r.path.values[i] + half);
    out += ',';
    out += side[i];
    out += '\n';
  }
  return out;
}

inline std::string decomposition_to_csv(const HExtremaDecomposition& d) {
  std::string out = "n,t_n,tbar_n\n";
  for (std::size_t n = 0; n < d.t.size(); ++n) {
    out += std::to_string(n);
    out += ',';
    out += format_g17(d.t[n]);
    out += ',';
    out += format_g17(d.t_bar[n]);
    out += '\n';
  }
  return out;
}

inline std::string samples_to_csv(const std::vector<RenewalSample>& samples,
                                  const std::vector<PenaltySpec>& penalties) {
  std::string out = "i,tau";
  for (const auto& c : penalties) out += ",energy_" + c.name();
  out += '\n';
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_g17(samples[i].tau);
    for (const auto& c : penalties) {
      out += ',';
      out += format_g17(samples[i].energy_for(c));
    }
    out += '\n';
  }
  return out;
}

inline std::string statistics_to_csv(const std::vector<double>& stats) {
  std::string out = "replicate,statistic\n";
  for (std::size_t i = 0; i < stats.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += format_g17(stats[i]);
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace tautband
