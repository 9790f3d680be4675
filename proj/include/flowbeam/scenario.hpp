#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"

namespace flowbeam {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_vec(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace detail

/// Complete description of one synthetic experiment: flow, microphone array,
/// focus grid, true sources, and run parameters.  Serialized as sectioned
/// `key = value` text ([flow], [array], [grid], [sources], [run]).
struct Scenario {
  // [flow]
  Vec mach;
  double sound_speed = 343.0;
  double frequency = 8000.0;

  // [array]
  enum class ArrayKind { list, spiral, grid };
  ArrayKind array_kind = ArrayKind::list;
  std::vector<Vec> mics;  // explicit list
  int mic_count = 0;      // generators
  double aperture = 0.0;
  Vec array_center;

  // [grid]
  Vec grid_min, grid_max;
  std::vector<int> grid_counts;

  // [sources]
  struct SourceSpec {
    bool by_index = true;
    int index = 0;
    Vec coords;
    double power = 0.0;
  };
  std::vector<SourceSpec> sources;

  // [run]
  std::uint64_t seed = 1;
  long snapshots = 0;
  double noise_sigma2 = 0.0;
  bool exact = false;

  int dim() const { return static_cast<int>(mach.size()); }

  FlowConfig flow() const { return FlowConfig(mach, sound_speed, frequency); }

  MicArray build_array() const {
    switch (array_kind) {
      case ArrayKind::list:
        return MicArray(mics);
      case ArrayKind::spiral:
        return spiral_array();
      case ArrayKind::grid:
        return grid_array();
    }
    throw validation_error("Scenario: unknown array kind");
  }

  FocusGrid build_grid() const { return FocusGrid::regular(grid_min, grid_max, grid_counts); }

  SourceMap build_source_map(const FocusGrid& grid) const {
    Vec q = Vec::Zero(grid.size());
    for (const auto& s : sources) {
      int n = s.index;
      if (!s.by_index) n = nearest_point(grid, s.coords);
      if (n < 0 || n >= grid.size())
        throw validation_error("Scenario: source index " + std::to_string(n) + " out of range");
      if (!(s.power >= 0.0))
        throw validation_error("Scenario: source powers must be >= 0");
      q[n] += s.power;
    }
    return SourceMap(std::move(q));
  }

 private:
  static int nearest_point(const FocusGrid& grid, const Vec& coords) {
    if (coords.size() != grid.dim())
      throw validation_error("Scenario: source coordinates have wrong dimension");
    int best = 0;
    double best_d = (grid.point(0) - coords).squaredNorm();
    for (int n = 1; n < grid.size(); ++n) {
      const double d = (grid.point(n) - coords).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = n;
      }
    }
    return best;
  }

  MicArray spiral_array() const {
    if (dim() != 3) throw validation_error("Scenario: spiral arrays require dimension 3");
    const Vec center = array_center.size() ? array_center : Vec::Zero(3);
    return vogel_spiral_array(mic_count, aperture, center);
  }

  MicArray grid_array() const {
    const Vec center = array_center.size() ? array_center : Vec::Zero(dim());
    return dim() == 2 ? segment_array(mic_count, aperture, center)
                      : planar_grid_array(mic_count, aperture, center);
  }
};

namespace detail {

struct KeyValue {
  std::string section, key, value;
};

inline Vec parse_vec(const std::string& text, const char* what) {
  std::istringstream in(text);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (!in.eof())
    throw io_error(std::string("scenario: malformed number list for ") + what + ": " + text);
  Vec out(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  return out;
}

inline double parse_double(const std::string& text, const char* what) {
  const Vec v = parse_vec(text, what);
  if (v.size() != 1) throw io_error(std::string("scenario: expected one number for ") + what);
  return v[0];
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline Scenario read_scenario(std::istream& in) {
  Scenario sc;
  sc.array_center = Vec();
  std::string line, section;
  bool have_counts = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw io_error("scenario: malformed section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw io_error("scenario: expected 'key = value' at line " + std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (section == "flow") {
      if (key == "mach") sc.mach = detail::parse_vec(value, "mach");
      else if (key == "sound_speed") sc.sound_speed = detail::parse_double(value, "sound_speed");
      else if (key == "frequency") sc.frequency = detail::parse_double(value, "frequency");
      else throw io_error("scenario: unknown [flow] key '" + key + "'");
    } else if (section == "array") {
      if (key == "type") {
        if (value == "list") sc.array_kind = Scenario::ArrayKind::list;
        else if (value == "spiral") sc.array_kind = Scenario::ArrayKind::spiral;
        else if (value == "grid") sc.array_kind = Scenario::ArrayKind::grid;
        else throw io_error("scenario: unknown array type '" + value + "'");
      } else if (key == "mic") {
        sc.mics.push_back(detail::parse_vec(value, "mic"));
      } else if (key == "count") {
        sc.mic_count = static_cast<int>(detail::parse_double(value, "count"));
      } else if (key == "aperture") {
        sc.aperture = detail::parse_double(value, "aperture");
      } else if (key == "center") {
        sc.array_center = detail::parse_vec(value, "center");
      } else {
        throw io_error("scenario: unknown [array] key '" + key + "'");
      }
    } else if (section == "grid") {
      if (key == "min") sc.grid_min = detail::parse_vec(value, "grid min");
      else if (key == "max") sc.grid_max = detail::parse_vec(value, "grid max");
      else if (key == "count") {
        const Vec v = detail::parse_vec(value, "grid count");
        sc.grid_counts.clear();
        for (Eigen::Index i = 0; i < v.size(); ++i)
          sc.grid_counts.push_back(static_cast<int>(v[i]));
        have_counts = true;
      } else throw io_error("scenario: unknown [grid] key '" + key + "'");
    } else if (section == "sources") {
      Scenario::SourceSpec spec;
      const Vec v = detail::parse_vec(value, "source");
      if (v.size() < 2) throw io_error("scenario: source lines need at least two numbers");
      if (key == "index") {
        if (v.size() != 2) throw io_error("scenario: 'index = n power' expected");
        spec.by_index = true;
        spec.index = static_cast<int>(v[0]);
      } else if (key == "point") {
        spec.by_index = false;
        spec.coords = v.head(v.size() - 1);
      } else {
        throw io_error("scenario: unknown [sources] key '" + key + "'");
      }
      spec.power = v[v.size() - 1];
      sc.sources.push_back(std::move(spec));
    } else if (section == "run") {
      if (key == "seed") {
        try {
          sc.seed = std::stoull(value);
        } catch (const std::exception&) {
          throw io_error("scenario: malformed seed '" + value + "'");
        }
      } else if (key == "snapshots") {
        try {
          sc.snapshots = std::stol(value);
        } catch (const std::exception&) {
          throw io_error("scenario: malformed snapshot count '" + value + "'");
        }
      } else if (key == "noise") sc.noise_sigma2 = detail::parse_double(value, "noise");
      else if (key == "exact") {
        if (value == "true") sc.exact = true;
        else if (value == "false") sc.exact = false;
        else throw io_error("scenario: 'exact' must be true or false");
      } else throw io_error("scenario: unknown [run] key '" + key + "'");
    } else {
      throw io_error("scenario: key outside of any known section at line " +
                     std::to_string(lineno));
    }
  }

  if (sc.mach.size() == 0) throw io_error("scenario: [flow] mach is required");
  if (sc.grid_min.size() == 0 || sc.grid_max.size() == 0 || !have_counts)
    throw io_error("scenario: [grid] needs min, max and count");
  const auto d = sc.mach.size();
  if (sc.grid_min.size() != d || sc.grid_max.size() != d ||
      static_cast<Eigen::Index>(sc.grid_counts.size()) != d)
    throw io_error("scenario: grid entries must match the flow dimension");
  if (sc.array_kind == Scenario::ArrayKind::list) {
    if (sc.mics.empty()) throw io_error("scenario: array type 'list' needs mic lines");
    for (const auto& m : sc.mics)
      if (m.size() != d) throw io_error("scenario: mic coordinates must match the flow dimension");
  }
  if (sc.array_center.size() != 0 && sc.array_center.size() != d)
    throw io_error("scenario: array center must match the flow dimension");
  return sc;
}

inline Scenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("scenario: cannot open '" + path + "'");
  return read_scenario(in);
}

inline void write_scenario(const Scenario& sc, std::ostream& out) {
  using detail::format_double;
  using detail::format_vec;
  out << "[flow]\n";
  out << "mach = " << format_vec(sc.mach) << "\n";
  out << "sound_speed = " << format_double(sc.sound_speed) << "\n";
  out << "frequency = " << format_double(sc.frequency) << "\n";
  out << "\n[array]\n";
  switch (sc.array_kind) {
    case Scenario::ArrayKind::list:
      out << "type = list\n";
      for (const auto& m : sc.mics) out << "mic = " << format_vec(m) << "\n";
      break;
    case Scenario::ArrayKind::spiral:
    case Scenario::ArrayKind::grid:
      out << "type = " << (sc.array_kind == Scenario::ArrayKind::spiral ? "spiral" : "grid")
          << "\n";
      out << "count = " << sc.mic_count << "\n";
      out << "aperture = " << format_double(sc.aperture) << "\n";
      if (sc.array_center.size()) out << "center = " << format_vec(sc.array_center) << "\n";
      break;
  }
  out << "\n[grid]\n";
  out << "min = " << format_vec(sc.grid_min) << "\n";
  out << "max = " << format_vec(sc.grid_max) << "\n";
  out << "count =";
  for (int c : sc.grid_counts) out << ' ' << c;
  out << "\n";
  out << "\n[sources]\n";
  for (const auto& s : sc.sources) {
    if (s.by_index)
      out << "index = " << s.index << ' ' << format_double(s.power) << "\n";
    else
      out << "point = " << format_vec(s.coords) << ' ' << format_double(s.power) << "\n";
  }
  out << "\n[run]\n";
  out << "seed = " << sc.seed << "\n";
  out << "snapshots = " << sc.snapshots << "\n";
  out << "noise = " << format_double(sc.noise_sigma2) << "\n";
  out << "exact = " << (sc.exact ? "true" : "false") << "\n";
}

inline void write_scenario_file(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("scenario: cannot write '" + path + "'");
  write_scenario(sc, out);
  if (!out) throw io_error("scenario: write failed for '" + path + "'");
}

}  // namespace flowbeam
