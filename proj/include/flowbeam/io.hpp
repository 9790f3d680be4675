#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flowbeam/array_model.hpp"
#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"
#include "flowbeam/scenario.hpp"

namespace flowbeam {

namespace detail {

inline std::string expect_header_line(std::istream& in, const std::string& prefix,
                                      const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw io_error(std::string(what) + ": truncated header");
  if (line.rfind(prefix, 0) != 0)
    throw io_error(std::string(what) + ": expected header '" + prefix + "', got '" + line + "'");
  return detail::trim(line.substr(prefix.size()));
}

}  // namespace detail

/// CSM file, format `csm v1`: header lines `# csm v1`, `# M <int>`,
/// `# freq <Hz>`, `# snapshots <int>`, then M^2 lines `i j re im`
/// (0-based, row-major, 17-significant-digit decimals).
inline void write_csm(const Csm& c, std::ostream& out) {
  const int m = c.mics();
  out << "# csm v1\n# M " << m << "\n# freq " << detail::format_double(c.frequency)
      << "\n# snapshots " << c.snapshots << "\n";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      out << i << ' ' << j << ' ' << detail::format_double(c.entries(i, j).real()) << ' '
          << detail::format_double(c.entries(i, j).imag()) << "\n";
}

inline void write_csm_file(const Csm& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("csm: cannot write '" + path + "'");
  write_csm(c, out);
  if (!out) throw io_error("csm: write failed for '" + path + "'");
}

inline Csm read_csm(std::istream& in) {
  detail::expect_header_line(in, "# csm v1", "csm");
  const std::string m_text = detail::expect_header_line(in, "# M ", "csm");
  const std::string freq_text = detail::expect_header_line(in, "# freq ", "csm");
  const std::string snap_text = detail::expect_header_line(in, "# snapshots ", "csm");
  int m = 0;
  long snapshots = 0;
  double freq = 0.0;
  try {
    m = std::stoi(m_text);
    freq = std::stod(freq_text);
    snapshots = std::stol(snap_text);
  } catch (const std::exception&) {
    throw io_error("csm: malformed header fields");
  }
  if (m < 1) throw io_error("csm: M must be >= 1");

  Csm c;
  c.entries = CMat::Zero(m, m);
  c.snapshots = snapshots;
  c.frequency = freq;
  std::vector<bool> seen(static_cast<std::size_t>(m) * m, false);
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    std::istringstream row(line);
    int i, j;
    double re, im;
    if (!(row >> i >> j >> re >> im))
      throw io_error("csm: malformed entry line '" + line + "'");
    if (i < 0 || i >= m || j < 0 || j >= m)
      throw io_error("csm: entry index out of range in '" + line + "'");
    c.entries(i, j) = Complex(re, im);
    seen[static_cast<std::size_t>(i) * m + j] = true;
  }
  for (std::size_t idx = 0; idx < seen.size(); ++idx)
    if (!seen[idx]) throw io_error("csm: missing entries (file truncated?)");

  // On-read invariants: Hermitian within 1e-12 relative, PSD within
  // -1e-10 * ||C|| on the smallest eigenvalue.
  require_hermitian(c.entries, "csm file", 1e-12);
  Eigen::SelfAdjointEigenSolver<CMat> eig(c.entries, Eigen::EigenvaluesOnly);
  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (scale > 0.0 && eig.eigenvalues().minCoeff() < -1e-10 * scale)
    throw validation_error("csm file: matrix is not positive semi-definite within tolerance");
  return c;
}

inline Csm read_csm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("csm: cannot open '" + path + "'");
  return read_csm(in);
}

/// Source-map file, format `sourcemap v1`: header `# sourcemap v1`,
/// `# N <int>`, `# dim <int>`, optionally `# threshold <t>` for masked maps,
/// then lines `n x [y] [z] q`.  Masked maps contain only surviving rows.
inline void write_source_map(const SourceMap& q, const FocusGrid& grid, std::ostream& out,
                             const std::vector<bool>* mask = nullptr, double threshold = 0.0) {
  if (q.size() != grid.size())
    throw validation_error("sourcemap: map length must equal grid size");
  out << "# sourcemap v1\n# N " << grid.size() << "\n# dim " << grid.dim() << "\n";
  if (mask) out << "# threshold " << detail::format_double(threshold) << "\n";
  for (int n = 0; n < grid.size(); ++n) {
    if (mask && !(*mask)[n]) continue;
    out << n << ' ' << detail::format_vec(grid.point(n)) << ' '
        << detail::format_double(q.values[n]) << "\n";
  }
}

inline void write_source_map_file(const SourceMap& q, const FocusGrid& grid,
                                  const std::string& path,
                                  const std::vector<bool>* mask = nullptr,
                                  double threshold = 0.0) {
  std::ofstream out(path);
  if (!out) throw io_error("sourcemap: cannot write '" + path + "'");
  write_source_map(q, grid, out, mask, threshold);
  if (!out) throw io_error("sourcemap: write failed for '" + path + "'");
}

struct SourceMapFile {
  std::vector<int> indices;
  std::vector<Vec> points;
  Vec values;
  int grid_size = 0;
  int dim = 0;
};

inline SourceMapFile read_source_map(std::istream& in) {
  detail::expect_header_line(in, "# sourcemap v1", "sourcemap");
  const std::string n_text = detail::expect_header_line(in, "# N ", "sourcemap");
  const std::string d_text = detail::expect_header_line(in, "# dim ", "sourcemap");
  SourceMapFile f;
  try {
    f.grid_size = std::stoi(n_text);
    f.dim = std::stoi(d_text);
  } catch (const std::exception&) {
    throw io_error("sourcemap: malformed header fields");
  }
  if (f.dim != 2 && f.dim != 3) throw io_error("sourcemap: dim must be 2 or 3");

  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') continue;  // optional threshold header
    std::istringstream row(line);
    int n;
    if (!(row >> n)) throw io_error("sourcemap: malformed row '" + line + "'");
    Vec p(f.dim);
    for (int a = 0; a < f.dim; ++a)
      if (!(row >> p[a])) throw io_error("sourcemap: malformed row '" + line + "'");
    double v;
    if (!(row >> v)) throw io_error("sourcemap: malformed row '" + line + "'");
    f.indices.push_back(n);
    f.points.push_back(std::move(p));
    vals.push_back(v);
  }
  f.values = Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return f;
}

inline SourceMapFile read_source_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("sourcemap: cannot open '" + path + "'");
  return read_source_map(in);
}

}  // namespace flowbeam
