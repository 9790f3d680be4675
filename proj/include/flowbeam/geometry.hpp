#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "flowbeam/core.hpp"

namespace flowbeam {

/// Microphone positions inside the measurement region.
class MicArray {
 public:
  explicit MicArray(std::vector<Vec> positions) : positions_(std::move(positions)) {
    if (positions_.empty()) throw validation_error("MicArray: need at least one microphone");
    const auto d = positions_.front().size();
    if (d != 2 && d != 3) throw validation_error("MicArray: positions must be 2- or 3-dimensional");
    for (const auto& p : positions_) {
      if (p.size() != d) throw validation_error("MicArray: inconsistent position dimensions");
      if (!p.allFinite()) throw validation_error("MicArray: positions must be finite");
    }
    for (std::size_t i = 0; i < positions_.size(); ++i)
      for (std::size_t j = i + 1; j < positions_.size(); ++j)
        if (positions_[i] == positions_[j])
          throw validation_error("MicArray: positions must be pairwise distinct (duplicate at " +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
  }

  int size() const { return static_cast<int>(positions_.size()); }
  int dim() const { return static_cast<int>(positions_.front().size()); }
  const Vec& position(int m) const { return positions_.at(m); }
  const std::vector<Vec>& positions() const { return positions_; }

 private:
  std::vector<Vec> positions_;
};

/// Discretization of the source region: focus points y_n with positive cell
/// measures |Omega_n| and the bounding box of the covered region.
class FocusGrid {
 public:
  FocusGrid(std::vector<Vec> points, Vec cell_measures)
      : points_(std::move(points)), cell_measures_(std::move(cell_measures)) {
    if (points_.empty()) throw validation_error("FocusGrid: need at least one focus point");
    if (cell_measures_.size() != static_cast<Eigen::Index>(points_.size()))
      throw validation_error("FocusGrid: one cell measure per focus point required");
    const auto d = points_.front().size();
    if (d != 2 && d != 3) throw validation_error("FocusGrid: points must be 2- or 3-dimensional");
    box_min_ = Vec::Constant(d, std::numeric_limits<double>::infinity());
    box_max_ = Vec::Constant(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : points_) {
      if (p.size() != d) throw validation_error("FocusGrid: inconsistent point dimensions");
      if (!p.allFinite()) throw validation_error("FocusGrid: points must be finite");
      box_min_ = box_min_.cwiseMin(p);
      box_max_ = box_max_.cwiseMax(p);
    }
    for (Eigen::Index n = 0; n < cell_measures_.size(); ++n)
      if (!(cell_measures_[n] > 0.0) || !std::isfinite(cell_measures_[n]))
        throw validation_error("FocusGrid: cell measures must be positive");
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j)
        if (points_[i] == points_[j])
          throw validation_error("FocusGrid: focus points must be pairwise distinct");
  }

  /// Regular axis-aligned lattice over the box [box_min, box_max]: counts[a]
  /// midpoint nodes per axis, |Omega_n| = prod of the per-axis spacings.
  /// First axis runs fastest.
  static FocusGrid regular(const Vec& box_min, const Vec& box_max,
                           const std::vector<int>& counts) {
    const auto d = box_min.size();
    if (box_max.size() != d || static_cast<Eigen::Index>(counts.size()) != d)
      throw validation_error("FocusGrid::regular: box and counts dimensions must agree");
    long total = 1;
    Vec spacing(d);
    for (Eigen::Index a = 0; a < d; ++a) {
      if (counts[a] < 1) throw validation_error("FocusGrid::regular: counts must be >= 1");
      if (!(box_max[a] > box_min[a]))
        throw validation_error("FocusGrid::regular: box must have positive extent per axis");
      spacing[a] = (box_max[a] - box_min[a]) / counts[a];
      total *= counts[a];
    }
    const double measure = spacing.prod();
    std::vector<Vec> pts;
    pts.reserve(total);
    std::vector<int> idx(d, 0);
    for (long n = 0; n < total; ++n) {
      Vec p(d);
      for (Eigen::Index a = 0; a < d; ++a) p[a] = box_min[a] + (idx[a] + 0.5) * spacing[a];
      pts.push_back(std::move(p));
      for (Eigen::Index a = 0; a < d; ++a) {
        if (++idx[a] < counts[a]) break;
        idx[a] = 0;
      }
    }
    FocusGrid grid(std::move(pts), Vec::Constant(total, measure));
    grid.box_min_ = box_min;  // keep the user box, not just the node hull
    grid.box_max_ = box_max;
    return grid;
  }

  int size() const { return static_cast<int>(points_.size()); }
  int dim() const { return static_cast<int>(points_.front().size()); }
  const Vec& point(int n) const { return points_.at(n); }
  const std::vector<Vec>& points() const { return points_; }
  double cell_measure(int n) const { return cell_measures_[n]; }
  const Vec& cell_measures() const { return cell_measures_; }
  const Vec& box_min() const { return box_min_; }
  const Vec& box_max() const { return box_max_; }

 private:
  std::vector<Vec> points_;
  Vec cell_measures_;
  Vec box_min_, box_max_;
};

/// Source powers q(y_n) attached to a focus grid.  Raw beamformer maps may
/// carry negative entries; operations that require q >= 0 check it themselves.
struct SourceMap {
  Vec values;

  SourceMap() = default;
  explicit SourceMap(Vec v) : values(std::move(v)) {}

  int size() const { return static_cast<int>(values.size()); }
};

inline void require_nonnegative(const SourceMap& q, const char* where) {
  if (!q.values.allFinite() || (q.values.array() < 0.0).any())
    throw validation_error(std::string(where) + ": source powers must be finite and >= 0");
}

/// Vogel spiral of `count` microphones with the given aperture (diameter) in
/// the plane normal to the third axis through `center`.
inline MicArray vogel_spiral_array(int count, double aperture, const Vec& center) {
  if (center.size() != 3) throw validation_error("vogel_spiral_array: center must be 3-dimensional");
  if (count < 1 || !(aperture > 0.0))
    throw validation_error("vogel_spiral_array: need count >= 1 and aperture > 0");
  const double golden = pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double r = 0.5 * aperture * std::sqrt((i + 0.5) / count);
    const double theta = golden * i;
    Vec p(3);
    p << center[0] + r * std::cos(theta), center[1] + r * std::sin(theta), center[2];
    pts.push_back(std::move(p));
  }
  return MicArray(std::move(pts));
}

/// Equispaced microphones along the first axis (2D).
inline MicArray segment_array(int count, double aperture, const Vec& center) {
  if (center.size() != 2) throw validation_error("segment_array: center must be 2-dimensional");
  if (count < 1 || !(aperture > 0.0))
    throw validation_error("segment_array: need count >= 1 and aperture > 0");
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = count > 1 ? static_cast<double>(i) / (count - 1) - 0.5 : 0.0;
    Vec p(2);
    p << center[0] + t * aperture, center[1];
    pts.push_back(std::move(p));
  }
  return MicArray(std::move(pts));
}

/// First `count` nodes of a square lattice with the given side length in the
/// plane normal to the third axis (3D).
inline MicArray planar_grid_array(int count, double aperture, const Vec& center) {
  if (center.size() != 3) throw validation_error("planar_grid_array: center must be 3-dimensional");
  if (count < 1 || !(aperture > 0.0))
    throw validation_error("planar_grid_array: need count >= 1 and aperture > 0");
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  std::vector<Vec> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int ix = i % side, iy = i / side;
    const double sx = side > 1 ? static_cast<double>(ix) / (side - 1) - 0.5 : 0.0;
    const double sy = side > 1 ? static_cast<double>(iy) / (side - 1) - 0.5 : 0.0;
    Vec p(3);
    p << center[0] + sx * aperture, center[1] + sy * aperture, center[2];
    pts.push_back(std::move(p));
  }
  return MicArray(std::move(pts));
}

/// Measurement and source regions must not overlap: every microphone has to
/// lie outside the grid's bounding box.
inline void require_disjoint(const MicArray& array, const FocusGrid& grid) {
  if (array.dim() != grid.dim())
    throw validation_error("geometry: microphone and grid dimensions differ");
  for (int m = 0; m < array.size(); ++m) {
    const Vec& x = array.position(m);
    bool inside = true;
    for (int a = 0; a < array.dim(); ++a)
      if (x[a] < grid.box_min()[a] || x[a] > grid.box_max()[a]) {
        inside = false;
        break;
      }
    if (inside)
      throw validation_error("geometry: microphone " + std::to_string(m) +
                             " lies inside the focus-grid bounding box");
  }
}

}  // namespace flowbeam
