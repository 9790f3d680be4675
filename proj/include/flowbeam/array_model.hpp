#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"
#include "flowbeam/greens.hpp"

namespace flowbeam {

/// Steering vector at focus point y_n: pointwise Green's function values at
/// all microphones.  No cell-measure factor.
inline CVec steering_vector(int n, const MicArray& array, const FocusGrid& grid,
                            const FlowConfig& flow) {
  if (n < 0 || n >= grid.size())
    throw validation_error("steering_vector: focus index " + std::to_string(n) + " out of range");
  CVec g(array.size());
  for (int m = 0; m < array.size(); ++m) g[m] = greens(array.position(m), grid.point(n), flow);
  return g;
}

/// All steering vectors as columns of an M x N matrix.
inline CMat steering_matrix(const MicArray& array, const FocusGrid& grid, const FlowConfig& flow) {
  CMat s(array.size(), grid.size());
  parallel_for(grid.size(), [&](int n) {
    for (int m = 0; m < array.size(); ++m)
      s(m, n) = greens(array.position(m), grid.point(n), flow);
  });
  return s;
}

/// Discrete propagation matrix: column n = steering_vector(n) * |Omega_n|^{1/2}.
/// Carries the geometry/flow provenance needed by the reconstruction layer.
class PropagationMatrix {
 public:
  PropagationMatrix(CMat entries, Vec cell_measures, FlowConfig flow)
      : entries_(std::move(entries)), cell_measures_(std::move(cell_measures)),
        flow_(std::move(flow)) {
    if (entries_.cols() != cell_measures_.size())
      throw validation_error("PropagationMatrix: one cell measure per column required");
  }

  int mics() const { return static_cast<int>(entries_.rows()); }
  int focus_points() const { return static_cast<int>(entries_.cols()); }
  const CMat& entries() const { return entries_; }
  const Vec& cell_measures() const { return cell_measures_; }
  const FlowConfig& flow() const { return flow_; }

 private:
  CMat entries_;
  Vec cell_measures_;
  FlowConfig flow_;
};

inline PropagationMatrix propagation_matrix(const MicArray& array, const FocusGrid& grid,
                                            const FlowConfig& flow) {
  require_disjoint(array, grid);
  CMat entries = steering_matrix(array, grid, flow);
  for (int n = 0; n < grid.size(); ++n) entries.col(n) *= std::sqrt(grid.cell_measure(n));
  return PropagationMatrix(std::move(entries), grid.cell_measures(), flow);
}

/// Cross-spectral matrix with its estimation provenance.  snapshots == 0 marks
/// a synthetic-exact matrix.
struct Csm {
  CMat entries;
  long snapshots = 0;
  double frequency = 0.0;

  int mics() const { return static_cast<int>(entries.rows()); }
};

namespace detail {

// Floating-point contraction can leave mirrored outer-product entries one ulp
// apart; pin the matrix to exact conjugate symmetry.
inline void symmetrize_hermitian(CMat& c) {
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    c(i, i) = Complex(c(i, i).real(), 0.0);
    for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
      const Complex avg = 0.5 * (c(i, j) + std::conj(c(j, i)));
      c(i, j) = avg;
      c(j, i) = std::conj(avg);
    }
  }
}

}  // namespace detail

inline double hermitian_defect(const CMat& k) {
  const double scale = k.norm();
  if (scale == 0.0) return 0.0;
  return (k - k.adjoint()).norm() / scale;
}

inline void require_hermitian(const CMat& k, const char* where, double rel_tol = 1e-12) {
  if (k.rows() != k.cols())
    throw validation_error(std::string(where) + ": matrix must be square");
  if (hermitian_defect(k) > rel_tol)
    throw validation_error(std::string(where) + ": matrix is not Hermitian within tolerance");
}

/// Exact synthetic CSM: C = G diag(q) G^*, accumulated as sum_n q_n g g^* in
/// fixed index order.  Hermitian and PSD by construction.
inline Csm forward_csm(const SourceMap& q, const PropagationMatrix& g) {
  if (q.size() != g.focus_points())
    throw validation_error("forward_csm: source map length must equal focus-point count");
  require_nonnegative(q, "forward_csm");
  const int m = g.mics();
  CMat c = CMat::Zero(m, m);
  for (int n = 0; n < g.focus_points(); ++n) {
    if (q.values[n] == 0.0) continue;
    const CVec col = g.entries().col(n);
    c.noalias() += q.values[n] * (col * col.adjoint());
  }
  detail::symmetrize_hermitian(c);
  return Csm{std::move(c), 0, g.flow().frequency()};
}

/// Rank-one steering (monopole) matrix g(y_n) g(y_n)^*.
inline CMat monopole_matrix(int n, const MicArray& array, const FocusGrid& grid,
                            const FlowConfig& flow) {
  const CVec g = steering_vector(n, array, grid, flow);
  return g * g.adjoint();
}

/// Discrete adjoint of the forward map evaluated at the focus points:
/// component n = Re <K, P_n>_F = Re(g_n^* K g_n), bare steering vectors.
inline Vec adjoint_csm(const CMat& k, const MicArray& array, const FocusGrid& grid,
                       const FlowConfig& flow) {
  require_hermitian(k, "adjoint_csm");
  if (k.rows() != array.size())
    throw validation_error("adjoint_csm: matrix size must equal microphone count");
  const CMat s = steering_matrix(array, grid, flow);
  const CMat ks = k * s;
  Vec out(grid.size());
  for (int n = 0; n < grid.size(); ++n) out[n] = s.col(n).dot(ks.col(n)).real();
  return out;
}

/// vec-linearization of q -> forward_csm(q): M^2 x N matrix with columns
/// vec(|Omega_n| g_n g_n^*) (column-major stacking).
inline CMat csm_linearization(const PropagationMatrix& g) {
  const int m = g.mics();
  CMat b(static_cast<Eigen::Index>(m) * m, g.focus_points());
  for (int n = 0; n < g.focus_points(); ++n) {
    const CVec col = g.entries().col(n);
    const CMat outer = col * col.adjoint();
    b.col(n) = Eigen::Map<const CVec>(outer.data(), outer.size());
  }
  return b;
}

}  // namespace flowbeam
