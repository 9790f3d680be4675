#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "flowbeam/array_model.hpp"
#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"

namespace flowbeam {

/// Discrete point-spread function Psi_{nn'} = <P_n, P_n'>_F / ||P_n'||_F^2
/// = |<g_n', g_n>|^2 / |g_n'|^4.  Diagonal is exactly one.
struct PsfMatrix {
  Mat entries;

  int size() const { return static_cast<int>(entries.rows()); }
};

enum class Penalty { quadratic, l1 };

struct ReconConfig {
  double alpha = 0.0;           // regularization weight
  Penalty penalty = Penalty::quadratic;
  int max_iter = 20000;
  double tol = 1e-12;           // relative residual (GS) / relative objective decrease (PG)
  bool nonneg = true;

  void validate() const {
    if (!(alpha >= 0.0)) throw validation_error("ReconConfig: alpha must be >= 0");
    if (max_iter < 1) throw validation_error("ReconConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw validation_error("ReconConfig: tol must be > 0");
  }
};

enum class SolveStatus { converged, stagnant, max_iter };

/// Per-solve diagnostics; trace holds the GS relative residual or the PG
/// objective after each sweep/accepted step.
struct SolveInfo {
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
  double final_value = 0.0;
  std::vector<double> trace;
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::stagnant: return "converged-stagnant";
    default: return "max-iter";
  }
}

/// Conventional beamforming map I(y_n) = Re(g_n^* C g_n) / |g_n|^4.
/// Negative values (possible for noisy data) are preserved.
inline SourceMap beamform(const Csm& c, const MicArray& array, const FocusGrid& grid,
                          const FlowConfig& flow) {
  require_hermitian(c.entries, "beamform");
  if (c.mics() != array.size())
    throw validation_error("beamform: CSM size must equal microphone count");
  const CMat s = steering_matrix(array, grid, flow);
  const CMat cs = c.entries * s;
  Vec map(grid.size());
  for (int n = 0; n < grid.size(); ++n) {
    const double norm2 = s.col(n).squaredNorm();
    map[n] = s.col(n).dot(cs.col(n)).real() / (norm2 * norm2);
  }
  return SourceMap(std::move(map));
}

/// Squared Frobenius norms of the monopole matrices, ||P_n||_F^2 = |g_n|^4.
inline Vec monopole_norms(const MicArray& array, const FocusGrid& grid, const FlowConfig& flow) {
  const CMat s = steering_matrix(array, grid, flow);
  Vec out(grid.size());
  for (int n = 0; n < grid.size(); ++n) {
    const double norm2 = s.col(n).squaredNorm();
    out[n] = norm2 * norm2;
  }
  return out;
}

inline PsfMatrix psf_matrix(const MicArray& array, const FocusGrid& grid,
                            const FlowConfig& flow) {
  const CMat s = steering_matrix(array, grid, flow);
  const CMat gram = s.adjoint() * s;  // gram(a, b) = <g_b, g_a> = g_a^* g_b
  const int n = grid.size();
  Mat psi(n, n);
  for (int col = 0; col < n; ++col) {
    const double denom = std::norm(gram(col, col));
    for (int row = 0; row < n; ++row) psi(row, col) = std::norm(gram(row, col)) / denom;
  }
  return PsfMatrix{std::move(psi)};
}

/// Midpoint discretization of the DAMAS integral equation, consistent with the
/// synthetic forward model: beamform(forward_csm(q)) == B q with
/// B_{nn'} = |Omega_n'| |<g_n', g_n>|^2 / |g_n|^4.
inline Mat damas_system_matrix(const MicArray& array, const FocusGrid& grid,
                               const FlowConfig& flow) {
  const CMat s = steering_matrix(array, grid, flow);
  const CMat gram = s.adjoint() * s;
  const int n = grid.size();
  Mat b(n, n);
  for (int row = 0; row < n; ++row) {
    const double denom = std::norm(gram(row, row));
    for (int col = 0; col < n; ++col)
      b(row, col) = grid.cell_measure(col) * std::norm(gram(row, col)) / denom;
  }
  return b;
}

/// Gauss-Seidel sweeps with in-sweep clipping for Psi q = I, q >= 0.
/// Sweeps run in grid-index order; stops on relative residual <= tol,
/// stagnation, or max_iter sweeps.
inline SourceMap damas_gauss_seidel(const SourceMap& dirty, const Mat& psi,
                                    const ReconConfig& cfg, SolveInfo* info = nullptr) {
  cfg.validate();
  const int n = static_cast<int>(psi.rows());
  if (psi.cols() != n) throw validation_error("damas_gauss_seidel: system matrix must be square");
  if (dirty.size() != n)
    throw validation_error("damas_gauss_seidel: map length must equal system size");
  if (!dirty.values.allFinite() || !psi.allFinite())
    throw validation_error("damas_gauss_seidel: inputs must be finite");

  const Vec& rhs = dirty.values;
  const double rhs_norm = rhs.norm();
  Vec q = Vec::Zero(n);
  SolveInfo local;
  SolveInfo& out = info ? *info : local;
  out.trace.clear();

  int sweep = 0;
  out.status = SolveStatus::max_iter;
  for (; sweep < cfg.max_iter; ++sweep) {
    double max_rel_change = 0.0;
    for (int i = 0; i < n; ++i) {
      const double off = psi.row(i).dot(q) - psi(i, i) * q[i];
      const double next = std::max(0.0, (rhs[i] - off) / psi(i, i));
      const double scale = std::max({std::abs(next), std::abs(q[i]), 1e-300});
      max_rel_change = std::max(max_rel_change, std::abs(next - q[i]) / scale);
      q[i] = next;
    }
    const double resid = (psi * q - rhs).norm();
    const double rel = rhs_norm > 0.0 ? resid / rhs_norm : resid;
    out.trace.push_back(rel);
    if (rel <= cfg.tol) {
      out.status = SolveStatus::converged;
      ++sweep;
      break;
    }
    if (max_rel_change <= 1e-15) {
      out.status = SolveStatus::stagnant;
      ++sweep;
      break;
    }
  }
  out.iterations = sweep;
  out.final_value = out.trace.empty() ? 0.0 : out.trace.back();
  return SourceMap(std::move(q));
}

inline SourceMap damas_gauss_seidel(const SourceMap& dirty, const PsfMatrix& psi,
                                    const ReconConfig& cfg, SolveInfo* info = nullptr) {
  return damas_gauss_seidel(dirty, psi.entries, cfg, info);
}

/// Matrix of the composed map q -> adjoint_csm(forward_csm(q)):
/// A_{nn'} = |Omega_n'| |<g_n', g_n>|^2, assembled via the steering Gram
/// matrix.  Symmetric PSD for uniform cell measures.
inline Mat normal_matrix(const PropagationMatrix& g) {
  const CMat gram = g.entries().adjoint() * g.entries();
  Mat a = gram.cwiseAbs2();
  // |gram|^2_{nn'} = Omega_n Omega_n' |<g_n', g_n>|^2; strip the row factor.
  for (int row = 0; row < a.rows(); ++row) a.row(row) /= g.cell_measures()[row];
  return a;
}

enum class DamasRhsForm { adjoint, rescaled_beamformer };

/// Right-hand side of the normal equation, either directly as adjoint values
/// or by rescaling the beamformer map with ||P_n||_F^2.  Both routes evaluate
/// the same quantity.
inline Vec damas_rhs(const Csm& c, const MicArray& array, const FocusGrid& grid,
                     const FlowConfig& flow, DamasRhsForm form) {
  if (form == DamasRhsForm::adjoint) return adjoint_csm(c.entries, array, grid, flow);
  const SourceMap bf = beamform(c, array, grid, flow);
  return bf.values.cwiseProduct(monopole_norms(array, grid, flow));
}

namespace detail {

// Monotone projected gradient with Barzilai-Borwein step proposals and an
// Armijo backtracking line search along the projection arc.  objective and
// gradient are evaluated at the same points; the objective never increases
// across accepted steps.
template <class Objective, class Gradient>
SourceMap projected_gradient(Vec q, Objective&& objective, Gradient&& gradient,
                             const ReconConfig& cfg, SolveInfo* info) {
  SolveInfo local;
  SolveInfo& out = info ? *info : local;
  out.trace.clear();

  const auto project = [&](Vec v) {
    if (cfg.nonneg) v = v.cwiseMax(0.0);
    return v;
  };

  q = project(std::move(q));
  double f = objective(q);
  Vec grad = gradient(q);
  out.trace.push_back(f);

  double step = 1.0 / std::max(grad.template lpNorm<Eigen::Infinity>(), 1e-30);
  constexpr double armijo = 1e-4;

  int iter = 0;
  out.status = SolveStatus::max_iter;
  for (; iter < cfg.max_iter; ++iter) {
    Vec candidate;
    double f_next = 0.0;
    bool accepted = false;
    for (int halving = 0; halving < 64; ++halving) {
      candidate = project(q - step * grad);
      const double decrease = grad.dot(candidate - q);  // <= 0 along the arc
      f_next = objective(candidate);
      if (f_next <= f + armijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || (candidate - q).isZero(0.0)) {
      out.status = SolveStatus::stagnant;
      break;
    }

    Vec grad_next = gradient(candidate);
    const Vec dq = candidate - q;
    const Vec dg = grad_next - grad;
    const double dq_dg = dq.dot(dg);
    if (dq_dg > 0.0) step = std::clamp(dq.squaredNorm() / dq_dg, 1e-18, 1e18);

    q = std::move(candidate);
    grad = std::move(grad_next);
    const double rel_decrease = (f - f_next) / std::max(f, 1e-300);
    f = f_next;
    out.trace.push_back(f);
    if (rel_decrease < cfg.tol) {
      out.status = SolveStatus::converged;
      ++iter;
      break;
    }
  }
  out.iterations = iter;
  out.final_value = f;
  return SourceMap(std::move(q));
}

inline void add_penalty(const Vec& q, const ReconConfig& cfg, double& f) {
  if (cfg.alpha == 0.0) return;
  f += cfg.penalty == Penalty::quadratic ? cfg.alpha * q.squaredNorm()
                                         : cfg.alpha * q.sum();
}

inline void add_penalty_gradient(const Vec& q, const ReconConfig& cfg, Vec& grad) {
  if (cfg.alpha == 0.0) return;
  if (cfg.penalty == Penalty::quadratic)
    grad += 2.0 * cfg.alpha * q;
  else
    grad.array() += cfg.alpha;
}

inline void check_penalty(const ReconConfig& cfg) {
  cfg.validate();
  if (cfg.penalty == Penalty::l1 && !cfg.nonneg)
    throw validation_error("recon: the l1 penalty is implemented as a linear term and "
                           "requires the non-negativity constraint");
}

}  // namespace detail

/// Gradient of ||forward_csm(q) - C||_F^2 at q: 2 |Omega_n| Re(g_n^* R g_n)
/// with R the residual.  Exposed for verification.
inline Vec cmf_data_gradient(const Vec& q, const Csm& c, const PropagationMatrix& g) {
  const CVec qc = q.cast<Complex>();
  const CMat residual = g.entries() * qc.asDiagonal() * g.entries().adjoint() - c.entries;
  const CMat rg = residual * g.entries();
  Vec grad(g.focus_points());
  for (int n = 0; n < g.focus_points(); ++n) grad[n] = 2.0 * g.entries().col(n).dot(rg.col(n)).real();
  return grad;
}

/// Covariance matrix fitting: projected-gradient minimization of
/// ||G diag(q) G^* - C||_F^2 + alpha R(q) over q >= 0.
inline SourceMap cmf_solve(const Csm& c, const PropagationMatrix& g, const ReconConfig& cfg,
                           SolveInfo* info = nullptr) {
  detail::check_penalty(cfg);
  require_hermitian(c.entries, "cmf_solve");
  if (c.mics() != g.mics())
    throw validation_error("cmf_solve: CSM size must equal microphone count");

  const auto objective = [&](const Vec& q) {
    const CVec qc = q.cast<Complex>();
    const CMat residual = g.entries() * qc.asDiagonal() * g.entries().adjoint() - c.entries;
    double f = residual.squaredNorm();
    detail::add_penalty(q, cfg, f);
    return f;
  };
  const auto gradient = [&](const Vec& q) {
    Vec grad = cmf_data_gradient(q, c, g);
    detail::add_penalty_gradient(q, cfg, grad);
    return grad;
  };
  return detail::projected_gradient(Vec::Zero(g.focus_points()), objective, gradient, cfg, info);
}

/// Regularized DAMAS / normal-equation solve: minimizes
/// ||A q - b||^2 + alpha R(q) over q >= 0 with the same projected-gradient
/// engine.  A is typically normal_matrix(G) with b from damas_rhs, or a PSF
/// system (Psi, I).
inline SourceMap damas_tikhonov(const Vec& b, const Mat& a, const ReconConfig& cfg,
                                SolveInfo* info = nullptr) {
  detail::check_penalty(cfg);
  if (a.rows() != b.size())
    throw validation_error("damas_tikhonov: matrix rows must equal rhs length");

  const auto objective = [&](const Vec& q) {
    double f = (a * q - b).squaredNorm();
    detail::add_penalty(q, cfg, f);
    return f;
  };
  const auto gradient = [&](const Vec& q) {
    Vec grad = 2.0 * (a.transpose() * (a * q - b));
    detail::add_penalty_gradient(q, cfg, grad);
    return grad;
  };
  return detail::projected_gradient(Vec::Zero(a.cols()), objective, gradient, cfg, info);
}

/// Map normalized to [0, 1] plus the mask of entries at or above threshold.
/// A non-positive map normalizes to zeros with an all-false mask.
struct NormalizedMap {
  SourceMap map;
  std::vector<bool> mask;
};

inline NormalizedMap normalize_map(const SourceMap& q, double threshold = 0.1) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw validation_error("normalize_map: threshold must lie in [0, 1]");
  NormalizedMap out;
  const double peak = q.size() > 0 ? q.values.maxCoeff() : 0.0;
  if (!(peak > 0.0)) {
    out.map = SourceMap(Vec::Zero(q.size()));
    out.mask.assign(q.size(), false);
    return out;
  }
  out.map = SourceMap(q.values / peak);
  out.mask.resize(q.size());
  for (int n = 0; n < q.size(); ++n) out.mask[n] = out.map.values[n] >= threshold;
  return out;
}

}  // namespace flowbeam
