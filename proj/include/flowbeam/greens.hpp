#pragma once

#include <cmath>
#include <complex>

#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"
#include "flowbeam/hankel.hpp"

namespace flowbeam {

// Mach-scaled distances below this are treated as a coincident source/receiver
// pair.  Valid scenarios keep microphones away from the source region, so the
// guard never fires there.
inline constexpr double singular_distance = 1e-9;

/// Flow-anisotropic norm sqrt((x.m)^2 + beta^2 |x|^2).
inline double mach_norm(const Vec& x, const FlowConfig& flow) {
  require_dim(x, flow, "mach_norm");
  const double along = x.dot(flow.mach());
  return std::sqrt(along * along + flow.beta_sq() * x.squaredNorm());
}

namespace detail {

inline void require_separated(double rm, const char* where) {
  if (rm < singular_distance)
    throw validation_error(std::string(where) + ": source and evaluation point coincide");
}

// Zero-flow free-field kernel at wavenumber k.
inline Complex greens0(const Vec& x, const Vec& y, double k, int d) {
  const double r = (x - y).norm();
  require_separated(r, "greens0");
  if (d == 3) return std::polar(1.0 / (4.0 * pi * r), k * r);
  return Complex(0.0, 0.25) * hankel_h1_0(k * r);
}

}  // namespace detail

/// Free-field Green's function of the convected Helmholtz equation, d = 3:
/// exp((ik/beta^2)(-(x-y).m + |x-y|_m)) / (4 pi |x-y|_m).
inline Complex greens_3d(const Vec& x, const Vec& y, const FlowConfig& flow) {
  if (flow.dim() != 3) throw validation_error("greens_3d: flow must be 3-dimensional");
  require_dim(x, flow, "greens_3d");
  require_dim(y, flow, "greens_3d");
  const Vec delta = x - y;
  const double rm = mach_norm(delta, flow);
  detail::require_separated(rm, "greens_3d");
  const double phase = flow.wavenumber() / flow.beta_sq() * (-delta.dot(flow.mach()) + rm);
  return std::polar(1.0 / (4.0 * pi * rm), phase);
}

/// Free-field Green's function, d = 2:
/// (i/(4 beta)) exp(-(ik/beta^2)(x-y).m) H0^(1)((k/beta^2)|x-y|_m).
inline Complex greens_2d(const Vec& x, const Vec& y, const FlowConfig& flow) {
  if (flow.dim() != 2) throw validation_error("greens_2d: flow must be 2-dimensional");
  require_dim(x, flow, "greens_2d");
  require_dim(y, flow, "greens_2d");
  const Vec delta = x - y;
  const double rm = mach_norm(delta, flow);
  detail::require_separated(rm, "greens_2d");
  const double beta = std::sqrt(flow.beta_sq());
  const double kb2 = flow.wavenumber() / flow.beta_sq();
  const Complex drift = std::polar(1.0, -kb2 * delta.dot(flow.mach()));
  return Complex(0.0, 1.0 / (4.0 * beta)) * drift * hankel_h1_0(kb2 * rm);
}

inline Complex greens(const Vec& x, const Vec& y, const FlowConfig& flow) {
  return flow.dim() == 3 ? greens_3d(x, y, flow) : greens_2d(x, y, flow);
}

/// Independent oracle for the convected kernels via the Lorentz
/// (Prandtl-Glauert) transformation:
///   g_m(x, y, k) = (1/beta) exp(-(ik/beta^2)(x-y).m) g_0(Tx, Ty, k/beta)
/// with T = diag(1/beta, 1, ...).  Requires the Mach vector aligned with the
/// first axis; rotate coordinates first for general flow directions.
inline Complex lorentz_reference(const Vec& x, const Vec& y, const FlowConfig& flow) {
  require_dim(x, flow, "lorentz_reference");
  require_dim(y, flow, "lorentz_reference");
  if (!flow.axis_aligned())
    throw validation_error("lorentz_reference: Mach vector must be (m1, 0, ...)");
  const double beta = std::sqrt(flow.beta_sq());
  Vec tx = x, ty = y;
  tx[0] /= beta;
  ty[0] /= beta;
  const Complex g0 = detail::greens0(tx, ty, flow.wavenumber() / beta, flow.dim());
  const double phase = -flow.wavenumber() / flow.beta_sq() * (x - y).dot(flow.mach());
  return std::polar(1.0 / beta, phase) * g0;
}

namespace detail {

// A v = (m m^T + beta^2 I) v
inline Vec convection_matrix_apply(const Vec& v, const FlowConfig& flow) {
  return flow.mach() * flow.mach().dot(v) + flow.beta_sq() * v;
}

}  // namespace detail

/// Leading far-field term of g(x, y):
/// C(d) h(x) |x|_m^{-(d-1)/2} exp((ik/beta^2)(m - A xhat).y) with
/// h(x) = exp((ik/beta^2)(|x|_m - x.m)), A = m m^T + beta^2 I, xhat = x/|x|_m,
/// C(3) = 1/(4 pi), C(2) = e^{i pi/4}/sqrt(8 pi k).
inline Complex farfield_leading(const Vec& x, const Vec& y, const FlowConfig& flow) {
  require_dim(x, flow, "farfield_leading");
  require_dim(y, flow, "farfield_leading");
  const double kb2 = flow.wavenumber() / flow.beta_sq();
  const double xm = mach_norm(x, flow);
  detail::require_separated(xm, "farfield_leading");
  const Vec xhat = x / xm;
  const Complex h = std::polar(1.0, kb2 * (xm - x.dot(flow.mach())));
  const Vec shift = flow.mach() - detail::convection_matrix_apply(xhat, flow);
  const Complex osc = std::polar(1.0, kb2 * shift.dot(y));
  const int d = flow.dim();
  const Complex cd = d == 3 ? Complex(1.0 / (4.0 * pi), 0.0)
                            : std::polar(1.0 / std::sqrt(8.0 * pi * flow.wavenumber()), pi / 4.0);
  return cd * h * std::pow(xm, -0.5 * (d - 1)) * osc;
}

/// Plane wave exp((ik/beta^2)(A xhat - m).y) for a Mach-unit direction xhat.
inline Complex plane_wave(const Vec& y, const Vec& xhat, const FlowConfig& flow) {
  require_dim(y, flow, "plane_wave");
  require_dim(xhat, flow, "plane_wave");
  if (std::abs(mach_norm(xhat, flow) - 1.0) > 1e-12)
    throw validation_error("plane_wave: direction must satisfy |xhat|_m = 1");
  const Vec shift = detail::convection_matrix_apply(xhat, flow) - flow.mach();
  return std::polar(1.0, flow.wavenumber() / flow.beta_sq() * shift.dot(y));
}

/// Far-field pattern of the volume potential of v, by midpoint quadrature:
/// sum_n exp((ik/beta^2)(m - A xhat).y_n) v_n |Omega_n|.
inline Complex far_field_pattern(const CVec& v, const Vec& xhat, const FlowConfig& flow,
                                 const FocusGrid& grid) {
  if (v.size() != grid.size())
    throw validation_error("far_field_pattern: value vector length must equal grid size");
  if (grid.dim() != flow.dim())
    throw validation_error("far_field_pattern: grid and flow dimensions differ");
  require_dim(xhat, flow, "far_field_pattern");
  if (std::abs(mach_norm(xhat, flow) - 1.0) > 1e-12)
    throw validation_error("far_field_pattern: direction must satisfy |xhat|_m = 1");
  const double kb2 = flow.wavenumber() / flow.beta_sq();
  const Vec shift = flow.mach() - detail::convection_matrix_apply(xhat, flow);
  Complex sum(0.0, 0.0);
  for (int n = 0; n < grid.size(); ++n)
    sum += std::polar(grid.cell_measure(n), kb2 * shift.dot(grid.point(n))) * v[n];
  return sum;
}

}  // namespace flowbeam
