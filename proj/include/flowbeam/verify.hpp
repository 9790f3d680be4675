#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "flowbeam/array_model.hpp"
#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"
#include "flowbeam/greens.hpp"
#include "flowbeam/recon.hpp"
#include "flowbeam/synth.hpp"

namespace flowbeam {

/// One numerical identity check: `measured` compared against `threshold`
/// with the stored relation ('<' passes when measured < threshold, '>' when
/// measured > threshold).
struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  char relation = '<';
  bool passed = false;
  double runtime_s = 0.0;
  std::string detail;
};

struct DiagnosticReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

/// Deterministic stream of uniforms/normals for the diagnostic checks,
/// backed by the same counter-based generator as the synthesis module.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  double uniform() {  // in [0, 1)
    if (have_) {
      have_ = false;
      return cached_;
    }
    const auto [u1, u2] = rng::uniform_pair(seed_, stream_, counter_++);
    cached_ = u1 == 1.0 ? 0.0 : u1;
    have_ = true;
    return u2;
  }

  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Complex cnormal() {
    have_ = false;  // keep the normal stream independent of cached uniforms
    return rng::complex_normal(seed_, stream_, counter_++);
  }

  Vec vec(int d, double lo, double hi) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = range(lo, hi);
    return v;
  }

  /// Random direction on the Mach unit sphere.
  Vec mach_direction(const FlowConfig& flow) {
    Vec u(flow.dim());
    for (int i = 0; i < flow.dim(); ++i) u[i] = cnormal().real();
    if (u.norm() < 1e-8) u = Vec::Unit(flow.dim(), 0);
    return u / mach_norm(u, flow);
  }

  CMat hermitian(int m) {
    CMat b(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = cnormal();
    return 0.5 * (b + CMat(b.adjoint()));
  }

 private:
  std::uint64_t seed_, stream_, counter_ = 0;
  bool have_ = false;
  double cached_ = 0.0;
};

template <class Body>
CheckResult timed_check(std::string name, Body&& body) {
  CheckResult r;
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  body(r);
  const auto t1 = std::chrono::steady_clock::now();
  r.runtime_s = std::chrono::duration<double>(t1 - t0).count();
  return r;
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw validation_error("fit_slope: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

/// Small verification geometry: spiral (3D) or segment (2D) array above a
/// lattice slab of the requested size.
inline MicArray verify_array(int d, int mics) {
  Vec center = Vec::Zero(d);
  return d == 3 ? vogel_spiral_array(mics, 0.8, center) : segment_array(mics, 0.8, center);
}

inline FocusGrid verify_grid(int d, int nx, int ny) {
  if (d == 3) {
    Vec lo(3), hi(3);
    lo << -0.4, -0.3, -1.1;
    hi << 0.4, 0.3, -0.9;
    return FocusGrid::regular(lo, hi, {nx, ny, 1});
  }
  Vec lo(2), hi(2);
  lo << -0.4, -1.1;
  hi << 0.4, -0.9;
  return FocusGrid::regular(lo, hi, {nx, ny});
}

}  // namespace detail

/// Adjoint identity <C(q), K>_F = sum_n q_n |Omega_n| (C*K)_n over random
/// (q, K) pairs.
inline CheckResult check_adjoint(int mics, int nx, int ny, const FlowConfig& flow,
                                 std::uint64_t seed, double tol_scale = 1.0) {
  return detail::timed_check("adjoint_identity", [&](CheckResult& r) {
    const MicArray array = detail::verify_array(flow.dim(), mics);
    const FocusGrid grid = detail::verify_grid(flow.dim(), nx, ny);
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    detail::DetRng rng(seed, 101);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Vec q(grid.size());
      for (int n = 0; n < grid.size(); ++n) q[n] = rng.uniform();
      const CMat k = rng.hermitian(array.size());
      const Csm c = forward_csm(SourceMap(q), g);
      const Complex lhs = (c.entries.array() * k.array().conjugate()).sum();
      const Vec adj = adjoint_csm(k, array, grid, flow);
      const double rhs = (q.array() * grid.cell_measures().array() * adj.array()).sum();
      const double scale = std::max(c.entries.norm() * k.norm(), 1e-300);
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    r.measured = worst;
    r.threshold = 1e-12 * tol_scale;
    r.passed = r.measured < r.threshold;
  });
}

/// Discrete normal-equation identity Psi * D = A with
/// D = diag(||P_n'||_F^2 |Omega_n'|).
inline CheckResult check_normal_equation(const MicArray& array, const FocusGrid& grid,
                                         const FlowConfig& flow, double tol_scale = 1.0) {
  return detail::timed_check("normal_equation", [&](CheckResult& r) {
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    const PsfMatrix psi = psf_matrix(array, grid, flow);
    const Vec d = monopole_norms(array, grid, flow).cwiseProduct(grid.cell_measures());
    const Mat a = normal_matrix(g);
    const Mat lhs = psi.entries * d.asDiagonal();
    r.measured = (lhs - a).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
    r.threshold = 1e-12 * tol_scale;
    r.passed = r.measured < r.threshold;
  });
}

/// Decay of the far-field remainder g - leading term: fitted log-log slope
/// must sit within 0.1 of -(d+1)/2 over |x| in [1e2, 1e4].
inline CheckResult check_asymptotics(const FlowConfig& flow, std::uint64_t seed,
                                     double tol_scale = 1.0) {
  const int d = flow.dim();
  return detail::timed_check("asymptotics_" + std::to_string(d) + "d", [&](CheckResult& r) {
    detail::DetRng rng(seed, 202 + d);
    constexpr int num_radii = 20;
    constexpr int num_pairs = 12;
    std::vector<Vec> ys, dirs;
    for (int p = 0; p < num_pairs; ++p) {
      Vec y(d);
      do {
        y = rng.vec(d, -0.2, 0.2);
      } while (y.norm() > 0.2);
      ys.push_back(y);
      dirs.push_back(rng.mach_direction(flow));
    }
    std::vector<double> log_r, log_res;
    for (int i = 0; i < num_radii; ++i) {
      const double radius = 100.0 * std::pow(10.0, 2.0 * i / (num_radii - 1.0));
      double sum_sq = 0.0;
      for (int p = 0; p < num_pairs; ++p) {
        const Vec x = radius * dirs[p];
        sum_sq += std::norm(greens(x, ys[p], flow) - farfield_leading(x, ys[p], flow));
      }
      log_r.push_back(std::log(radius));
      log_res.push_back(0.5 * std::log(sum_sq / num_pairs));
    }
    const double slope = detail::fit_slope(log_r, log_res);
    const double target = -0.5 * (d + 1);
    r.measured = std::abs(slope - target);
    r.threshold = 0.1 * tol_scale;
    r.passed = r.measured < r.threshold;
    std::ostringstream os;
    os << "slope=" << slope << " target=" << target;
    r.detail = os.str();
  });
}

/// Convected kernels against the Lorentz-transform oracle on random pairs.
inline CheckResult check_lorentz(const FlowConfig& flow, std::uint64_t seed,
                                 double tol_scale = 1.0) {
  std::ostringstream name;
  name << "lorentz_" << flow.dim() << "d_m" << std::fixed << std::setprecision(2)
       << flow.mach().norm();
  return detail::timed_check(name.str(), [&](CheckResult& r) {
    detail::DetRng rng(seed, 303 + flow.dim());
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(flow.dim()), y(flow.dim());
      do {
        x = rng.vec(flow.dim(), -2.0, 2.0);
        y = rng.vec(flow.dim(), -0.5, 0.5);
      } while (mach_norm(x - y, flow) < 0.1);
      const Complex g = greens(x, y, flow);
      const Complex ref = lorentz_reference(x, y, flow);
      worst = std::max(worst, std::abs(g - ref) / std::abs(ref));
    }
    r.measured = worst;
    r.threshold = 1e-10 * tol_scale;
    r.passed = r.measured < r.threshold;
  });
}

/// Numerical column rank of the vec-linearized forward map (discrete shadow
/// of the uniqueness theorem; requires N <= M^2).
inline CheckResult check_injectivity(const PropagationMatrix& g, double tol_scale = 1.0) {
  return detail::timed_check("injectivity", [&](CheckResult& r) {
    const long m2 = static_cast<long>(g.mics()) * g.mics();
    if (g.focus_points() > m2)
      throw validation_error("check_injectivity: needs N <= M^2");
    const CMat b = csm_linearization(g);
    Eigen::JacobiSVD<CMat> svd(b);
    const auto& sv = svd.singularValues();
    r.measured = sv(sv.size() - 1) / sv(0);
    r.threshold = 1e-10 / tol_scale;
    r.relation = '>';
    r.passed = r.measured > r.threshold;
    std::ostringstream os;
    os << "sigma_min=" << sv(sv.size() - 1) << " sigma_max=" << sv(0);
    r.detail = os.str();
  });
}

/// Correlated sources are not identifiable: an SVD null vector v of G gives a
/// PSD source covariance v v^* with vanishing data G (v v^*) G^*.
inline CheckResult check_kernel_nonuniqueness(const PropagationMatrix& g,
                                              double tol_scale = 1.0) {
  return detail::timed_check("kernel_nonuniqueness", [&](CheckResult& r) {
    if (g.focus_points() <= g.mics())
      throw validation_error("check_kernel_nonuniqueness: needs N > M");
    Eigen::JacobiSVD<CMat> svd(g.entries(), Eigen::ComputeFullV);
    const CVec v = svd.matrixV().col(g.focus_points() - 1);
    const double null_ratio = (g.entries() * v).norm() / v.norm();
    if (null_ratio > 1e-12)
      throw validation_error("check_kernel_nonuniqueness: no numerical null vector found");
    const CMat s = v * v.adjoint();
    const CMat data = g.entries() * s * g.entries().adjoint();
    r.measured = data.norm() / v.squaredNorm();
    r.threshold = 1e-10 * tol_scale;
    r.passed = r.measured < r.threshold;
    // The diagonal of v v^* is itself a non-negative map with nonzero data.
    const Vec diag_map = s.diagonal().real().cwiseMax(0.0);
    const double diag_data = forward_csm(SourceMap(diag_map), g).entries.norm();
    std::ostringstream os;
    os << "null_ratio=" << null_ratio << " diag_map_data_norm=" << diag_data;
    r.detail = os.str();
  });
}

/// Discretized Hilbert-Schmidt bound ||c_q||^2 <= ||q||^2 ||kappa||^2 with the
/// measurement region sampled by a midpoint lattice.
inline CheckResult check_hs_bound(const FocusGrid& grid, const FlowConfig& flow,
                                  const FocusGrid& m_sampling, std::uint64_t seed,
                                  double tol_scale = 1.0) {
  return detail::timed_check("hs_bound", [&](CheckResult& r) {
    const int s = m_sampling.size();
    const int n = grid.size();
    CMat gm(s, n);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < n; ++j) gm(i, j) = greens(m_sampling.point(i), grid.point(j), flow);
    const Vec w = m_sampling.cell_measures();
    const Vec omega = grid.cell_measures();
    const Mat e = gm.cwiseAbs2();
    const double kappa_sq = w.dot(e * omega.asDiagonal() * e.transpose() * w);

    detail::DetRng rng(seed, 404);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Vec q(n);
      if (trial == 0)
        q.setOnes();  // constant source: the bound holds with a clear gap
      else
        for (int j = 0; j < n; ++j) q[j] = rng.uniform();
      const CVec qw = (q.cwiseProduct(omega)).cast<Complex>();
      const CMat cq = gm * qw.asDiagonal() * gm.adjoint();
      const CVec sw = w.cwiseSqrt().cast<Complex>();
      const CMat weighted = sw.asDiagonal() * cq * sw.asDiagonal();
      const double lhs = weighted.squaredNorm();
      const double rhs = q.cwiseAbs2().dot(omega) * kappa_sq;
      worst = std::max(worst, lhs / std::max(rhs, 1e-300));
    }
    r.measured = worst;
    r.threshold = 1.0 + 1e-9 * tol_scale;
    r.passed = r.measured < r.threshold;
  });
}

/// Monte-Carlo consistency of the CSM estimator: median relative Frobenius
/// errors at L = 100/400/1600 over 10 seeds shrink with ratios in [0.3, 0.8].
inline CheckResult check_mc_convergence(const SourceMap& q, const PropagationMatrix& g,
                                        std::uint64_t master_seed, double tol_scale = 1.0) {
  return detail::timed_check("mc_convergence", [&](CheckResult& r) {
    const Csm exact = forward_csm(q, g);
    const double exact_norm = exact.entries.norm();
    if (!(exact_norm > 0.0))
      throw validation_error("check_mc_convergence: scenario sources must be nonzero");
    const std::vector<int> levels{100, 400, 1600};
    constexpr int num_seeds = 10;
    std::vector<std::vector<double>> errs(levels.size());
    for (int s = 0; s < num_seeds; ++s) {
      const SnapshotEnsemble full = simulate_ensemble(q, g, master_seed + s, levels.back());
      for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
        SnapshotEnsemble part;
        part.seed = full.seed;
        part.frequency = full.frequency;
        part.snapshots.assign(full.snapshots.begin(), full.snapshots.begin() + levels[lvl]);
        const Csm est = estimate_csm(part);
        errs[lvl].push_back((est.entries - exact.entries).norm() / exact_norm);
      }
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      const auto n = v.size();
      return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double med100 = median(errs[0]), med400 = median(errs[1]), med1600 = median(errs[2]);
    const double r1 = med400 / med100, r2 = med1600 / med400;
    r.measured = std::max(std::abs(r1 - 0.55), std::abs(r2 - 0.55));
    r.threshold = 0.25 * tol_scale;
    r.passed = r.measured < r.threshold && med1600 < med100;
    std::ostringstream os;
    os << "med100=" << med100 << " med400=" << med400 << " med1600=" << med1600
       << " ratios=" << r1 << "," << r2;
    r.detail = os.str();
  });
}

/// Full diagnostic suite at the default desk-scale sizes, driven by one
/// master seed.  The scenario supplies flow, geometry and true sources.
inline DiagnosticReport run_verification(const MicArray& array, const FocusGrid& grid,
                                         const FlowConfig& flow, const SourceMap& q,
                                         std::uint64_t master_seed, double tol_scale = 1.0) {
  const int d = flow.dim();
  DiagnosticReport report;

  report.checks.push_back(check_adjoint(8, 5, 4, flow, master_seed, tol_scale));
  report.checks.push_back(check_normal_equation(array, grid, flow, tol_scale));

  {
    Vec m3(3), m2(2);
    m3 << flow.mach().norm(), 0.0, 0.0;
    m2 << 0.3, 0.0;
    if (m3[0] == 0.0) m3[0] = 0.15;
    const FlowConfig f3(m3, flow.sound_speed(), flow.frequency());
    const FlowConfig f2(m2, flow.sound_speed(), flow.frequency());
    report.checks.push_back(check_asymptotics(f3, master_seed, tol_scale));
    report.checks.push_back(check_asymptotics(f2, master_seed, tol_scale));

    Vec m3b(3);
    m3b << 0.15, 0.0, 0.0;
    Vec m3c(3);
    m3c << 0.6, 0.0, 0.0;
    report.checks.push_back(
        check_lorentz(FlowConfig(m3b, flow.sound_speed(), flow.frequency()), master_seed,
                      tol_scale));
    report.checks.push_back(check_lorentz(f2, master_seed, tol_scale));
    report.checks.push_back(
        check_lorentz(FlowConfig(m3c, flow.sound_speed(), flow.frequency()), master_seed,
                      tol_scale));
  }

  const PropagationMatrix g = propagation_matrix(array, grid, flow);
  report.checks.push_back(check_injectivity(g, tol_scale));

  {
    const MicArray small_array = detail::verify_array(d, 8);
    const FocusGrid wide_grid = detail::verify_grid(d, 8, 5);
    const PropagationMatrix g_wide = propagation_matrix(small_array, wide_grid, flow);
    report.checks.push_back(check_kernel_nonuniqueness(g_wide, tol_scale));
  }

  {
    // Measurement-region sampling lattice: the array bounding box padded by
    // 10% of its largest extent (at least 5 cm).
    Vec lo = array.position(0), hi = array.position(0);
    for (int m = 1; m < array.size(); ++m) {
      lo = lo.cwiseMin(array.position(m));
      hi = hi.cwiseMax(array.position(m));
    }
    const double pad = std::max(0.1 * (hi - lo).maxCoeff(), 0.05);
    lo.array() -= pad;
    hi.array() += pad;
    const std::vector<int> counts = d == 3 ? std::vector<int>{3, 3, 3} : std::vector<int>{5, 5};
    const FocusGrid m_sampling = FocusGrid::regular(lo, hi, counts);
    report.checks.push_back(check_hs_bound(grid, flow, m_sampling, master_seed, tol_scale));
  }

  report.checks.push_back(check_mc_convergence(q, g, master_seed, tol_scale));
  return report;
}

/// Human-readable rendering, one line per check.
inline std::string report_to_text(const DiagnosticReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(24) << "check" << std::setw(14) << "measured" << std::setw(4)
     << "rel" << std::setw(14) << "threshold" << std::setw(8) << "status"
     << "time[s]\n";
  for (const auto& c : report.checks) {
    os << std::left << std::setw(24) << c.name << std::setw(14) << std::scientific
       << std::setprecision(3) << c.measured << std::setw(4) << c.relation << std::setw(14)
       << c.threshold << std::setw(8) << (c.passed ? "PASS" : "FAIL") << std::fixed
       << std::setprecision(3) << c.runtime_s;
    if (!c.detail.empty()) os << "  # " << c.detail;
    os << "\n";
  }
  os << (report.all_passed() ? "all checks passed\n" : "SOME CHECKS FAILED\n");
  return os.str();
}

/// Machine-readable summary: `name pass|fail measured relation threshold runtime`.
inline std::string report_to_summary(const DiagnosticReport& report) {
  std::ostringstream os;
  os << "# verify v1\n";
  for (const auto& c : report.checks) {
    os << c.name << ' ' << (c.passed ? "pass" : "fail") << ' ' << std::setprecision(17)
       << c.measured << ' ' << c.relation << ' ' << c.threshold << ' ' << c.runtime_s << "\n";
  }
  os << "# overall " << (report.all_passed() ? "pass" : "fail") << "\n";
  return os.str();
}

}  // namespace flowbeam
