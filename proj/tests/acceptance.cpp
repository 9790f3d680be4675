// Acceptance suite: every criterion runs at its pinned tolerance and prints
// one PASS/FAIL line.  Exit status is nonzero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "flowbeam/flowbeam.hpp"
#include "oracle_bessel.hpp"

using namespace flowbeam;
namespace fs = std::filesystem;

namespace {

int criterion_index = 0;
int failures = 0;

void report(const std::string& name, bool passed, double metric, const std::string& bound,
            double seconds, double budget_s) {
  const bool in_time = seconds < budget_s;
  if (!passed || !in_time) ++failures;
  std::ostringstream line;
  line << "[" << ++criterion_index << "] " << (passed && in_time ? "PASS" : "FAIL") << "  "
       << name << "  metric=" << metric << " bound=" << bound << "  time=" << seconds << "s"
       << " (budget " << budget_s << "s)";
  if (passed && !in_time) line << "  [over time budget]";
  std::cout << line.str() << std::endl;
}

template <class Body>
void criterion(const std::string& name, double budget_s, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool passed = false;
  double metric = 0.0;
  std::string bound;
  try {
    std::tie(passed, metric, bound) = body();
  } catch (const std::exception& e) {
    std::cout << "[" << criterion_index + 1 << "] exception: " << e.what() << std::endl;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(name, passed, metric, bound, seconds, budget_s);
}

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

FlowConfig flow3(double m1) { return FlowConfig(v3(m1, 0, 0), 343.0, 8000.0); }

FlowConfig flow2(double m1) {
  Vec m(2);
  m << m1, 0.0;
  return FlowConfig(m, 343.0, 8000.0);
}

MicArray default_array() { return vogel_spiral_array(16, 1.0, Vec::Zero(3)); }

FocusGrid default_grid() {
  return FocusGrid::regular(v3(-0.5, -0.5, -1.1), v3(0.5, 0.5, -0.9), {5, 5, 1});
}

struct Stream {
  std::uint64_t seed, ctr = 0;
  explicit Stream(std::uint64_t s) : seed(s) {}
  double uniform() { return rng::uniform_pair(seed, 0, ctr++).second; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Vec vec(int d, double lo, double hi) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = range(lo, hi);
    return v;
  }
  Vec nonneg(int n) {
    Vec q(n);
    for (int i = 0; i < n; ++i) q[i] = uniform();
    return q;
  }
  Complex cnormal() { return rng::complex_normal(seed, 1, ctr++); }
  CMat hermitian(int m) {
    CMat b(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) b(i, j) = cnormal();
    return 0.5 * (b + CMat(b.adjoint()));
  }
};

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

int main() {
  std::cout << "flowbeam acceptance suite\n";

  // 1. Lorentz identity for m in {0.15, 0.3, 0.6}, both dimensions.
  criterion("lorentz_identity", 1.0, [] {
    Stream s(9001);
    double worst = 0.0;
    for (const double m1 : {0.15, 0.3, 0.6}) {
      for (const int d : {3, 2}) {
        const FlowConfig flow = d == 3 ? flow3(m1) : flow2(m1);
        int done = 0;
        while (done < 100) {
          const Vec x = s.vec(d, -2.0, 2.0);
          const Vec y = s.vec(d, -0.5, 0.5);
          if (mach_norm(x - y, flow) < 0.1) continue;
          ++done;
          const Complex g = greens(x, y, flow);
          const Complex ref = lorentz_reference(x, y, flow);
          worst = std::max(worst, std::abs(g - ref) / std::abs(ref));
        }
      }
    }
    return std::make_tuple(worst < 1e-10, worst, std::string("< 1e-10"));
  });

  // 2. Far-field remainder decay exponents.
  criterion("farfield_decay", 5.0, [] {
    Stream s(9002);
    double worst_dev = 0.0;
    for (const int d : {3, 2}) {
      const FlowConfig flow = d == 3 ? flow3(0.15) : flow2(0.15);
      std::vector<Vec> ys, dirs;
      for (int p = 0; p < 12; ++p) {
        ys.push_back(s.vec(d, -0.15, 0.15));
        Vec u(d);
        for (int i = 0; i < d; ++i) u[i] = s.range(-1.0, 1.0);
        dirs.push_back(u / mach_norm(u, flow));
      }
      std::vector<double> lr, lres;
      for (int i = 0; i < 20; ++i) {
        const double r = 100.0 * std::pow(10.0, 2.0 * i / 19.0);
        double sum = 0.0;
        for (std::size_t p = 0; p < ys.size(); ++p)
          sum += std::norm(greens(r * dirs[p], ys[p], flow) -
                           farfield_leading(r * dirs[p], ys[p], flow));
        lr.push_back(std::log(r));
        lres.push_back(0.5 * std::log(sum / ys.size()));
      }
      worst_dev = std::max(worst_dev, std::abs(fit_slope(lr, lres) + 0.5 * (d + 1)));
    }
    return std::make_tuple(worst_dev < 0.1, worst_dev, std::string("|slope dev| < 0.1"));
  });

  // 3. Adjoint identity, M = 8, N = 20, 20 random pairs.
  criterion("adjoint_identity", 1.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = vogel_spiral_array(8, 0.8, Vec::Zero(3));
    const FocusGrid grid =
        FocusGrid::regular(v3(-0.4, -0.3, -1.1), v3(0.4, 0.3, -0.9), {5, 4, 1});
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    Stream s(9003);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec q = s.nonneg(20);
      const CMat k = s.hermitian(8);
      const Csm c = forward_csm(SourceMap(q), g);
      const Complex lhs = (c.entries.array() * k.array().conjugate()).sum();
      const Vec adj = adjoint_csm(k, array, grid, flow);
      const double rhs = (q.array() * grid.cell_measures().array() * adj.array()).sum();
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(c.entries.norm() * k.norm(), 1e-300));
    }
    return std::make_tuple(worst < 1e-12, worst, std::string("< 1e-12"));
  });

  // 4. Normal-equation equivalence Psi D = A on the default 16/25 scenario.
  criterion("normal_equation", 1.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid grid = default_grid();
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    const PsfMatrix psi = psf_matrix(array, grid, flow);
    const Vec d = monopole_norms(array, grid, flow).cwiseProduct(grid.cell_measures());
    const Mat a = normal_matrix(g);
    const double dev =
        (Mat(psi.entries * d.asDiagonal()) - a).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff();
    return std::make_tuple(dev < 1e-12, dev, std::string("< 1e-12"));
  });

  // 5. Noise-free CMF recovery on the SVD-certified injective scenario.
  criterion("cmf_exact_recovery", 30.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid grid = default_grid();
    const PropagationMatrix g = propagation_matrix(array, grid, flow);

    Eigen::JacobiSVD<CMat> svd(csm_linearization(g));
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) / sv(0) <= 1e-10)
      return std::make_tuple(false, sv(sv.size() - 1) / sv(0),
                             std::string("rank certificate failed"));

    Stream s(9005);
    const Vec truth = s.nonneg(25);
    const Csm c = forward_csm(SourceMap(truth), g);
    ReconConfig cfg;
    cfg.alpha = 0.0;
    cfg.tol = 1e-16;
    cfg.max_iter = 100000;
    const SourceMap rec = cmf_solve(c, g, cfg);
    const double err = (rec.values - truth).norm() / truth.norm();
    return std::make_tuple(err < 1e-6, err, std::string("< 1e-6"));
  });

  // 6. DAMAS (normal equation) and CMF agree on the same noise-free scenario.
  criterion("damas_cmf_agreement", 30.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid grid = default_grid();
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    Stream s(9006);
    const Vec truth = s.nonneg(25);
    const Csm c = forward_csm(SourceMap(truth), g);

    ReconConfig cfg;
    cfg.alpha = 0.0;
    cfg.tol = 1e-16;
    cfg.max_iter = 200000;
    const Vec b = damas_rhs(c, array, grid, flow, DamasRhsForm::adjoint);
    const SourceMap damas_sol = damas_tikhonov(b, normal_matrix(g), cfg);
    const SourceMap cmf_sol = cmf_solve(c, g, cfg);
    const double dev = (damas_sol.values - cmf_sol.values).norm() / cmf_sol.values.norm();
    return std::make_tuple(dev < 1e-5, dev, std::string("< 1e-5"));
  });

  // 7. Single-source beamformer exactness.
  criterion("beamformer_exactness", 1.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid base = default_grid();
    const FocusGrid grid(base.points(), Vec::Ones(base.size()));  // unit cells
    const double q0 = 2.5;
    const int n0 = 12;
    Csm c;
    c.entries = q0 * monopole_matrix(n0, array, grid, flow);
    c.frequency = flow.frequency();
    const SourceMap map = beamform(c, array, grid, flow);
    const double err = std::abs(map.values[n0] - q0) / q0;
    return std::make_tuple(err < 1e-12, err, std::string("< 1e-12"));
  });

  // 8. CSM estimator consistency: error ratios across L = 100/400/1600.
  criterion("csm_estimator_consistency", 20.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid grid = default_grid();
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    Vec q = Vec::Zero(25);
    q[6] = 1.0;
    q[18] = 2.0;
    const Csm exact = forward_csm(SourceMap(q), g);
    const double scale = exact.entries.norm();

    std::vector<double> e100, e400, e1600;
    for (int seed = 0; seed < 10; ++seed) {
      const SnapshotEnsemble full = simulate_ensemble(SourceMap(q), g, 9100 + seed, 1600);
      for (const int level : {100, 400, 1600}) {
        SnapshotEnsemble part;
        part.seed = full.seed;
        part.frequency = full.frequency;
        part.snapshots.assign(full.snapshots.begin(), full.snapshots.begin() + level);
        const double err = (estimate_csm(part).entries - exact.entries).norm() / scale;
        (level == 100 ? e100 : level == 400 ? e400 : e1600).push_back(err);
      }
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return 0.5 * (v[4] + v[5]);
    };
    const double r1 = median(e400) / median(e100);
    const double r2 = median(e1600) / median(e400);
    const bool ok = r1 > 0.3 && r1 < 0.8 && r2 > 0.3 && r2 < 0.8;
    const double metric = std::max(std::abs(r1 - 0.55), std::abs(r2 - 0.55));
    return std::make_tuple(ok, metric, std::string("ratios in [0.3, 0.8]"));
  });

  // 9. Correlated-source non-uniqueness via an SVD null vector, M=8, N=40.
  criterion("kernel_nonuniqueness", 1.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = vogel_spiral_array(8, 0.8, Vec::Zero(3));
    const FocusGrid grid =
        FocusGrid::regular(v3(-0.4, -0.3, -1.1), v3(0.4, 0.3, -0.9), {8, 5, 1});
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    Eigen::JacobiSVD<CMat> svd(g.entries(), Eigen::ComputeFullV);
    const CVec v = svd.matrixV().col(39);
    if ((g.entries() * v).norm() / v.norm() > 1e-12)
      return std::make_tuple(false, (g.entries() * v).norm() / v.norm(),
                             std::string("no null vector"));
    const CMat s = v * v.adjoint();
    const double ratio = (g.entries() * s * g.entries().adjoint()).norm() / v.squaredNorm();
    return std::make_tuple(ratio < 1e-10, ratio, std::string("< 1e-10"));
  });

  // 10. Hankel accuracy against the high-precision series oracle.
  criterion("hankel_accuracy", 1.0, [] {
    oracle::MpfrBessel oracle;
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double t = 0.1 * std::pow(500.0, i / 499.0);
      const Complex got = hankel_h1_0(t);
      const Complex want = oracle.hankel_h1_0(t);
      worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
    return std::make_tuple(worst < 1e-10, worst, std::string("< 1e-10"));
  });

  // 11. Hilbert-Schmidt norm bound for 10 random sources.
  criterion("hs_bound", 5.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = default_array();
    const FocusGrid grid = default_grid();
    Vec lo = array.position(0), hi = array.position(0);
    for (int m = 1; m < array.size(); ++m) {
      lo = lo.cwiseMin(array.position(m));
      hi = hi.cwiseMax(array.position(m));
    }
    lo.array() -= 0.1;
    hi.array() += 0.1;
    const FocusGrid sampling = FocusGrid::regular(lo, hi, {3, 3, 3});
    const auto result = check_hs_bound(grid, flow, sampling, 9011);
    return std::make_tuple(result.passed, result.measured, std::string("lhs/rhs < 1 + 1e-9"));
  });

  // 12. CMF data-term gradient against central finite differences.
  criterion("cmf_gradient", 5.0, [] {
    const FlowConfig flow = flow3(0.15);
    const MicArray array = vogel_spiral_array(6, 1.0, Vec::Zero(3));
    const FocusGrid grid =
        FocusGrid::regular(v3(-0.4, -0.4, -1.1), v3(0.4, 0.4, -0.9), {4, 2, 1});
    const PropagationMatrix g = propagation_matrix(array, grid, flow);
    Stream s(9012);
    const Csm c = forward_csm(SourceMap(s.nonneg(8)), g);
    const auto objective = [&](const Vec& q) {
      const CVec qc = q.cast<Complex>();
      return (g.entries() * qc.asDiagonal() * g.entries().adjoint() - c.entries).squaredNorm();
    };
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const Vec q = s.nonneg(8);
      const Vec grad = cmf_data_gradient(q, c, g);
      for (int n = 0; n < 8; ++n) {
        const double h = 1e-5 * std::max(std::abs(q[n]), 0.1);
        Vec lo = q, hi = q;
        lo[n] -= h;
        hi[n] += h;
        const double fd = (objective(hi) - objective(lo)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[n]) / std::max(std::abs(grad[n]), 1e-12));
      }
    }
    return std::make_tuple(worst < 1e-5, worst, std::string("< 1e-5"));
  });

  // 13. Determinism: cmd_synth twice with the same scenario/seed is
  // byte-identical.
  criterion("synth_determinism", 5.0, [] {
    const std::string scn = std::string(FLOWBEAM_SOURCE_DIR) + "/scenarios/default.scn";
    const fs::path tmp =
        fs::temp_directory_path() / ("flowbeam_accept_" + std::to_string(::getpid()));
    fs::create_directories(tmp);
    const std::string a = (tmp / "a.csm").string();
    const std::string b = (tmp / "b.csm").string();
    const std::string base = std::string(FLOWBEAM_CLI_PATH) + " synth --scenario " + scn;
    const int rc1 = std::system((base + " --out " + a + " > /dev/null").c_str());
    const int rc2 = std::system((base + " --out " + b + " > /dev/null").c_str());
    bool ok = WIFEXITED(rc1) && WEXITSTATUS(rc1) == 0 && WIFEXITED(rc2) && WEXITSTATUS(rc2) == 0;
    double metric = 1.0;
    if (ok) {
      std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      ok = !sa.str().empty() && sa.str() == sb.str();
      metric = ok ? 0.0 : 1.0;
    }
    fs::remove_all(tmp);
    return std::make_tuple(ok, metric, std::string("byte-identical"));
  });

  std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                              : "ACCEPTANCE: " + std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
