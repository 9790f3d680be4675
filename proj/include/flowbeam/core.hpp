#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace flowbeam {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double pi = 3.14159265358979323846;

/// Invalid input or broken precondition (CLI exit code 2).
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File access or parse failure (CLI exit code 3).
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Uniform subsonic mean flow and the acoustic scalars derived from it.
///
/// Units are SI throughout.  The wavenumber is always derived as
/// k = 2*pi*f/c; it is never an independent input.
class FlowConfig {
 public:
  FlowConfig(Vec mach, double sound_speed, double frequency)
      : mach_(std::move(mach)), sound_speed_(sound_speed), frequency_(frequency) {
    const auto d = mach_.size();
    if (d != 2 && d != 3)
      throw validation_error("FlowConfig: dimension must be 2 or 3, got " + std::to_string(d));
    if (!mach_.allFinite())
      throw validation_error("FlowConfig: Mach vector must be finite");
    const double m2 = mach_.squaredNorm();
    if (m2 >= 1.0)
      throw validation_error("FlowConfig: flow must be subsonic (|mach| < 1)");
    if (!(sound_speed_ > 0.0) || !std::isfinite(sound_speed_))
      throw validation_error("FlowConfig: sound speed must be positive");
    if (!(frequency_ > 0.0) || !std::isfinite(frequency_))
      throw validation_error("FlowConfig: frequency must be positive");
    beta_sq_ = 1.0 - m2;
    wavenumber_ = 2.0 * pi * frequency_ / sound_speed_;
  }

  int dim() const { return static_cast<int>(mach_.size()); }
  const Vec& mach() const { return mach_; }
  double sound_speed() const { return sound_speed_; }
  double frequency() const { return frequency_; }
  double wavenumber() const { return wavenumber_; }
  double beta_sq() const { return beta_sq_; }

  /// True when the Mach vector has the form (m1, 0, ...).
  bool axis_aligned() const {
    for (int i = 1; i < mach_.size(); ++i)
      if (mach_[i] != 0.0) return false;
    return true;
  }

 private:
  Vec mach_;
  double sound_speed_;
  double frequency_;
  double wavenumber_;
  double beta_sq_;
};

inline void require_dim(const Vec& x, const FlowConfig& flow, const char* where) {
  if (x.size() != flow.dim())
    throw validation_error(std::string(where) + ": point dimension " +
                           std::to_string(x.size()) + " does not match flow dimension " +
                           std::to_string(flow.dim()));
}

/// Worker count for parallel index loops, from FLOWBEAM_THREADS (default 1).
inline int thread_count() {
  const char* env = std::getenv("FLOWBEAM_THREADS");
  if (!env) return 1;
  const long n = std::strtol(env, nullptr, 10);
  if (n < 1) return 1;
  const long hw = static_cast<long>(std::thread::hardware_concurrency());
  return static_cast<int>(n > hw && hw > 0 ? hw : n);
}

/// Runs body(i) for i in [0, n).  Each index must write only its own output
/// slots; results are then identical for any worker count.
template <class F>
inline void parallel_for(int n, F&& body) {
  const int workers = std::min(thread_count(), n > 0 ? n : 1);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = w * chunk;
    const int hi = std::min(n, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace flowbeam
