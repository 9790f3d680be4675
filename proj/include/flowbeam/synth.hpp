#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "flowbeam/array_model.hpp"
#include "flowbeam/core.hpp"
#include "flowbeam/geometry.hpp"

namespace flowbeam {

namespace rng {

/// Philox-4x32-10 block: 128-bit counter, 64-bit key, four 32-bit outputs.
/// Counter-based, so any (seed, snapshot, source) cell can be generated
/// independently of evaluation order.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t mul0 = 0xD2511F53u, mul1 = 0xCD9E8D57u;
  constexpr std::uint32_t bump0 = 0x9E3779B9u, bump1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(mul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(mul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += bump0;
    key[1] += bump1;
  }
  return ctr;
}

/// Two uniforms in (0,1] x [0,1) from the stream cell (seed, snapshot, n).
inline std::pair<double, double> uniform_pair(std::uint64_t seed, std::uint64_t snapshot,
                                              std::uint64_t n) {
  const auto w = philox4x32({static_cast<std::uint32_t>(snapshot),
                             static_cast<std::uint32_t>(snapshot >> 32),
                             static_cast<std::uint32_t>(n),
                             static_cast<std::uint32_t>(n >> 32)},
                            {static_cast<std::uint32_t>(seed),
                             static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t a = w[0] | (static_cast<std::uint64_t>(w[1]) << 32);
  const std::uint64_t b = w[2] | (static_cast<std::uint64_t>(w[3]) << 32);
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1p-53;        // [0, 1)
  return {u1, u2};
}

/// Standard circularly-symmetric complex normal: E xi = 0, E |xi|^2 = 2
/// (real and imaginary parts are independent standard normals).
inline Complex complex_normal(std::uint64_t seed, std::uint64_t snapshot, std::uint64_t n) {
  const auto [u1, u2] = uniform_pair(seed, snapshot, n);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return std::polar(radius, 2.0 * pi * u2);
}

}  // namespace rng

/// One draw of the random source amplitudes: Pi_n = sqrt(q_n/2) (xi + i eta)
/// with independent standard normals, so E Pi = 0, E |Pi_n|^2 = q_n and
/// distinct components are uncorrelated.
inline CVec sample_amplitudes(const SourceMap& q, std::uint64_t seed,
                              std::uint64_t snapshot_index) {
  require_nonnegative(q, "sample_amplitudes");
  CVec amplitudes(q.size());
  for (int n = 0; n < q.size(); ++n)
    amplitudes[n] = std::sqrt(q.values[n] / 2.0) *
                    rng::complex_normal(seed, snapshot_index, static_cast<std::uint64_t>(n));
  return amplitudes;
}

/// One microphone snapshot p = G Pi.
inline CVec simulate_snapshot(const SourceMap& q, const PropagationMatrix& g,
                              std::uint64_t seed, std::uint64_t snapshot_index) {
  if (q.size() != g.focus_points())
    throw validation_error("simulate_snapshot: source map length must equal focus-point count");
  return g.entries() * sample_amplitudes(q, seed, snapshot_index);
}

/// Batch of independent snapshots standing in for Welch segments.
struct SnapshotEnsemble {
  std::vector<CVec> snapshots;
  std::uint64_t seed = 0;
  double frequency = 0.0;

  int size() const { return static_cast<int>(snapshots.size()); }
};

inline SnapshotEnsemble simulate_ensemble(const SourceMap& q, const PropagationMatrix& g,
                                          std::uint64_t seed, int count) {
  if (count < 1) throw validation_error("simulate_ensemble: need at least one snapshot");
  SnapshotEnsemble ensemble;
  ensemble.seed = seed;
  ensemble.frequency = g.flow().frequency();
  ensemble.snapshots.resize(count);
  parallel_for(count, [&](int ell) {
    ensemble.snapshots[ell] = simulate_snapshot(q, g, seed, static_cast<std::uint64_t>(ell));
  });
  return ensemble;
}

/// Sample CSM (1/L) sum_l p_l p_l^*, accumulated in snapshot order.
inline Csm estimate_csm(const SnapshotEnsemble& ensemble) {
  if (ensemble.snapshots.empty()) throw validation_error("estimate_csm: empty ensemble");
  const int m = static_cast<int>(ensemble.snapshots.front().size());
  CMat c = CMat::Zero(m, m);
  for (const CVec& p : ensemble.snapshots) {
    if (p.size() != m) throw validation_error("estimate_csm: inconsistent snapshot lengths");
    c.noalias() += p * p.adjoint();
  }
  c /= static_cast<double>(ensemble.size());
  detail::symmetrize_hermitian(c);
  return Csm{std::move(c), ensemble.size(), ensemble.frequency};
}

/// Uncorrelated sensor self-noise: C + sigma2 * I.
inline Csm add_noise(const Csm& c, double sigma2) {
  if (!(sigma2 >= 0.0))
    throw validation_error("add_noise: noise power must be >= 0");
  Csm out = c;
  out.entries += sigma2 * CMat::Identity(c.mics(), c.mics());
  return out;
}

}  // namespace flowbeam
