#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "eeshare/linalg.hpp"
#include "eeshare/model.hpp"

namespace eeshare::test {

using Rng = std::mt19937_64;

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// Unit noise, unit bandwidth: rates come out in bit/s/Hz.
inline SystemParams unit_params(int n_t1, int n_t2, int n_r) {
  SystemParams p;
  p.n_t1 = n_t1;
  p.n_t2 = n_t2;
  p.n_r = n_r;
  p.p1 = 2.0;
  p.p2 = 10.0;
  p.noise_power = 1.0;
  p.bandwidth = 1.0;
  p.alpha = 2.0;
  p.p_c = 1.0;
  return p;
}

inline ChannelSet random_channels(Rng& eng, const SystemParams& p, double scale = 1.0) {
  ChannelSet ch;
  ch.h11 = random_cn(eng, p.n_t1, 1).col(0) * scale;
  ch.h22 = random_cn(eng, p.n_r, p.n_t2) * scale;
  ch.h12 = random_cn(eng, p.n_r, p.n_t1) * scale;
  ch.h21 = random_cn(eng, p.n_t2, 1).col(0) * scale;
  ch.ht = random_cn(eng, p.n_t2, p.n_t1) * scale;
  return ch;
}

/// Random PSD matrix with the given trace and random rank in [1, n].
inline HermitianPSD random_psd(Rng& eng, int n, double trace) {
  std::uniform_int_distribution<int> rk(1, n);
  const CMat g = random_cn(eng, n, rk(eng));
  CMat m = hermitize(g * g.adjoint());
  const double tr = m.trace().real();
  if (tr > 0.0) m *= trace / tr;
  return HermitianPSD::projected(m);
}

inline double uniform(Rng& eng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }

}  // namespace eeshare::test
