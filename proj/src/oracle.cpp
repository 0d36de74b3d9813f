#include "eeshare/oracle.hpp"

#include <cmath>
#include <limits>

#include "eeshare/error.hpp"

namespace eeshare {

// Scalar closed forms only; no allocator code is reused here.
ScalarGridResult grid_underlay_scalar(const SystemParams& p, const ChannelSet& ch, int grid_n, Objective obj) {
  p.validate();
  ch.validate(p);
  if (p.n_t1 != 1 || p.n_t2 != 1 || p.n_r != 1)
    throw Error(ErrorCode::InvalidArgument, "scalar grid oracle needs single-antenna links");
  if (grid_n < 2) throw Error(ErrorCode::InvalidArgument, "grid_n must be at least 2");

  const double s2 = p.noise_power;
  const double g11 = std::norm(ch.h11(0));
  const double g22 = std::norm(ch.h22(0, 0));
  const double g12 = std::norm(ch.h12(0, 0));
  const double g21 = std::norm(ch.h21(0));
  const double r1n = p.r1_star / p.bandwidth;
  const double r2n = p.r2_star / p.bandwidth;
  const auto cost = CostModel::of(p, obj);

  double p_max = p.alpha > 0.0 ? p.p2 / p.alpha : p.p2;
  if (p.r1_star > 0.0 && g21 > 0.0) {
    const double p_int = p.p1 * g11 / (std::exp2(r1n) - 1.0) - s2;
    p_max = std::min(p_max, std::max(0.0, p_int) / g21);
  }

  ScalarGridResult best;
  best.ee = -1.0;
  const double slack = 1e-12;
  for (int i = 0; i < grid_n; ++i) {
    const double p21 = p_max * i / (grid_n - 1);
    for (int j = 0; j < grid_n; ++j) {
      const double p22 = p_max * j / (grid_n - 1);
      if (p.alpha * (p21 + p22) > p.p2 * (1.0 + slack)) continue;
      const double r1 = std::log2(1.0 + p.p1 * g11 / (s2 + g21 * (p21 + p22)));
      if (r1 < r1n - slack * (1.0 + r1n)) continue;
      const double r12 = std::log2(1.0 + p.p1 * g12 / (s2 + g22 * p22));
      if (p22 > 0.0 && r12 < r1n) continue;
      const double r2 = std::log2(1.0 + g22 * p22 / s2) + std::log2(1.0 + g22 * p21 / (s2 + p.p1 * g12 + g22 * p22));
      if (r2 < r2n - slack * (1.0 + r2n)) continue;
      const double ee = p.bandwidth * r2 / (cost.alpha * (p21 + p22) + cost.p_c);
      if (ee > best.ee) best = {p21, p22, ee, p.bandwidth * r2, true};
    }
  }
  if (!best.feasible) best = ScalarGridResult{};
  return best;
}

std::vector<CVec> direction_codebook_c2() {
  std::vector<CVec> out;
  const double pi = std::acos(-1.0);
  for (int i = 0; i < 8; ++i) {
    const double t = 0.5 * pi * i / 7.0;
    for (int j = 0; j < 8; ++j) {
      const double f = 2.0 * pi * j / 8.0;
      CVec v(2);
      v << cplx(std::cos(t), 0.0), std::polar(std::sin(t), f);
      out.push_back(v);
    }
  }
  return out;
}

Rank1GridResult grid_overlay_rank1(const SystemParams& p, const ChannelSet& ch, int a_grid, int beta_grid,
                                   const std::optional<CVec>& extra_dir) {
  p.validate();
  ch.validate(p);
  if (p.n_t2 > 2) throw Error(ErrorCode::InvalidArgument, "rank-1 grid oracle needs n_t2 <= 2");
  if (a_grid < 2 || beta_grid < 1) throw Error(ErrorCode::InvalidArgument, "grid sizes too small");

  Rank1GridResult best;
  const double s2 = p.noise_power;
  const double h11_sq = ch.h11.squaredNorm();
  const CVec g = ch.ht * ch.h11;
  const double h21_sq = ch.h21.squaredNorm();
  if (!(g.squaredNorm() > 0.0) || !(h21_sq > 0.0)) return best;

  std::vector<CVec> dirs;
  if (p.n_t2 == 2) {
    dirs = direction_codebook_c2();
  } else {
    dirs.push_back(CVec::Ones(1));
  }
  if (extra_dir) dirs.push_back(extra_dir->normalized());

  const CVec u = ch.h21 / std::sqrt(h21_sq);
  const double relay_unit = p.p1 * g.squaredNorm() / h11_sq + s2;  // tr(A M A^H) per unit of a
  const double budget = p.p2 / p.alpha;
  const double a_max = budget / relay_unit;
  const double direct_snr = p.p1 * h11_sq / s2;
  const double r1n = p.r1_star / p.bandwidth;
  const CMat eye = CMat::Identity(p.n_r, p.n_r) * s2;

  best.ee = -1.0;
  for (int i = 0; i < a_grid; ++i) {
    const double a = a_max * i / (a_grid - 1);
    // A = sqrt(a) u g^H / |g|
    const double forwarded = a * h21_sq * g.squaredNorm();  // |h21^H A g|^2
    const double relay_noise = s2 * a * h21_sq;              // s2 |A^H h21|^2
    const double relay_tr = a * relay_unit;
    const CMat z = eye + ch.h22 * (u * u.adjoint() * relay_tr) * ch.h22.adjoint();
    const Eigen::LLT<CMat> zl(z);
    const double remaining = std::max(0.0, budget - relay_tr);

    auto consider = [&](int dir, double beta, double hbh, double r2n_val) {
      const double snr = direct_snr + (p.p1 / h11_sq) * forwarded / (s2 + relay_noise + hbh);
      const double r1 = 0.5 * std::log2(1.0 + snr);
      if (r1 < r1n * (1.0 - 1e-12)) return;
      const double r2 = 0.5 * p.bandwidth * r2n_val;
      if (r2 < p.r2_star * (1.0 - 1e-12)) return;
      const double ee = r2 / (p.alpha * (relay_tr + beta) + p.p_c);
      if (ee > best.ee) {
        best.a = a;
        best.b_dir_index = dir;
        best.b_power = beta;
        best.ee = ee;
        best.b_dir = dir >= 0 ? dirs[dir] : CVec::Zero(p.n_t2);
        best.feasible = true;
      }
    };
    consider(-1, 0.0, 0.0, 0.0);
    for (int d = 0; d < static_cast<int>(dirs.size()); ++d) {
      const CVec hu = ch.h22 * dirs[d];
      const double gain = (hu.adjoint() * zl.solve(hu))(0, 0).real();  // determinant lemma
      const double hw = std::norm(ch.h21.dot(dirs[d]));
      for (int k = 1; k <= beta_grid; ++k) {
        const double beta = remaining * k / beta_grid;
        consider(d, beta, beta * hw, std::log2(1.0 + beta * gain));
      }
    }
  }
  if (!best.feasible) best = Rank1GridResult{};
  return best;
}

HermitianPSD waterfill(const CMat& h, const CMat& noise_cov, double budget) {
  if (budget < 0.0) throw Error(ErrorCode::InvalidArgument, "budget must be nonnegative");
  const Eigen::Index n = h.cols();
  if (budget == 0.0) return HermitianPSD::zero(n);
  const CMat w = inv_sqrtm_pd(noise_cov) * h;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(w.adjoint() * w));
  const RVec d = es.eigenvalues();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0)) return HermitianPSD::zero(n);

  auto used = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (d(i) > 0.0) s += std::max(0.0, mu - 1.0 / d(i));
    return s;
  };
  double lo = 0.0, hi = budget + 1.0 / dmax;
  while (used(hi) < budget) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (used(mid) < budget ? lo : hi) = mid;
  }
  RVec pw(n);
  for (Eigen::Index i = 0; i < n; ++i) pw(i) = d(i) > 0.0 ? std::max(0.0, hi - 1.0 / d(i)) : 0.0;
  pw *= budget / pw.sum();
  return HermitianPSD::projected(es.eigenvectors() * pw.asDiagonal() * es.eigenvectors().adjoint());
}

}  // namespace eeshare
