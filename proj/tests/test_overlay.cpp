#include <doctest.h>

#include <cmath>

#include "eeshare/error.hpp"
#include "eeshare/oracle.hpp"
#include "eeshare/overlay.hpp"
#include "support/support.hpp"

using namespace eeshare;
using namespace eeshare::test;

namespace {

// 2x2x2 instance with a strong relay path, so that relaying can lift the primary
// rate above the direct-link capacity. R1* lands at `theta` of the way to r_bar.
bool overlay_instance(Rng& eng, SystemParams& p, ChannelSet& ch, double theta) {
  p = unit_params(2, 2, 2);
  p.p1 = 1.0;
  p.p2 = uniform(eng, 10.0, 40.0);
  ch = random_channels(eng, p);
  ch.ht *= 3.0;
  ch.h21 *= 3.0;
  const double cap = direct_capacity(p, ch);
  const double rbar = max_primary_rate(p, ch).r_bar;
  if (rbar <= cap * 1.05) return false;
  p.r1_star = cap + theta * (rbar - cap);
  return true;
}

CMat random_unitary(Rng& eng, int n) {
  Eigen::HouseholderQR<CMat> qr(random_cn(eng, n, n));
  return qr.householderQ() * CMat::Identity(n, n);
}

CMat random_hermitian(Rng& eng, int n) { return hermitize(random_cn(eng, n, n)); }

double relay_power(const SystemParams& p, const OverlayConstants& k, const CMat& a) {
  return p.alpha * (a * k.m_mat.matrix() * a.adjoint()).trace().real();
}

void check_solution(const SystemParams& p, const ChannelSet& ch, const OverlaySolution& s) {
  const auto k = overlay_constants(p, ch);
  CHECK(p.alpha * (s.relay_x.trace() + s.b_cov.trace()) <= p.p2 + 1e-9 * (1.0 + p.p2));
  CHECK(v_constraint_value(p, ch, k, s.relay_x.matrix(), s.b_cov.matrix()) >= -1e-7 * p.noise_power);
  const auto rates = overlay_rates(p, ch, s.relay_a, s.b_cov);
  CHECK(rates.r1 / p.bandwidth >= p.r1_star / p.bandwidth - 1e-6 * (1.0 + p.r1_star / p.bandwidth));
  CHECK(s.r2 >= p.r2_star * (1.0 - 1e-9));
  CHECK((s.relay_a * k.m_mat.matrix() * s.relay_a.adjoint() - s.relay_x.matrix()).norm() <=
        1e-8 * (1.0 + s.relay_x.matrix().norm()));
  // half-duplex pre-log
  CHECK(std::abs(s.r2 - 0.5 * p.bandwidth * overlay_rate_numerator(p, ch, s.relay_x.matrix(), s.b_cov.matrix())) <=
        1e-9 * (1.0 + s.r2));
  for (size_t i = 1; i < s.trace.objectives.size(); ++i)
    CHECK(s.trace.objectives[i] >= s.trace.objectives[i - 1] * (1.0 - 1e-6));
}

}  // namespace

TEST_CASE("overlay constants") {
  Rng eng(51);
  SystemParams p = unit_params(2, 2, 2);
  const auto ch = random_channels(eng, p);
  p.r1_star = 3.0;
  const auto k = overlay_constants(p, ch);
  CHECK(min_eigenvalue(k.m_mat.matrix()) >= p.noise_power * (1.0 - 1e-12));
  CHECK(k.psi >= 1.0);
  const double snr = p.p1 * ch.h11.squaredNorm() / p.noise_power;
  CHECK(rel_diff(k.c_star, std::exp2(6.0) - 1.0 - snr) < 1e-12);
  CHECK(rel_diff(k.psi, p.p1 * (ch.ht * ch.h11).squaredNorm() / (p.noise_power * ch.h11.squaredNorm()) + 1.0) < 1e-12);
  CHECK(rel_diff(k.phi, k.psi * (ch.h22 * ch.h21).squaredNorm() / ch.h21.squaredNorm()) < 1e-12);
  // sigma^2 psi = P1 |Ht h11|^2 / |h11|^2 + sigma^2: the two printed power rows coincide
  CHECK(rel_diff(p.noise_power * k.psi, p.p1 * k.g_sq / k.h11_sq + p.noise_power) < 1e-12);
}

TEST_CASE("maximal primary rate") {
  SUBCASE("power-equality example") {
    SystemParams p = unit_params(1, 1, 1);
    p.p1 = 1.0;
    p.noise_power = 1.0;
    p.alpha = 2.0;
    p.p2 = p.alpha;
    ChannelSet ch;
    ch.h11 = CVec::Constant(1, 1.0);
    ch.ht = CMat::Constant(1, 1, 1.0);
    ch.h21 = CVec::Constant(1, 1.0);
    ch.h22 = CMat::Constant(1, 1, 1.0);
    ch.h12 = CMat::Constant(1, 1, 1.0);
    const auto b = max_primary_rate(p, ch);
    CHECK(b.a_scale == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("degenerate channels") {
    Rng eng(52);
    SystemParams p = unit_params(2, 2, 2);
    auto ch = random_channels(eng, p);
    ch.ht.setZero();
    CHECK_THROWS_WITH_AS(max_primary_rate(p, ch), doctest::Contains("DegenerateChannel"), Error);
    ch = random_channels(eng, p);
    ch.h21.setZero();
    CHECK_THROWS_WITH_AS(max_primary_rate(p, ch), doctest::Contains("DegenerateChannel"), Error);
  }
  SUBCASE("relay at full power, rate matches the two-slot formula") {
    Rng eng(53);
    for (int i = 0; i < 50; ++i) {
      SystemParams p = unit_params(2, 2, 2);
      p.p2 = uniform(eng, 0.1, 30.0);
      const auto ch = random_channels(eng, p);
      const auto b = max_primary_rate(p, ch);
      const auto k = overlay_constants(p, ch);
      CHECK(std::abs(relay_power(p, k, b.a_star) - p.p2) <= 1e-9 * p.p2);
      CHECK(rel_diff(b.r_bar, overlay_rates(p, ch, b.a_star, HermitianPSD::zero(2)).r1) < 1e-14);
    }
  }
  SUBCASE("random relay matrices never beat it") {
    Rng eng(54);
    for (int inst = 0; inst < 10; ++inst) {
      SystemParams p = unit_params(2, 2, 2);
      p.p2 = uniform(eng, 0.5, 20.0);
      const auto ch = random_channels(eng, p);
      const auto b = max_primary_rate(p, ch);
      const auto k = overlay_constants(p, ch);
      for (int i = 0; i < 100; ++i) {
        CMat a = random_cn(eng, 2, 2);
        a *= std::sqrt(uniform(eng, 0.0, 1.0) * p.p2 / relay_power(p, k, a));
        CHECK(overlay_rates(p, ch, a, HermitianPSD::zero(2)).r1 <= b.r_bar * (1.0 + 1e-12));
      }
    }
  }
}

TEST_CASE("feasibility check") {
  Rng eng(55);
  SystemParams p;
  ChannelSet ch;
  while (!overlay_instance(eng, p, ch, 0.5)) {
  }
  const double rbar = max_primary_rate(p, ch).r_bar;
  p.r1_star = 0.0;
  CHECK(check_feasibility(p, ch).status == OverlayFeasibility::UnderlayRegime);
  p.r1_star = direct_capacity(p, ch);
  CHECK(check_feasibility(p, ch).status == OverlayFeasibility::UnderlayRegime);
  p.r1_star = rbar;
  CHECK(check_feasibility(p, ch).status == OverlayFeasibility::Feasible);
  CHECK(check_feasibility(p, ch).r_bar == rbar);
  p.r1_star = 2.0 * rbar;
  CHECK(check_feasibility(p, ch).status == OverlayFeasibility::InfeasibleR1Star);
  CHECK(std::string(to_string(OverlayFeasibility::Feasible)) == "Feasible");
}

TEST_CASE("relaying constraint") {
  Rng eng(56);
  SystemParams p;
  ChannelSet ch;
  while (!overlay_instance(eng, p, ch, 0.5)) {
  }
  SUBCASE("no relaying is infeasible") {
    const auto k = overlay_constants(p, ch);
    CHECK(v_constraint_value(p, ch, k, CMat::Zero(2, 2), CMat::Zero(2, 2)) == doctest::Approx(-p.noise_power));
  }
  SUBCASE("tight at the rate-maximizing relay when R1* = r_bar") {
    const auto b = max_primary_rate(p, ch);
    p.r1_star = b.r_bar;
    const auto k = overlay_constants(p, ch);
    const CMat x = b.a_star * k.m_mat.matrix() * b.a_star.adjoint();
    const double v = v_constraint_value(p, ch, k, x, CMat::Zero(2, 2));
    CHECK(std::abs(v) <= 1e-9 * (p.noise_power + (ch.h21.adjoint() * x * ch.h21)(0, 0).real()));
  }
  SUBCASE("the aligned right factor maximizes the forwarded signal") {
    const auto k = overlay_constants(p, ch);
    const CMat m_isqrt = inv_sqrtm_pd(k.m_mat.matrix());
    for (int inst = 0; inst < 20; ++inst) {
      const CMat x = random_psd(eng, 2, uniform(eng, 0.1, 5.0)).matrix();
      const CMat a = recover_relay(p, ch, k, x);
      const double best = std::norm((ch.h21.adjoint() * a * k.g)(0, 0));
      Eigen::SelfAdjointEigenSolver<CMat> es(x);
      const CMat ul = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
      for (int i = 0; i < 100; ++i) {
        const CMat ar = ul * random_unitary(eng, 2).adjoint() * m_isqrt;
        CHECK(std::norm((ch.h21.adjoint() * ar * k.g)(0, 0)) <= best * (1.0 + 1e-10) + 1e-300);
      }
    }
  }
  SUBCASE("holds exactly when the two-slot primary rate meets R1*") {
    const auto k = overlay_constants(p, ch);
    int agree = 0, total = 0;
    for (int i = 0; i < 500; ++i) {
      const CMat x = random_psd(eng, 2, uniform(eng, 0.0, 3.0 * p.p2 / p.alpha)).matrix();
      const auto b = random_psd(eng, 2, uniform(eng, 0.0, 0.2 * p.p2 / p.alpha));
      const double v = v_constraint_value(p, ch, k, x, b.matrix());
      const double r1 = overlay_rates(p, ch, recover_relay(p, ch, k, x), b).r1;
      if (std::abs(r1 - p.r1_star) < 1e-9 * p.r1_star) continue;  // too close to call
      ++total;
      agree += (v >= 0.0) == (r1 >= p.r1_star);
    }
    CHECK(total > 400);
    CHECK(agree == total);
  }
}

TEST_CASE("Taylor minorant of the secondary rate") {
  Rng eng(57);
  for (int inst = 0; inst < 10; ++inst) {
    SystemParams p = unit_params(2, 2, 2);
    const auto ch = random_channels(eng, p);
    const CMat x0 = random_psd(eng, 2, uniform(eng, 0.0, 5.0)).matrix();
    const CMat b0 = random_psd(eng, 2, uniform(eng, 0.0, 5.0)).matrix();
    const auto tb = taylor_lower_bound(x0, p, ch);
    // tight at the expansion point
    CHECK(std::abs(tb.value(p, ch, x0, b0) - overlay_rate_numerator(p, ch, x0, b0)) <= 1e-12);
    // global lower bound
    for (int i = 0; i < 100; ++i) {
      const CMat x = random_psd(eng, 2, uniform(eng, 0.0, 10.0)).matrix();
      const CMat b = random_psd(eng, 2, uniform(eng, 0.0, 10.0)).matrix();
      CHECK(tb.value(p, ch, x, b) <= overlay_rate_numerator(p, ch, x, b) + 1e-10);
    }
    // same first derivative, along random Hermitian directions in X and in B
    for (int i = 0; i < 5; ++i) {
      const CMat dx = random_hermitian(eng, 2), db = random_hermitian(eng, 2);
      const double h = 1e-6 * (1.0 + x0.norm());
      // keep the probe inside the PSD cone for the true rate
      const CMat xs = x0 + CMat::Identity(2, 2) * 2e-6;
      const auto tbs = taylor_lower_bound(xs, p, ch);
      auto ddx = [&](auto f) {
        return (f(xs + h * dx, b0 + h * db) - f(xs - h * dx, b0 - h * db)) / (2.0 * h);
      };
      const double g_true = ddx([&](const CMat& x, const CMat& b) { return overlay_rate_numerator(p, ch, x, b); });
      const double g_bound = ddx([&](const CMat& x, const CMat& b) { return tbs.value(p, ch, x, b); });
      CHECK(std::abs(g_true - g_bound) <= 1e-5 * std::max(1.0, std::abs(g_true)));
    }
    // The program expression and the direct value agree.
    LogDetProgram prog;
    const int xs = prog.add_matrix(2), bs = prog.add_matrix(2);
    ProgramPoint pt;
    pt.mats = {random_psd(eng, 2, 2.0).matrix(), random_psd(eng, 2, 2.0).matrix()};
    CHECK(std::abs(evaluate(tb.expr(p, ch, xs, bs), pt) - tb.value(p, ch, pt.mats[0], pt.mats[1])) <= 1e-10);
  }
}

TEST_CASE("rank-1 linearized bound") {
  Rng eng(58);
  for (int inst = 0; inst < 10; ++inst) {
    SystemParams p = unit_params(2, 2, 2);
    const auto ch = random_channels(eng, p);
    const auto k = overlay_constants(p, ch);
    const double a0 = uniform(eng, 0.0, 5.0);
    const CMat b0 = random_psd(eng, 2, 1.0).matrix();
    CHECK(std::abs(rank1_rate_bound(p, ch, k, a0, a0, b0) - rank1_rate(p, ch, k, a0, b0)) <= 1e-12);
    for (int i = 0; i < 100; ++i) {
      const double a = uniform(eng, 0.0, 20.0);
      const CMat b = random_psd(eng, 2, uniform(eng, 0.0, 10.0)).matrix();
      CHECK(rank1_rate_bound(p, ch, k, a0, a, b) <= rank1_rate(p, ch, k, a, b) + 1e-10);
    }
    const double h = 1e-6 * (1.0 + a0);
    const double g_true = (rank1_rate(p, ch, k, a0 + h, b0) - rank1_rate(p, ch, k, a0 - h, b0)) / (2.0 * h);
    const double g_bound =
        (rank1_rate_bound(p, ch, k, a0, a0 + h, b0) - rank1_rate_bound(p, ch, k, a0, a0 - h, b0)) / (2.0 * h);
    CHECK(std::abs(g_true - g_bound) <= 1e-5 * std::max(1.0, std::abs(g_true)));
    // Rank-1 family equals the general rate at X = rank1_relay_x.
    const double a = uniform(eng, 0.0, 3.0);
    CHECK(std::abs(rank1_rate(p, ch, k, a, b0) - overlay_rate_numerator(p, ch, rank1_relay_x(p, ch, k, a), b0)) <=
          1e-10);
    const CMat ar = rank1_relay_a(ch, k, a);
    CHECK((ar * k.m_mat.matrix() * ar.adjoint() - rank1_relay_x(p, ch, k, a)).norm() <= 1e-10 * (1.0 + a));
  }
}

TEST_CASE("rank-1 minimal relay gain") {
  Rng eng(59);
  SystemParams p;
  ChannelSet ch;
  while (!overlay_instance(eng, p, ch, 0.3)) {
  }
  const auto k = overlay_constants(p, ch);
  const double a_min = rank1_a_min(p, ch, k);
  const double expect =
      k.c_star * p.noise_power * k.h11_sq / (k.h21_sq * (p.p1 * k.g_sq - k.c_star * p.noise_power * k.h11_sq));
  CHECK(rel_diff(a_min, expect) < 1e-12);
  const CMat z = CMat::Zero(2, 2);
  CHECK(std::abs(v_constraint_value(p, ch, k, rank1_relay_x(p, ch, k, a_min), z)) <= 1e-9 * p.noise_power * 10.0);
  CHECK(overlay_rates(p, ch, rank1_relay_a(ch, k, a_min), HermitianPSD::zero(2)).r1 ==
        doctest::Approx(p.r1_star).epsilon(1e-9));

  // A target the relay cannot lift the primary to whatever the gain.
  auto q = p;
  q.r1_star = 0.5 * q.bandwidth *
              std::log2(2.0 + q.p1 * k.h11_sq / q.noise_power + q.p1 * k.g_sq / (q.noise_power * k.h11_sq));
  const auto kq = overlay_constants(q, ch);
  CHECK_THROWS_WITH_AS(rank1_a_min(q, ch, kq), doctest::Contains("Rank1Infeasible"), Error);
}

TEST_CASE("overlay solvers on random instances") {
  Rng eng(60);
  int solved = 0;
  double gap_sum = 0.0;
  for (int attempt = 0; attempt < 40 && solved < 8; ++attempt) {
    SystemParams p;
    ChannelSet ch;
    if (!overlay_instance(eng, p, ch, uniform(eng, 0.1, 0.6))) continue;
    const auto init = default_overlay_init(p, ch);
    const auto k = overlay_constants(p, ch);
    CHECK(v_constraint_value(p, ch, k, init.x, init.b_cov) > 0.0);
    CHECK(p.alpha * (init.x.trace().real() + init.b_cov.trace().real()) <= p.p2 * (1.0 + 1e-12));
    const auto full = solve_overlay_full(p, ch);
    const auto r1 = solve_overlay_rank1(p, ch);
    check_solution(p, ch, full);
    check_solution(p, ch, r1);
    REQUIRE(r1.relay_scale_a.has_value());
    CHECK(!full.relay_scale_a.has_value());
    CHECK(full.trace.objectives.front() <= full.ee * (1.0 + 1e-9));
    const auto g = grid_overlay_rank1(p, ch, 60, 60);
    CHECK(full.ee >= g.ee * (1.0 - 1e-3));
    CHECK(r1.ee >= g.ee * (1.0 - 2e-2));
    gap_sum += (full.ee - r1.ee) / r1.ee;
    ++solved;
  }
  CHECK(solved >= 5);
  CHECK(gap_sum / solved >= -1e-3);
}

TEST_CASE("overlay rate mode and targets") {
  Rng eng(61);
  SystemParams p;
  ChannelSet ch;
  while (!overlay_instance(eng, p, ch, 0.3)) {
  }
  OverlayOptions ro;
  ro.objective = Objective::Rate;
  const auto ee = solve_overlay_full(p, ch);
  const auto rate = solve_overlay_full(p, ch, ro);
  check_solution(p, ch, rate);
  CHECK(rate.r2 >= ee.r2 * (1.0 - 1e-3));
  CHECK(ee.ee >= rate.ee * (1.0 - 1e-3));
  // EE reported with the true cost model in rate mode
  CHECK(rel_diff(rate.ee, rate.r2 / (rate.tx_power + p.p_c)) < 1e-12);

  auto q = p;
  // the default start only spends the power left over after relaying, so aim below its rate
  const auto init = default_overlay_init(p, ch);
  q.r2_star = 0.5 * overlay_r2_from_x(p, ch, HermitianPSD::projected(init.x), HermitianPSD::projected(init.b_cov));
  REQUIRE(q.r2_star > 0.0);
  const auto with_target = solve_overlay_full(q, ch);
  check_solution(q, ch, with_target);
  q.r2_star = 100.0 * rate.r2;
  CHECK_THROWS_WITH_AS(solve_overlay_full(q, ch), doctest::Contains("InitInfeasible"), Error);

  auto u = p;
  u.r1_star = 0.5 * direct_capacity(u, ch);
  CHECK_THROWS_AS(solve_overlay_full(u, ch), Error);
}

TEST_CASE("barely enough power for relaying leaves nothing for the secondary") {
  Rng eng(62);
  SystemParams p;
  ChannelSet ch;
  while (!overlay_instance(eng, p, ch, 0.5)) {
  }
  // Shrink P2 until R1* sits just below r_bar: the relay needs almost everything.
  const double r1 = p.r1_star;
  double lo = 1e-6, hi = p.p2;
  for (int i = 0; i < 60; ++i) {
    p.p2 = std::sqrt(lo * hi);
    (max_primary_rate(p, ch).r_bar >= r1 ? hi : lo) = p.p2;
  }
  p.p2 = hi * (1.0 + 1e-4);
  const auto s = solve_overlay_full(p, ch);
  check_solution(p, ch, s);
  CHECK(s.b_cov.trace() <= 1e-2 * p.p2 / p.alpha);
}
