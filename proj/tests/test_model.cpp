#include <doctest.h>

#include "eeshare/error.hpp"
#include "eeshare/model.hpp"
#include "support/support.hpp"

using namespace eeshare;
using namespace eeshare::test;

namespace {

// Plain determinant, no Cholesky: an independent evaluation path.
double log2det_plain(const CMat& m) { return std::log2(std::abs(m.determinant().real())); }

}  // namespace

TEST_CASE("noise power from dBm/Hz, noise figure and bandwidth") {
  const double n = noise_power_watts(-174.0, 3.0, 180e3);
  const double expect = std::pow(10.0, (-174.0 - 30.0) / 10.0) * std::pow(10.0, 0.3) * 180e3;
  CHECK(rel_diff(n, expect) < 1e-12);
  CHECK(noise_power_watts(-174.0, 3.0, 180e3, 1e-12) == doctest::Approx(expect + 1e-12).epsilon(1e-12));
}

TEST_CASE("SystemParams validation") {
  SystemParams p = unit_params(2, 2, 2);
  CHECK_NOTHROW(p.validate());
  for (auto mutate : {+[](SystemParams& q) { q.p1 = 0.0; }, +[](SystemParams& q) { q.p2 = -1.0; },
                      +[](SystemParams& q) { q.noise_power = 0.0; }, +[](SystemParams& q) { q.p_c = 0.0; },
                      +[](SystemParams& q) { q.bandwidth = 0.0; }, +[](SystemParams& q) { q.alpha = -1.0; }}) {
    SystemParams q = p;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), Error);
  }
}

TEST_CASE("HermitianPSD validates its input") {
  CMat m(2, 2);
  m << 1.0, cplx(0.0, 1.0), cplx(0.0, 1.0), 1.0;  // not Hermitian
  CHECK_THROWS_AS(HermitianPSD{m}, Error);
  CMat neg = CMat::Identity(2, 2);
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(HermitianPSD{neg}, Error);
  CHECK_NOTHROW(HermitianPSD{CMat::Identity(2, 2)});
  CHECK(HermitianPSD::projected(neg).trace() == doctest::Approx(1.0));
}

TEST_CASE("channel set dimension check") {
  Rng eng(1);
  const auto p = unit_params(2, 2, 2);
  auto ch = random_channels(eng, p);
  CHECK_NOTHROW(ch.validate(p));
  ch.h22 = CMat::Zero(3, 2);
  CHECK_THROWS_AS(ch.validate(p), Error);
}

TEST_CASE("primary rate, underlay") {
  SystemParams p = unit_params(1, 1, 1);
  ChannelSet ch;
  ch.h11 = CVec::Constant(1, std::sqrt(1.5));  // P1 |h11|^2 = 3
  ch.h22 = CMat::Constant(1, 1, 1.0);
  ch.h12 = CMat::Constant(1, 1, 1.0);
  ch.h21 = CVec::Constant(1, 1.0);
  ch.ht = CMat::Constant(1, 1, 1.0);
  const auto z = HermitianPSD::zero(1);
  CHECK(primary_rate_underlay(p, ch, z, z) == doctest::Approx(2.0).epsilon(1e-14));

  SUBCASE("null cross channel ignores the secondary covariances") {
    Rng eng(2);
    const auto q = unit_params(2, 3, 2);
    auto c = random_channels(eng, q);
    const double base = primary_rate_underlay(q, c, HermitianPSD::zero(3), HermitianPSD::zero(3));
    c.h21.setZero();
    const double with = primary_rate_underlay(q, c, random_psd(eng, 3, 4.0), random_psd(eng, 3, 4.0));
    CHECK(with == doctest::Approx(primary_rate_underlay(q, c, HermitianPSD::zero(3), HermitianPSD::zero(3))));
    CHECK(base > 0.0);
  }

  SUBCASE("matches a scalarized evaluation on random instances") {
    Rng eng(3);
    for (int i = 0; i < 50; ++i) {
      auto q = unit_params(2, 2, 2);
      q.bandwidth = 180e3;
      const auto c = random_channels(eng, q);
      const auto k21 = random_psd(eng, 2, 3.0), k22 = random_psd(eng, 2, 2.0);
      double interf = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          interf += (std::conj(c.h21(a)) * (k21.matrix()(a, b) + k22.matrix()(a, b)) * c.h21(b)).real();
      const double snr = q.p1 * c.h11.squaredNorm() / (q.noise_power + interf);
      CHECK(rel_diff(primary_rate_underlay(q, c, k21, k22), q.bandwidth * std::log2(1.0 + snr)) < 1e-12);
    }
  }
}

TEST_CASE("r12 rate") {
  Rng eng(4);
  const auto p = unit_params(2, 2, 2);
  const auto ch = random_channels(eng, p);
  const double closed = std::log2(1.0 + p.p1 * (ch.h12 * ch.h11).squaredNorm() / (p.noise_power * ch.h11.squaredNorm()));
  CHECK(rel_diff(r12_rate(p, ch, HermitianPSD::zero(2)), closed) < 1e-12);
  CHECK(rel_diff(r12_at_zero(p, ch), closed) < 1e-12);

  auto c0 = ch;
  c0.h12.setZero();
  CHECK(r12_rate(p, c0, random_psd(eng, 2, 1.0)) == doctest::Approx(0.0));

  SUBCASE("nonincreasing along PSD-increasing chains") {
    for (int i = 0; i < 200; ++i) {
      const auto c = random_channels(eng, p);
      const auto k = random_psd(eng, 2, uniform(eng, 0.0, 5.0));
      const double e1 = uniform(eng, 0.0, 1.0), e2 = e1 + uniform(eng, 1e-3, 1.0);
      const double r0 = r12_rate(p, c, k);
      const double r1 = r12_rate(p, c, k + HermitianPSD::identity(2, e1));
      const double r2 = r12_rate(p, c, k + HermitianPSD::identity(2, e2));
      CHECK(r1 <= r0 + 1e-12);
      CHECK(r2 <= r1 + 1e-12);
    }
  }
}

TEST_CASE("secondary rate, both algebraic forms") {
  Rng eng(5);
  SUBCASE("trivial cases") {
    const auto p = unit_params(2, 2, 2);
    auto ch = random_channels(eng, p);
    CHECK(secondary_rate_underlay(p, ch, HermitianPSD::zero(2), HermitianPSD::zero(2)) == doctest::Approx(0.0));
    ch.h12.setZero();
    const auto k22 = random_psd(eng, 2, 2.0);
    const double expect = log2det_plain(CMat::Identity(2, 2) + ch.h22 * k22.matrix() * ch.h22.adjoint() / p.noise_power);
    CHECK(rel_diff(secondary_rate_underlay(p, ch, HermitianPSD::zero(2), k22), expect) < 1e-10);
  }
  SUBCASE("forms agree on 1000 random instances") {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      auto p = unit_params(2, 2, 2);
      p.p1 = uniform(eng, 0.1, 10.0);
      const auto ch = random_channels(eng, p);
      const auto f = secondary_rate_underlay_forms(p, ch, random_psd(eng, 2, uniform(eng, 0.0, 5.0)),
                                                   random_psd(eng, 2, uniform(eng, 0.0, 5.0)));
      worst = std::max(worst, std::abs(f.two_summand - f.total_minus_r12) / std::max(1.0, std::abs(f.two_summand)));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("underlay energy efficiency") {
  Rng eng(6);
  auto p = unit_params(2, 2, 2);
  const auto ch = random_channels(eng, p);
  const auto k21 = random_psd(eng, 2, 1.0), k22 = random_psd(eng, 2, 1.5);
  CHECK(ee_underlay(p, ch, HermitianPSD::zero(2), HermitianPSD::zero(2)) == 0.0);

  const double r2 = secondary_rate_underlay(p, ch, k21, k22);
  CHECK(rel_diff(ee_underlay(p, ch, k21, k22), r2 / (p.alpha * 2.5 + p.p_c)) < 1e-12);

  auto rate_mode = p;
  rate_mode.alpha = 0.0;
  rate_mode.p_c = 1.0;
  CHECK(rel_diff(ee_underlay(rate_mode, ch, k21, k22), r2) < 1e-12);
  auto doubled = rate_mode;
  doubled.p_c = 2.0;
  CHECK(rel_diff(ee_underlay(doubled, ch, k21, k22), 0.5 * r2) < 1e-12);

  double prev = ee_underlay(p, ch, k21, k22);
  for (double pc : {1.5, 2.0, 4.0}) {
    auto q = p;
    q.p_c = pc;
    const double e = ee_underlay(q, ch, k21, k22);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("overlay rates and energy efficiency") {
  Rng eng(7);
  auto p = unit_params(2, 2, 2);
  const auto ch = random_channels(eng, p);
  const CMat a0 = CMat::Zero(2, 2);
  const auto r = overlay_rates(p, ch, a0, HermitianPSD::zero(2));
  CHECK(rel_diff(r.r1, 0.5 * std::log2(1.0 + p.p1 * ch.h11.squaredNorm() / p.noise_power)) < 1e-12);
  CHECK(r.r2 == 0.0);
  CHECK(ee_overlay(p, ch, a0, HermitianPSD::zero(2)) == 0.0);

  const CMat a = random_cn(eng, 2, 2);
  CHECK(overlay_rates(p, ch, a, HermitianPSD::zero(2)).r2 == doctest::Approx(0.0));

  SUBCASE("substitution identity for the denominator") {
    for (int i = 0; i < 100; ++i) {
      const CMat ai = random_cn(eng, 2, 2) * 0.3;
      const auto b = random_psd(eng, 2, uniform(eng, 0.0, 2.0));
      const CMat x = ai * relay_input_covariance(p, ch) * ai.adjoint();
      const double r2 = overlay_rates(p, ch, ai, b).r2;
      const double denom = p.alpha * (x.trace().real() + b.trace()) + p.p_c;
      CHECK(std::abs(r2 / ee_overlay(p, ch, ai, b) - denom) <= 1e-10 * denom);
      CHECK(rel_diff(overlay_r2_from_x(p, ch, HermitianPSD::projected(x), b), r2) < 1e-10);
    }
  }

  SUBCASE("primary rate matches an explicit two-slot evaluation") {
    for (int i = 0; i < 50; ++i) {
      const CMat ai = random_cn(eng, 2, 2) * 0.5;
      const auto b = random_psd(eng, 2, 1.0);
      // Stack both slots: y = [h11^H x1 + n; h21^H A (Ht x1 + n_r) + h21^H s_b + n].
      const double s2 = p.noise_power, h11sq = ch.h11.squaredNorm();
      const CVec w = ch.h11 / std::sqrt(h11sq);  // MRT beam
      Eigen::Vector2cd gain;
      gain(0) = std::sqrt(p.p1) * (ch.h11.adjoint() * w)(0, 0);
      gain(1) = std::sqrt(p.p1) * (ch.h21.adjoint() * ai * ch.ht * w)(0, 0);
      Eigen::Matrix2cd noise = Eigen::Matrix2cd::Zero();
      noise(0, 0) = s2;
      noise(1, 1) = s2 + s2 * (ai.adjoint() * ch.h21).squaredNorm() + b.quad(ch.h21);
      const double snr = (gain.adjoint() * noise.inverse() * gain)(0, 0).real();
      CHECK(rel_diff(overlay_rates(p, ch, ai, b).r1, 0.5 * std::log2(1.0 + snr)) < 1e-10);
    }
  }

  SUBCASE("rates scale linearly with bandwidth") {
    const CMat ai = random_cn(eng, 2, 2) * 0.5;
    const auto b = random_psd(eng, 2, 1.0);
    const auto base = overlay_rates(p, ch, ai, b);
    auto q = p;
    q.bandwidth = 180e3;
    const auto wide = overlay_rates(q, ch, ai, b);
    CHECK(rel_diff(wide.r1, 180e3 * base.r1) < 1e-12);
    CHECK(rel_diff(wide.r2, 180e3 * base.r2) < 1e-12);
    const auto k = random_psd(eng, 2, 1.0);
    CHECK(rel_diff(secondary_rate_underlay(q, ch, k, k), 180e3 * secondary_rate_underlay(p, ch, k, k)) < 1e-12);
  }

  SUBCASE("strictly decreasing in the static power") {
    const CMat ai = random_cn(eng, 2, 2) * 0.5;
    const auto b = random_psd(eng, 2, 1.0);
    auto q = p;
    double prev = ee_overlay(q, ch, ai, b);
    REQUIRE(prev > 0.0);
    for (double pc : {1.5, 3.0}) {
      q.p_c = pc;
      const double e = ee_overlay(q, ch, ai, b);
      CHECK(e < prev);
      prev = e;
    }
  }
}
