#include "eeshare/model.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "eeshare/error.hpp"

namespace eeshare {

void SystemParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(n_t1 >= 1 && n_t2 >= 1 && n_r >= 1, "antenna counts must be positive");
  require(p1 > 0.0 && std::isfinite(p1), "p1 must be positive");
  require(p2 >= 0.0 && std::isfinite(p2), "p2 must be nonnegative");
  require(noise_power > 0.0 && std::isfinite(noise_power), "noise power must be positive");
  require(p_c > 0.0 && std::isfinite(p_c), "p_c must be positive");
  require(bandwidth > 0.0 && std::isfinite(bandwidth), "bandwidth must be positive");
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be nonnegative");
  require(r1_star >= 0.0 && std::isfinite(r1_star), "r1_star must be nonnegative");
  require(r2_star >= 0.0 && std::isfinite(r2_star), "r2_star must be nonnegative");
}

double noise_power_watts(double n0_dbm_per_hz, double noise_figure_db, double bandwidth_hz, double i_out_watts) {
  const double n0_w = std::pow(10.0, (n0_dbm_per_hz - 30.0) / 10.0);
  return n0_w * bandwidth_hz * std::pow(10.0, noise_figure_db / 10.0) + i_out_watts;
}

void ChannelSet::validate(const SystemParams& p) const {
  auto dims = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
  };
  dims(h11.size() == p.n_t1, "h11 must have n_t1 entries");
  dims(h22.rows() == p.n_r && h22.cols() == p.n_t2, "h22 must be n_r x n_t2");
  dims(h12.rows() == p.n_r && h12.cols() == p.n_t1, "h12 must be n_r x n_t1");
  dims(h21.size() == p.n_t2, "h21 must have n_t2 entries");
  dims(ht.size() == 0 || (ht.rows() == p.n_t2 && ht.cols() == p.n_t1), "ht must be n_t2 x n_t1");
  if (!(h11.allFinite() && h22.allFinite() && h12.allFinite() && h21.allFinite() && ht.allFinite()))
    throw Error(ErrorCode::InvalidArgument, "channel entries must be finite");
  if (h11.norm() == 0.0) throw Error(ErrorCode::DegenerateChannel, "primary direct channel is zero");
}

namespace {

void check_cov(const SystemParams& p, const HermitianPSD& k, const char* name) {
  if (k.dim() != p.n_t2)
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be n_t2 x n_t2");
}

CMat noise_eye(const SystemParams& p, Eigen::Index n) { return CMat::Identity(n, n) * p.noise_power; }

// log2|s2 I + H K H^H + extra|
double log2det_noise_plus(const SystemParams& p, const CMat& h, const CMat& k, const CMat& extra) {
  CMat y = noise_eye(p, h.rows()) + h * k * h.adjoint() + extra;
  return log2det_hpd(hermitize(y));
}

}  // namespace

CMat q1_matrix(const SystemParams& p, const ChannelSet& ch) {
  const CVec g = ch.h12 * ch.h11;
  return hermitize(g * g.adjoint() * (p.p1 / ch.h11.squaredNorm()));
}

double direct_capacity(const SystemParams& p, const ChannelSet& ch) {
  return p.bandwidth * std::log2(1.0 + p.p1 * ch.h11.squaredNorm() / p.noise_power);
}

double primary_rate_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21,
                             const HermitianPSD& k22) {
  ch.validate(p);
  check_cov(p, k21, "k21");
  check_cov(p, k22, "k22");
  const double interference = std::max(0.0, (k21 + k22).quad(ch.h21));
  return p.bandwidth * std::log2(1.0 + p.p1 * ch.h11.squaredNorm() / (p.noise_power + interference));
}

double r12_rate(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k22) {
  ch.validate(p);
  check_cov(p, k22, "k22");
  const CMat q1 = q1_matrix(p, ch);
  const CMat zero = CMat::Zero(p.n_r, p.n_r);
  const double v = log2det_noise_plus(p, ch.h22, k22.matrix(), q1) - log2det_noise_plus(p, ch.h22, k22.matrix(), zero);
  return p.bandwidth * std::max(0.0, v);
}

double r12_at_zero(const SystemParams& p, const ChannelSet& ch) {
  const double gain = (ch.h12 * ch.h11).squaredNorm() / ch.h11.squaredNorm();
  return p.bandwidth * std::log2(1.0 + p.p1 * gain / p.noise_power);
}

SecondaryRateForms secondary_rate_underlay_forms(const SystemParams& p, const ChannelSet& ch,
                                                 const HermitianPSD& k21, const HermitianPSD& k22) {
  ch.validate(p);
  check_cov(p, k21, "k21");
  check_cov(p, k22, "k22");
  const CMat q1 = q1_matrix(p, ch);
  const CMat zero = CMat::Zero(p.n_r, p.n_r);
  const CMat total = k21.matrix() + k22.matrix();
  const double nlog_s2 = p.n_r * std::log2(p.noise_power);

  const double sic = log2det_noise_plus(p, ch.h22, k22.matrix(), zero) - nlog_s2;
  const double split = log2det_noise_plus(p, ch.h22, total, q1) - log2det_noise_plus(p, ch.h22, k22.matrix(), q1);

  const double all = log2det_noise_plus(p, ch.h22, total, q1) - nlog_s2;
  const double r12 = log2det_noise_plus(p, ch.h22, k22.matrix(), q1) - log2det_noise_plus(p, ch.h22, k22.matrix(), zero);
  return {p.bandwidth * (sic + split), p.bandwidth * (all - r12)};
}

double secondary_rate_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21,
                               const HermitianPSD& k22) {
  const auto forms = secondary_rate_underlay_forms(p, ch, k21, k22);
  assert(std::abs(forms.two_summand - forms.total_minus_r12) <=
         1e-8 * (1.0 + std::abs(forms.two_summand)) && "rate-splitting forms disagree");
  return std::max(0.0, forms.total_minus_r12);
}

double ee_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21, const HermitianPSD& k22) {
  const double r2 = secondary_rate_underlay(p, ch, k21, k22);
  return r2 / (p.alpha * (k21.trace() + k22.trace()) + p.p_c);
}

CMat relay_input_covariance(const SystemParams& p, const ChannelSet& ch) {
  if (ch.ht.size() == 0) throw Error(ErrorCode::DimensionMismatch, "overlay requires the Ht channel");
  const CVec g = ch.ht * ch.h11;
  return hermitize(g * g.adjoint() * (p.p1 / ch.h11.squaredNorm()) + noise_eye(p, p.n_t2));
}

namespace {

void check_relay(const SystemParams& p, const ChannelSet& ch, const CMat& a, const HermitianPSD& b) {
  ch.validate(p);
  if (ch.ht.size() == 0) throw Error(ErrorCode::DimensionMismatch, "overlay requires the Ht channel");
  if (a.rows() != p.n_t2 || a.cols() != p.n_t2) throw Error(ErrorCode::DimensionMismatch, "relay matrix must be n_t2 x n_t2");
  check_cov(p, b, "b_cov");
}

}  // namespace

double overlay_rate_numerator(const SystemParams& p, const ChannelSet& ch, const CMat& x, const CMat& b_cov) {
  const CMat zero = CMat::Zero(p.n_r, p.n_r);
  return log2det_noise_plus(p, ch.h22, x + b_cov, zero) - log2det_noise_plus(p, ch.h22, x, zero);
}

OverlayRates overlay_rates(const SystemParams& p, const ChannelSet& ch, const CMat& relay_a, const HermitianPSD& b_cov) {
  check_relay(p, ch, relay_a, b_cov);
  const double h11sq = ch.h11.squaredNorm();
  const CVec g = ch.ht * ch.h11;
  const cplx forwarded = (ch.h21.adjoint() * relay_a * g)(0, 0);
  const double relay_noise = p.noise_power * (relay_a.adjoint() * ch.h21).squaredNorm();
  const double denom = p.noise_power + relay_noise + b_cov.quad(ch.h21);
  const double snr = p.p1 * h11sq / p.noise_power + (p.p1 / h11sq) * std::norm(forwarded) / denom;
  const double r1 = 0.5 * p.bandwidth * std::log2(1.0 + snr);

  const CMat x = hermitize(relay_a * relay_input_covariance(p, ch) * relay_a.adjoint());
  const double r2 = 0.5 * p.bandwidth * std::max(0.0, overlay_rate_numerator(p, ch, x, b_cov.matrix()));
  return {r1, r2};
}

double ee_overlay(const SystemParams& p, const ChannelSet& ch, const CMat& relay_a, const HermitianPSD& b_cov) {
  const auto rates = overlay_rates(p, ch, relay_a, b_cov);
  const CMat x = relay_a * relay_input_covariance(p, ch) * relay_a.adjoint();
  return rates.r2 / (p.alpha * (x.trace().real() + b_cov.trace()) + p.p_c);
}

double overlay_r2_from_x(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& x, const HermitianPSD& b_cov) {
  ch.validate(p);
  check_cov(p, x, "relay_x");
  check_cov(p, b_cov, "b_cov");
  return 0.5 * p.bandwidth * std::max(0.0, overlay_rate_numerator(p, ch, x.matrix(), b_cov.matrix()));
}

}  // namespace eeshare
