#pragma once

#include <cmath>
#include <string>

#include "eeshare/linalg.hpp"

namespace eeshare {

/// Link-level constants shared by every allocator. All powers in Watts,
/// rates in bit/s, bandwidth in Hz.
struct SystemParams {
  int n_t1 = 2;
  int n_t2 = 2;
  int n_r = 2;
  double p1 = 0.1;
  double p2 = 0.1;
  double noise_power = 1.0;  // sigma^2
  double bandwidth = 1.0;
  double alpha = 10.0;       // amplifier inefficiency
  double p_c = 1.0;          // static circuit power
  double r1_star = 0.0;
  double r2_star = 0.0;

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;
};

/// Thermal noise plus out-of-system interference: N0 * B * F + I_out.
double noise_power_watts(double n0_dbm_per_hz, double noise_figure_db, double bandwidth_hz,
                         double i_out_watts = 0.0);

inline double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }
inline double watts_to_dbw(double w) { return 10.0 * std::log10(w); }

/// One realization of every channel between the four terminals.
struct ChannelSet {
  CVec h11;  // primary tx -> primary rx, n_t1
  CMat h22;  // secondary tx -> secondary rx, n_r x n_t2
  CMat h12;  // primary tx -> secondary rx, n_r x n_t1
  CVec h21;  // secondary tx -> primary rx, n_t2
  CMat ht;   // primary tx -> secondary tx, n_t2 x n_t1 (overlay only)

  /// Dimension and finiteness check against the antenna counts.
  void validate(const SystemParams& p) const;
};

/// What the allocator maximizes. Rate mode zeroes the amplifier term and sets
/// the static power to one in the objective only; constraints keep the true alpha.
enum class Objective { EnergyEfficiency, Rate };

/// Objective denominator constants (alpha_obj, p_c_obj) for the given mode.
struct CostModel {
  double alpha;
  double p_c;
  static CostModel of(const SystemParams& p, Objective obj) {
    return obj == Objective::Rate ? CostModel{0.0, 1.0} : CostModel{p.alpha, p.p_c};
  }
};

// ---------------------------------------------------------------------------
// Underlay functionals. Every rate is returned in bit/s.

/// Q1 = P1/|h11|^2 * H12 h11 h11^H H12^H
CMat q1_matrix(const SystemParams& p, const ChannelSet& ch);

/// B log2(1 + P1 |h11|^2 / sigma^2): point-to-point primary capacity.
double direct_capacity(const SystemParams& p, const ChannelSet& ch);

double primary_rate_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21,
                             const HermitianPSD& k22);

/// Rate of the primary message at the secondary receiver, interference K22 treated as noise.
double r12_rate(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k22);

/// B log2(1 + P1 |H12 h11|^2 / (sigma^2 |h11|^2)) = r12_rate at K22 = 0.
double r12_at_zero(const SystemParams& p, const ChannelSet& ch);

double secondary_rate_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21,
                               const HermitianPSD& k22);

/// Both algebraic forms of the rate-splitting secondary rate, for cross-checks.
struct SecondaryRateForms {
  double two_summand;   // SIC part + rate-split part
  double total_minus_r12;
};
SecondaryRateForms secondary_rate_underlay_forms(const SystemParams& p, const ChannelSet& ch,
                                                 const HermitianPSD& k21, const HermitianPSD& k22);

/// Secondary EE in bit/Joule: R2 / (alpha tr(K21 + K22) + Pc).
double ee_underlay(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& k21, const HermitianPSD& k22);

// ---------------------------------------------------------------------------
// Overlay (half-duplex amplify-and-forward) functionals.

/// Covariance of the signal seen by the relay: P1/|h11|^2 Ht h11 h11^H Ht^H + sigma^2 I.
CMat relay_input_covariance(const SystemParams& p, const ChannelSet& ch);

struct OverlayRates {
  double r1;
  double r2;
};

/// Primary rate (LMMSE over both slots) and secondary rate, both with the 1/2 pre-log.
OverlayRates overlay_rates(const SystemParams& p, const ChannelSet& ch, const CMat& relay_a, const HermitianPSD& b_cov);

double ee_overlay(const SystemParams& p, const ChannelSet& ch, const CMat& relay_a, const HermitianPSD& b_cov);

/// Secondary overlay rate written in the substituted variable X = A M A^H (bit/s, 1/2 pre-log).
double overlay_r2_from_x(const SystemParams& p, const ChannelSet& ch, const HermitianPSD& x, const HermitianPSD& b_cov);

/// log2|s2 I + H22 (X+B) H22^H| - log2|s2 I + H22 X H22^H| (per Hz, no 1/2 pre-log).
double overlay_rate_numerator(const SystemParams& p, const ChannelSet& ch, const CMat& x, const CMat& b_cov);

}  // namespace eeshare
