#pragma once

#include <optional>

#include "eeshare/dinkelbach.hpp"
#include "eeshare/fractional_program.hpp"
#include "eeshare/model.hpp"

namespace eeshare {

/// Channel-derived constants of the overlay reformulation.
struct OverlayConstants {
  HermitianPSD m_mat;  // relay input covariance
  CVec g;              // Ht h11
  double h11_sq = 0.0;
  double g_sq = 0.0;
  double h21_sq = 0.0;
  double c_star = 0.0; // 2^(2 R1*/B) - 1 - P1 |h11|^2 / sigma^2
  double psi = 0.0;    // P1 |g|^2 / (sigma^2 |h11|^2) + 1
  double phi = 0.0;    // psi |H22 h21|^2 / |h21|^2, 0 when h21 = 0
  double kappa = 0.0;  // coefficient of h21^H X h21 in the relaying constraint; +inf when c* <= 0
};

OverlayConstants overlay_constants(const SystemParams& p, const ChannelSet& ch);

struct PrimaryRateBound {
  double r_bar = 0.0;  // bit/s
  CMat a_star;
  double a_scale = 0.0;
};

/// Largest primary rate reachable with B = 0 and the relay at full power.
/// Throws DegenerateChannel when h21 or Ht h11 vanishes.
PrimaryRateBound max_primary_rate(const SystemParams& p, const ChannelSet& ch);

enum class OverlayFeasibility { Feasible, InfeasibleR1Star, UnderlayRegime };

const char* to_string(OverlayFeasibility f);

struct FeasibilityCheck {
  OverlayFeasibility status = OverlayFeasibility::InfeasibleR1Star;
  double r_bar = 0.0;  // 0 when the channel is degenerate
};

FeasibilityCheck check_feasibility(const SystemParams& p, const ChannelSet& ch);

/// kappa h21^H X h21 - sigma^2 - h21^H (B + X) h21, the relaying constraint (>= 0).
double v_constraint_value(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, const CMat& x,
                          const CMat& b_cov);

/// Same constraint as an affine expression in a program's X and B slots.
ConcaveExpr optimal_v_constraint(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, int x_slot,
                                 int b_slot);

/// Concave minorant of the per-Hz secondary numerator built at x0:
/// log2|s2 I + H22 (X+B) H22^H| - log2|s2 I + H22 X0 H22^H| - tr(M0 (X - X0)) / ln 2,
/// M0 = H22^H (s2 I + H22 X0 H22^H)^-1 H22.
struct TaylorBound {
  CMat x0;
  CMat m0;
  double logdet0 = 0.0;  // log2|s2 I + H22 X0 H22^H|

  double value(const SystemParams& p, const ChannelSet& ch, const CMat& x, const CMat& b_cov) const;
  /// The bound as an expression in a program's X and B slots.
  ConcaveExpr expr(const SystemParams& p, const ChannelSet& ch, int x_slot, int b_slot) const;
};

TaylorBound taylor_lower_bound(const CMat& x0, const SystemParams& p, const ChannelSet& ch);

// Rank-1 relay: X = a sigma^2 psi u u^H with u = h21 / |h21|.

CMat rank1_relay_x(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a);

/// A = sqrt(a) u v^H with v = Ht h11 / |Ht h11|.
CMat rank1_relay_a(const ChannelSet& ch, const OverlayConstants& k, double a);

/// Exact per-Hz secondary numerator on the rank-1 family.
double rank1_rate(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a, const CMat& b_cov);

/// Rank-1 numerator with log2(1 + a phi) linearized at a0.
double rank1_rate_bound(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a0, double a,
                        const CMat& b_cov);

/// Smallest admissible a at B = 0. Throws Rank1Infeasible when no a suffices.
double rank1_a_min(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k);

/// Relay matrix with A M A^H = X, right factor aligned so that the primary rate is
/// maximal over all such A.
CMat recover_relay(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, const CMat& x);

struct OverlayOptions {
  Objective objective = Objective::EnergyEfficiency;
  SurrogateOptions surrogate;
  DinkelbachOptions dinkelbach;
  SolverOptions inner;
};

/// Starting pair for the surrogate loops.
struct OverlayInit {
  CMat x;
  CMat b_cov;
  double rho = 0.0;  // share of P2/alpha given to relaying
};

/// Relay along A*, rho P2/alpha to relaying and the rest spread evenly on B.
/// Throws InitInfeasible when no rho in (0, 1] meets the relaying and R2* rows.
OverlayInit default_overlay_init(const SystemParams& p, const ChannelSet& ch);

struct OverlaySolution {
  HermitianPSD relay_x;
  std::optional<double> relay_scale_a;
  HermitianPSD b_cov;
  CMat relay_a;
  double ee = 0.0;        // bit/J, true alpha and Pc
  double r1 = 0.0;        // bit/s
  double r2 = 0.0;
  double tx_power = 0.0;  // alpha tr(X + B)
  int iterations = 0;     // surrogate solves, including the confirming one
  bool converged = false;
  FractionalTrace trace;  // objectives in reporting units, one entry per point visited
};

/// Full-rank relay: sequence of concave-fractional surrogates in (X, B).
OverlaySolution solve_overlay_full(const SystemParams& p, const ChannelSet& ch, const OverlayOptions& opts = {},
                                   const std::optional<OverlayInit>& init = std::nullopt);

/// Rank-1 relay along A*: sequence of surrogates in (a, B).
OverlaySolution solve_overlay_rank1(const SystemParams& p, const ChannelSet& ch, const OverlayOptions& opts = {},
                                    const std::optional<OverlayInit>& init = std::nullopt);

}  // namespace eeshare
