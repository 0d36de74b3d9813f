#pragma once

#include <optional>

#include "eeshare/model.hpp"

namespace eeshare {

struct ScalarGridResult {
  double p21 = 0.0;
  double p22 = 0.0;
  double ee = 0.0;         // objective: bit/J, or bit/s in rate mode
  double r2 = 0.0;         // bit/s
  bool feasible = false;
};

/// Exhaustive search over (p21, p22) in [0, p_max]^2 on a grid_n x grid_n lattice,
/// p_max = min(P2/alpha, P_int/|h21|^2). Single-antenna links only. A point is
/// feasible when the power, primary-rate and secondary-rate constraints hold and,
/// if p22 > 0, the secondary receiver can decode the primary message.
/// The objective follows `obj` (rate mode: alpha = 0, Pc = 1).
ScalarGridResult grid_underlay_scalar(const SystemParams& p, const ChannelSet& ch, int grid_n = 400,
                                      Objective obj = Objective::EnergyEfficiency);

struct Rank1GridResult {
  double a = 0.0;
  int b_dir_index = -1;    // index into the direction codebook, -1 for B = 0
  double b_power = 0.0;
  double ee = 0.0;
  CVec b_dir;
  bool feasible = false;
};

/// 64 unit vectors in C^2: (cos t, e^{i f} sin t) on an 8 x 8 grid of (t, f).
std::vector<CVec> direction_codebook_c2();

/// Rank-1 relay search: a on an a-grid, B = beta u u^H with u from the codebook
/// (plus `extra_dir` when given) and beta on a grid. Primary-rate feasibility is
/// evaluated with the exact two-slot rate expression. Requires n_t2 <= 2.
Rank1GridResult grid_overlay_rank1(const SystemParams& p, const ChannelSet& ch, int a_grid = 100, int beta_grid = 100,
                                   const std::optional<CVec>& extra_dir = std::nullopt);

/// Capacity-achieving covariance of log2|I + N^{-1/2} H K H^H N^{-1/2}| under tr(K) <= budget.
HermitianPSD waterfill(const CMat& h, const CMat& noise_cov, double budget);

}  // namespace eeshare
