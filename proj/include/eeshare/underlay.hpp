#pragma once

#include <optional>

#include "eeshare/dinkelbach.hpp"
#include "eeshare/fractional_program.hpp"
#include "eeshare/model.hpp"

namespace eeshare {

enum class UnderlayCase { Case1_NoSIC, Case2_FullSIC, Case3_RateSplit };

const char* to_string(UnderlayCase c);

struct CaseThresholds {
  double r12_at_zero = 0.0;      // bit/s
  double case2_threshold = 0.0;  // bit/s, r12 at Sigma*; equals r12_at_zero when Case 1 is chosen
  double p_int = 0.0;            // W, +inf when R1* = 0
};

struct UnderlayOptions {
  Objective objective = Objective::EnergyEfficiency;
  DinkelbachOptions dinkelbach;  // eps in per-Hz rate units
  SolverOptions inner;
};

struct UnderlaySolution {
  HermitianPSD k21;
  HermitianPSD k22;
  UnderlayCase case_tag = UnderlayCase::Case1_NoSIC;
  double ee = 0.0;        // bit/J with the true alpha and Pc
  double r1 = 0.0;        // bit/s
  double r2 = 0.0;
  double r12 = 0.0;
  double tx_power = 0.0;  // alpha tr(k21 + k22)
  std::optional<double> gamma;
  std::optional<HermitianPSD> k21_hat;  // Case 3 only: solution of the relaxed program
  std::optional<HermitianPSD> k22_hat;
  CaseThresholds thresholds;
  int iterations = 0;     // Dinkelbach subproblem solves over all programs
  FractionalTrace trace;  // of the program that produced the answer
};

/// P1 |h11|^2 / (2^(R1*/B) - 1) - sigma^2; +inf when R1* = 0.
/// Throws R1StarExceedsDirectCapacity when R1* exceeds the direct-link capacity.
double compute_p_int(const SystemParams& p, const ChannelSet& ch);

/// The three case programs, exposed for tests. Slot indices are returned through
/// the struct; a slot that the case fixes at zero is -1.
struct UnderlayProgram {
  FractionalLogDet fp;
  int k21 = -1;
  int k22 = -1;
};

UnderlayProgram build_case1_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj);
UnderlayProgram build_case2_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj);
UnderlayProgram build_case3_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj);

struct CaseSelection {
  UnderlayCase tag = UnderlayCase::Case1_NoSIC;
  CaseThresholds thresholds;
  std::optional<UnderlaySolution> sigma_star;  // Case 2 program solution, when it was solved
};

CaseSelection select_case(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts = {});

UnderlaySolution solve_case1(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts = {});
UnderlaySolution solve_case2(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts = {});
UnderlaySolution solve_case3(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts = {});

/// Globally optimal secondary covariances for the underlay problem.
UnderlaySolution allocate_underlay(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts = {});

}  // namespace eeshare
