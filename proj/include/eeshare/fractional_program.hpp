#pragma once

#include "eeshare/dinkelbach.hpp"
#include "eeshare/logdet_program.hpp"

namespace eeshare {

/// max numerator / denominator over the constraint set of `prog`, with a concave
/// numerator and an affine positive denominator, both in the program's slots.
struct FractionalLogDet {
  LogDetProgram prog;  // constraints only; the objective is set per lambda
  ConcaveExpr numerator;
  ConcaveExpr denominator;
};

struct FractionalSolution {
  ProgramPoint point;
  double ratio = 0.0;
  int iterations = 0;
  FractionalTrace trace;
};

/// Dinkelbach over the inner barrier solver. Phase I runs once and its point
/// warm-starts every lambda, since the feasible set does not depend on lambda.
/// Throws Infeasible when no feasible point exists; a set without interior that
/// contains the zero point returns the zero point.
FractionalSolution solve_fractional(const FractionalLogDet& fp, const DinkelbachOptions& dopts = {},
                                    const SolverOptions& sopts = {});

}  // namespace eeshare
