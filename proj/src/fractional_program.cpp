#include "eeshare/fractional_program.hpp"

#include "eeshare/error.hpp"

namespace eeshare {

FractionalSolution solve_fractional(const FractionalLogDet& fp, const DinkelbachOptions& dopts,
                                    const SolverOptions& sopts) {
  const auto feas = fp.prog.find_feasible(sopts);
  FractionalSolution out;
  if (feas.status != FeasibilityStatus::Feasible) {
    const ProgramPoint zero = fp.prog.zero_point();
    if (feas.status == FeasibilityStatus::Infeasible || fp.prog.min_constraint(zero) < -1e-12)
      throw Error(ErrorCode::Infeasible, "fractional program has no feasible point");
    out.point = zero;
    out.ratio = evaluate(fp.numerator, zero) / evaluate(fp.denominator, zero);
    out.iterations = 0;
    return out;
  }

  LogDetProgram work = fp.prog;
  FractionalProblem<ProgramPoint> prob;
  prob.numerator = [&](const ProgramPoint& p) { return evaluate(fp.numerator, p); };
  prob.denominator = [&](const ProgramPoint& p) { return evaluate(fp.denominator, p); };
  prob.subproblem = [&](double lambda) {
    ConcaveExpr obj = fp.numerator;
    obj.add(fp.denominator, -lambda);
    work.set_objective(std::move(obj));
    auto sol = work.solve(sopts, &feas.interior);
    return SubproblemResult<ProgramPoint>{std::move(sol.point), sol.value};
  };
  auto res = dinkelbach_solve(prob, dopts);
  out.point = std::move(res.point);
  out.ratio = res.lambda;
  out.iterations = res.iterations;
  out.trace = std::move(res.trace);
  return out;
}

}  // namespace eeshare
