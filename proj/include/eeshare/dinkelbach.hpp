#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "eeshare/error.hpp"

namespace eeshare {

/// Per-iteration record of a fractional solve or a sequential surrogate loop.
struct FractionalTrace {
  std::vector<double> lambdas;
  std::vector<double> f_values;
  std::vector<double> objectives;
};

template <class Point>
struct SubproblemResult {
  Point point;
  double value;  // max over the feasible set of f - lambda g
};

/// max f(x) / g(x) over a convex set, f concave >= 0, g convex > 0.
template <class Point>
struct FractionalProblem {
  std::function<double(const Point&)> numerator;
  std::function<double(const Point&)> denominator;
  std::function<SubproblemResult<Point>(double lambda)> subproblem;
};

struct DinkelbachOptions {
  double eps = 1e-6;
  int max_iter = 100;
  double lambda0 = 0.0;
};

template <class Point>
struct DinkelbachResult {
  Point point;
  double lambda = 0.0;
  int iterations = 0;  // subproblem solves, including the terminating one
  FractionalTrace trace;
};

/// Newton iteration on F(lambda) = max f - lambda g. Requires F(lambda0) >= 0.
template <class Point>
DinkelbachResult<Point> dinkelbach_solve(const FractionalProblem<Point>& prob, const DinkelbachOptions& opts = {}) {
  DinkelbachResult<Point> out;
  double lambda = opts.lambda0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    SubproblemResult<Point> sub;
    try {
      sub = prob.subproblem(lambda);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Infeasible) throw;
      throw Error(ErrorCode::SubproblemFailed, std::string("at lambda = ") + std::to_string(lambda) + ": " + e.what());
    }
    const double f = prob.numerator(sub.point);
    const double g = prob.denominator(sub.point);
    if (!(g > 0.0)) throw Error(ErrorCode::InvalidArgument, "fractional denominator must be positive");
    out.trace.lambdas.push_back(lambda);
    out.trace.f_values.push_back(sub.value);
    out.trace.objectives.push_back(f / g);
    out.iterations = it;
    out.point = std::move(sub.point);
    if (sub.value <= opts.eps) {
      out.lambda = std::max(lambda, f / g);
      return out;
    }
    lambda = f / g;
  }
  throw Error(ErrorCode::MaxIterExceeded, "Dinkelbach did not reach F(lambda) <= eps");
}

struct SurrogateOptions {
  double eps = 1e-3;            // relative objective change that ends the loop
  int max_iter = 50;
  double monotone_tol = 1e-6;   // relative decrease tolerated as solver noise
};

template <class Point>
struct SurrogateResult {
  Point point;
  double objective = 0.0;
  int iterations = 0;           // surrogate solves, including the confirming one
  bool converged = false;
  FractionalTrace trace;        // objectives[0] is the initial point
};

/// Sequential fractional programming: repeatedly maximize a concave-fractional
/// lower bound built at the current point. Each `step` call receives the current
/// point and returns the maximizer of the surrogate (e.g. via dinkelbach_solve).
/// Throws NonMonotoneObjective when the true objective drops beyond tolerance.
template <class Point>
SurrogateResult<Point> surrogate_loop(const Point& initial, const std::function<Point(const Point&)>& step,
                                      const std::function<double(const Point&)>& objective,
                                      const SurrogateOptions& opts = {}) {
  SurrogateResult<Point> out;
  out.point = initial;
  out.objective = objective(initial);
  out.trace.objectives.push_back(out.objective);
  for (int it = 1; it <= opts.max_iter; ++it) {
    Point next = step(out.point);
    const double obj = objective(next);
    out.iterations = it;
    out.trace.objectives.push_back(obj);
    const double scale = std::max(std::abs(out.objective), std::abs(obj));
    if (obj < out.objective - opts.monotone_tol * scale - 1e-300) {
      throw Error(ErrorCode::NonMonotoneObjective,
                  "surrogate step decreased the objective from " + std::to_string(out.objective) + " to " +
                      std::to_string(obj));
    }
    const bool done = std::abs(obj - out.objective) <= opts.eps * scale;
    if (obj >= out.objective) {
      out.point = std::move(next);
      out.objective = obj;
    }
    if (done) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace eeshare
