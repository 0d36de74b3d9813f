#include "eeshare/underlay.hpp"

#include <cmath>
#include <limits>

#include "eeshare/error.hpp"

namespace eeshare {

const char* to_string(UnderlayCase c) {
  switch (c) {
    case UnderlayCase::Case1_NoSIC: return "Case1_NoSIC";
    case UnderlayCase::Case2_FullSIC: return "Case2_FullSIC";
    case UnderlayCase::Case3_RateSplit: return "Case3_RateSplit";
  }
  return "?";
}

double compute_p_int(const SystemParams& p, const ChannelSet& ch) {
  p.validate();
  ch.validate(p);
  const double cap = direct_capacity(p, ch);
  if (p.r1_star > cap * (1.0 + 1e-12))
    throw Error(ErrorCode::R1StarExceedsDirectCapacity,
                "R1* = " + std::to_string(p.r1_star) + " exceeds the direct capacity " + std::to_string(cap));
  if (p.r1_star == 0.0) return std::numeric_limits<double>::infinity();
  const double denom = std::exp2(p.r1_star / p.bandwidth) - 1.0;
  return std::max(0.0, p.p1 * ch.h11.squaredNorm() / denom - p.noise_power);
}

namespace {

// Per-Hz rate tolerance for constraint post-checks.
double rate_tol(const SystemParams& p) { return 1e-6 * (1.0 + p.r1_star / p.bandwidth); }

struct Layout {
  double scale = 0.0;
  CMat embed;               // empty: full space
  bool interference_row = false;  // emit the P_int row
  bool forced_zero = false; // no admissible direction at all
};

Layout layout_for(const SystemParams& p, const ChannelSet& ch, double p_int) {
  Layout l;
  l.scale = p.p2 / p.alpha;
  const bool bounded = std::isfinite(p_int) && ch.h21.squaredNorm() > 0.0;
  if (p.p2 == 0.0) {
    l.forced_zero = true;
  } else if (bounded && p_int < 1e-12 * p.noise_power) {
    // Zero tolerable interference: the covariance must live orthogonally to h21.
    if (p.n_t2 == 1)
      l.forced_zero = true;
    else
      l.embed = orthogonal_complement(ch.h21);
  } else {
    l.interference_row = bounded;
  }
  return l;
}

void require_allocator_params(const SystemParams& p, const ChannelSet& ch) {
  p.validate();
  ch.validate(p);
  if (!(p.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "allocators require alpha > 0");
}

ConcaveExpr denominator_expr(const SystemParams& p, Objective obj, std::initializer_list<int> slots) {
  const auto cost = CostModel::of(p, obj);
  ConcaveExpr d;
  d.add_constant(cost.p_c);
  for (int s : slots) d.add_trace(s, cost.alpha);
  return d;
}

void add_common_rows(LogDetProgram& prog, const SystemParams& p, const ChannelSet& ch, double p_int,
                     const Layout& l, std::initializer_list<int> slots) {
  ConcaveExpr power;
  power.add_constant(p.p2);
  for (int s : slots) power.add_trace(s, -p.alpha);
  prog.add_constraint(power, "power");
  if (l.interference_row) {
    ConcaveExpr itf;
    itf.add_constant(p_int);
    for (int s : slots) itf.add_quad(s, ch.h21, -1.0);
    prog.add_constraint(itf, "interference");
  }
}

void add_r2_row(LogDetProgram& prog, const SystemParams& p, const ConcaveExpr& rate) {
  if (p.r2_star <= 0.0) return;
  ConcaveExpr r = rate;
  r.add_constant(-p.r2_star / p.bandwidth);
  prog.add_constraint(r, "secondary_rate");
}

CMat noise_eye(const SystemParams& p) { return CMat::Identity(p.n_r, p.n_r) * p.noise_power; }

UnderlaySolution finish(const SystemParams& p, const ChannelSet& ch, const CMat& k21, const CMat& k22,
                        UnderlayCase tag) {
  UnderlaySolution s;
  s.k21 = HermitianPSD::projected(k21);
  s.k22 = HermitianPSD::projected(k22);
  s.case_tag = tag;
  s.r1 = primary_rate_underlay(p, ch, s.k21, s.k22);
  s.r2 = secondary_rate_underlay(p, ch, s.k21, s.k22);
  s.r12 = r12_rate(p, ch, s.k22);
  s.tx_power = p.alpha * (s.k21.trace() + s.k22.trace());
  s.ee = s.r2 / (s.tx_power + p.p_c);
  return s;
}

FractionalSolution run(const UnderlayProgram& up, const UnderlayOptions& opts) {
  try {
    return solve_fractional(up.fp, opts.dinkelbach, opts.inner);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Infeasible)
      throw Error(ErrorCode::R2StarInfeasible, "secondary rate target cannot be met: " + std::string(e.what()));
    throw;
  }
}

void check_r2(const SystemParams& p, const UnderlaySolution& s) {
  if (s.r2 / p.bandwidth < p.r2_star / p.bandwidth - rate_tol(p))
    throw Error(ErrorCode::R2StarInfeasible, "secondary rate target cannot be met");
}

}  // namespace

UnderlayProgram build_case1_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj) {
  const Layout l = layout_for(p, ch, p_int);
  UnderlayProgram up;
  if (l.forced_zero) return up;
  auto& prog = up.fp.prog;
  up.k21 = prog.add_matrix(p.n_t2, l.scale, l.embed);
  const CMat nq = noise_eye(p) + q1_matrix(p, ch);
  ConcaveExpr rate;
  rate.add_log2det(1.0, nq, {{up.k21, ch.h22}}).add_constant(-log2det_hpd(nq));
  add_common_rows(prog, p, ch, p_int, l, {up.k21});
  add_r2_row(prog, p, rate);
  up.fp.numerator = rate;
  up.fp.denominator = denominator_expr(p, obj, {up.k21});
  return up;
}

UnderlayProgram build_case2_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj) {
  const Layout l = layout_for(p, ch, p_int);
  UnderlayProgram up;
  if (l.forced_zero) return up;
  auto& prog = up.fp.prog;
  up.k22 = prog.add_matrix(p.n_t2, l.scale, l.embed);
  ConcaveExpr rate;
  rate.add_log2det(1.0, noise_eye(p), {{up.k22, ch.h22}}).add_constant(-p.n_r * std::log2(p.noise_power));
  add_common_rows(prog, p, ch, p_int, l, {up.k22});
  add_r2_row(prog, p, rate);
  up.fp.numerator = rate;
  up.fp.denominator = denominator_expr(p, obj, {up.k22});
  return up;
}

UnderlayProgram build_case3_program(const SystemParams& p, const ChannelSet& ch, double p_int, Objective obj) {
  const Layout l = layout_for(p, ch, p_int);
  UnderlayProgram up;
  if (l.forced_zero) return up;
  auto& prog = up.fp.prog;
  up.k21 = prog.add_matrix(p.n_t2, l.scale, l.embed);
  up.k22 = prog.add_matrix(p.n_t2, l.scale, l.embed);
  const CMat q1 = q1_matrix(p, ch);
  const double r1n = p.r1_star / p.bandwidth;

  ConcaveExpr rate;
  rate.add_log2det(1.0, noise_eye(p) + q1, {{up.k21, ch.h22}, {up.k22, ch.h22}})
      .add_constant(-p.n_r * std::log2(p.noise_power) - r1n);
  add_common_rows(prog, p, ch, p_int, l, {up.k21, up.k22});

  // R1* - r12(K22) >= 0: concave because r12 is convex in K22.
  ConcaveExpr sic;
  sic.add_constant(r1n)
      .add_log2det(-1.0, noise_eye(p) + q1, {{up.k22, ch.h22}})
      .add_log2det(1.0, noise_eye(p), {{up.k22, ch.h22}});
  prog.add_constraint(sic, "sic");
  add_r2_row(prog, p, rate);
  up.fp.numerator = rate;
  up.fp.denominator = denominator_expr(p, obj, {up.k21, up.k22});
  return up;
}

namespace {

UnderlaySolution zero_solution(const SystemParams& p, const ChannelSet& ch, UnderlayCase tag) {
  const CMat z = CMat::Zero(p.n_t2, p.n_t2);
  UnderlaySolution s = finish(p, ch, z, z, tag);
  check_r2(p, s);
  return s;
}

UnderlaySolution solve_case1_impl(const SystemParams& p, const ChannelSet& ch, double p_int, const UnderlayOptions& o) {
  const auto up = build_case1_program(p, ch, p_int, o.objective);
  if (up.k21 < 0) return zero_solution(p, ch, UnderlayCase::Case1_NoSIC);
  auto fs = run(up, o);
  auto s = finish(p, ch, fs.point.mats[up.k21], CMat::Zero(p.n_t2, p.n_t2), UnderlayCase::Case1_NoSIC);
  s.iterations = fs.iterations;
  s.trace = std::move(fs.trace);
  check_r2(p, s);
  return s;
}

UnderlaySolution solve_case2_impl(const SystemParams& p, const ChannelSet& ch, double p_int, const UnderlayOptions& o) {
  const auto up = build_case2_program(p, ch, p_int, o.objective);
  if (up.k22 < 0) return zero_solution(p, ch, UnderlayCase::Case2_FullSIC);
  auto fs = run(up, o);
  auto s = finish(p, ch, CMat::Zero(p.n_t2, p.n_t2), fs.point.mats[up.k22], UnderlayCase::Case2_FullSIC);
  s.iterations = fs.iterations;
  s.trace = std::move(fs.trace);
  check_r2(p, s);
  return s;
}

UnderlaySolution solve_case3_impl(const SystemParams& p, const ChannelSet& ch, double p_int, const UnderlayOptions& o) {
  const auto up = build_case3_program(p, ch, p_int, o.objective);
  if (up.k21 < 0) return zero_solution(p, ch, UnderlayCase::Case3_RateSplit);
  auto fs = run(up, o);
  const HermitianPSD k21h = HermitianPSD::projected(fs.point.mats[up.k21]);
  const HermitianPSD k22h = HermitianPSD::projected(fs.point.mats[up.k22]);

  // r12(gamma K22hat) - R1* is continuous and nonincreasing in gamma.
  const double r1n = p.r1_star / p.bandwidth;
  auto excess = [&](double g) { return r12_rate(p, ch, k22h.scaled(g)) / p.bandwidth - r1n; };
  const double tol = rate_tol(p);
  const double e0 = excess(0.0);
  const double e1 = excess(1.0);
  if (e0 < -tol) throw Error(ErrorCode::GammaBracketFailure, "r12 at gamma = 0 is below R1*: not in the rate-split band");
  if (e1 > tol) throw Error(ErrorCode::GammaBracketFailure, "r12 at gamma = 1 is above R1*");
  double gamma;
  if (e1 >= 0.0) {
    gamma = 1.0;
  } else if (e0 <= 0.0) {
    gamma = 0.0;
  } else {
    // Invariant: excess(lo) > 0 > excess(hi). Report lo so that SIC stays feasible.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double e = excess(mid);
      if (e >= 0.0) {
        lo = mid;
        if (e <= 1e-9 * (1.0 + r1n) * 1e-3) break;
      } else {
        hi = mid;
      }
    }
    gamma = lo;
  }
  const CMat k21 = k21h.matrix() + (1.0 - gamma) * k22h.matrix();
  const CMat k22 = gamma * k22h.matrix();
  auto s = finish(p, ch, k21, k22, UnderlayCase::Case3_RateSplit);
  s.gamma = gamma;
  s.k21_hat = k21h;
  s.k22_hat = k22h;
  s.iterations = fs.iterations;
  s.trace = std::move(fs.trace);
  if (std::abs(s.r12 / p.bandwidth - r1n) > tol)
    throw Error(ErrorCode::NumericalFailure, "gamma search did not meet r12 = R1*");
  check_r2(p, s);
  return s;
}

}  // namespace

CaseSelection select_case(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts) {
  require_allocator_params(p, ch);
  CaseSelection sel;
  sel.thresholds.p_int = compute_p_int(p, ch);
  sel.thresholds.r12_at_zero = r12_at_zero(p, ch);
  if (p.r1_star >= sel.thresholds.r12_at_zero) {
    sel.tag = UnderlayCase::Case1_NoSIC;
    sel.thresholds.case2_threshold = sel.thresholds.r12_at_zero;
    return sel;
  }
  auto sigma = solve_case2_impl(p, ch, sel.thresholds.p_int, opts);
  sel.thresholds.case2_threshold = sigma.r12;
  sel.tag = p.r1_star <= sigma.r12 ? UnderlayCase::Case2_FullSIC : UnderlayCase::Case3_RateSplit;
  sigma.thresholds = sel.thresholds;
  sel.sigma_star = std::move(sigma);
  return sel;
}

UnderlaySolution solve_case1(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts) {
  require_allocator_params(p, ch);
  return solve_case1_impl(p, ch, compute_p_int(p, ch), opts);
}

UnderlaySolution solve_case2(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts) {
  require_allocator_params(p, ch);
  return solve_case2_impl(p, ch, compute_p_int(p, ch), opts);
}

UnderlaySolution solve_case3(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts) {
  require_allocator_params(p, ch);
  return solve_case3_impl(p, ch, compute_p_int(p, ch), opts);
}

UnderlaySolution allocate_underlay(const SystemParams& p, const ChannelSet& ch, const UnderlayOptions& opts) {
  auto sel = select_case(p, ch, opts);
  UnderlaySolution s;
  switch (sel.tag) {
    case UnderlayCase::Case1_NoSIC:
      s = solve_case1_impl(p, ch, sel.thresholds.p_int, opts);
      break;
    case UnderlayCase::Case2_FullSIC:
      s = std::move(*sel.sigma_star);
      break;
    case UnderlayCase::Case3_RateSplit:
      s = solve_case3_impl(p, ch, sel.thresholds.p_int, opts);
      s.iterations += sel.sigma_star->iterations;
      break;
  }
  s.thresholds = sel.thresholds;
  return s;
}

}  // namespace eeshare
