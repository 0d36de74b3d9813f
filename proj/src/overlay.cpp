#include "eeshare/overlay.hpp"

#include <cmath>
#include <limits>

#include "eeshare/error.hpp"

namespace eeshare {

namespace {
// Fraction of the slack above the relaying boundary kept when placing the start point.
constexpr double kInitMargin = 0.05;
}  // namespace

const char* to_string(OverlayFeasibility f) {
  switch (f) {
    case OverlayFeasibility::Feasible: return "Feasible";
    case OverlayFeasibility::InfeasibleR1Star: return "InfeasibleR1Star";
    case OverlayFeasibility::UnderlayRegime: return "UnderlayRegime";
  }
  return "?";
}

OverlayConstants overlay_constants(const SystemParams& p, const ChannelSet& ch) {
  p.validate();
  ch.validate(p);
  OverlayConstants k;
  k.m_mat = HermitianPSD(relay_input_covariance(p, ch));
  k.g = ch.ht * ch.h11;
  k.h11_sq = ch.h11.squaredNorm();
  k.g_sq = k.g.squaredNorm();
  k.h21_sq = ch.h21.squaredNorm();
  const double s2 = p.noise_power;
  k.c_star = std::exp2(2.0 * p.r1_star / p.bandwidth) - 1.0 - p.p1 * k.h11_sq / s2;
  k.psi = p.p1 * k.g_sq / (s2 * k.h11_sq) + 1.0;
  k.phi = k.h21_sq > 0.0 ? k.psi * (ch.h22 * ch.h21).squaredNorm() / k.h21_sq : 0.0;
  if (k.c_star > 0.0) {
    k.kappa = (k.c_star + 1.0) * p.p1 * k.g_sq / (k.c_star * (s2 * k.h11_sq + p.p1 * k.g_sq));
  } else {
    k.kappa = std::numeric_limits<double>::infinity();
  }
  return k;
}

PrimaryRateBound max_primary_rate(const SystemParams& p, const ChannelSet& ch) {
  const auto k = overlay_constants(p, ch);
  if (!(k.h21_sq > 0.0)) throw Error(ErrorCode::DegenerateChannel, "h21 = 0: the relay cannot reach the primary receiver");
  if (!(k.g_sq > 0.0)) throw Error(ErrorCode::DegenerateChannel, "Ht h11 = 0: the relay hears nothing");
  PrimaryRateBound out;
  out.a_scale = p.p2 * k.h11_sq / (p.alpha * (p.p1 * k.g_sq + p.noise_power * k.h11_sq));
  out.a_star = rank1_relay_a(ch, k, out.a_scale);
  const double used = p.alpha * (out.a_star * k.m_mat.matrix() * out.a_star.adjoint()).trace().real();
  if (std::abs(used - p.p2) > 1e-9 * p.p2)
    throw Error(ErrorCode::NumericalFailure, "relay power at A* differs from P2");
  out.r_bar = overlay_rates(p, ch, out.a_star, HermitianPSD::zero(p.n_t2)).r1;
  return out;
}

FeasibilityCheck check_feasibility(const SystemParams& p, const ChannelSet& ch) {
  p.validate();
  ch.validate(p);
  FeasibilityCheck out;
  if (p.r1_star <= direct_capacity(p, ch)) {
    out.status = OverlayFeasibility::UnderlayRegime;
    return out;
  }
  try {
    out.r_bar = max_primary_rate(p, ch).r_bar;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateChannel) throw;
    out.status = OverlayFeasibility::InfeasibleR1Star;
    return out;
  }
  out.status = p.r1_star > out.r_bar * (1.0 + 1e-12) ? OverlayFeasibility::InfeasibleR1Star
                                                     : OverlayFeasibility::Feasible;
  return out;
}

namespace {

void require_relaying_regime(const OverlayConstants& k) {
  if (!(k.c_star > 0.0)) throw Error(ErrorCode::InvalidArgument, "c* <= 0: the primary needs no relaying");
}

}  // namespace

double v_constraint_value(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, const CMat& x,
                          const CMat& b_cov) {
  require_relaying_regime(k);
  const double hx = (ch.h21.adjoint() * x * ch.h21)(0, 0).real();
  const double hb = (ch.h21.adjoint() * b_cov * ch.h21)(0, 0).real();
  return k.kappa * hx - p.noise_power - hb - hx;
}

ConcaveExpr optimal_v_constraint(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, int x_slot,
                                 int b_slot) {
  require_relaying_regime(k);
  ConcaveExpr e;
  e.add_constant(-p.noise_power);
  e.add_quad(x_slot, ch.h21, k.kappa - 1.0);
  e.add_quad(b_slot, ch.h21, -1.0);
  return e;
}

TaylorBound taylor_lower_bound(const CMat& x0, const SystemParams& p, const ChannelSet& ch) {
  ch.validate(p);
  TaylorBound t;
  t.x0 = hermitize(x0);
  const CMat z0 = hermitize(CMat::Identity(p.n_r, p.n_r) * p.noise_power + ch.h22 * t.x0 * ch.h22.adjoint());
  t.logdet0 = log2det_hpd(z0);
  t.m0 = hermitize(ch.h22.adjoint() * z0.llt().solve(ch.h22));
  return t;
}

double TaylorBound::value(const SystemParams& p, const ChannelSet& ch, const CMat& x, const CMat& b_cov) const {
  const CMat z = CMat::Identity(p.n_r, p.n_r) * p.noise_power + ch.h22 * (x + b_cov) * ch.h22.adjoint();
  return log2det_hpd(hermitize(z)) - logdet0 - (m0 * (x - x0)).trace().real() / kLn2;
}

ConcaveExpr TaylorBound::expr(const SystemParams& p, const ChannelSet& ch, int x_slot, int b_slot) const {
  ConcaveExpr e;
  e.add_log2det(1.0, CMat::Identity(p.n_r, p.n_r) * p.noise_power, {{x_slot, ch.h22}, {b_slot, ch.h22}});
  e.add_constant(-logdet0 + (m0 * x0).trace().real() / kLn2);
  e.add_linear(x_slot, -m0 / kLn2);
  return e;
}

CMat rank1_relay_x(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a) {
  const CVec u = ch.h21 / std::sqrt(k.h21_sq);
  return u * u.adjoint() * (a * p.noise_power * k.psi);
}

CMat rank1_relay_a(const ChannelSet& ch, const OverlayConstants& k, double a) {
  const CVec u = ch.h21 / std::sqrt(k.h21_sq);
  const CVec v = k.g / std::sqrt(k.g_sq);
  return u * v.adjoint() * std::sqrt(a);
}

double rank1_rate(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a, const CMat& b_cov) {
  const CMat x = rank1_relay_x(p, ch, k, a);
  const CMat z = CMat::Identity(p.n_r, p.n_r) * p.noise_power + ch.h22 * (x + b_cov) * ch.h22.adjoint();
  return log2det_hpd(hermitize(z)) - p.n_r * std::log2(p.noise_power) - std::log2(1.0 + a * k.phi);
}

double rank1_rate_bound(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, double a0, double a,
                        const CMat& b_cov) {
  const CMat x = rank1_relay_x(p, ch, k, a);
  const CMat z = CMat::Identity(p.n_r, p.n_r) * p.noise_power + ch.h22 * (x + b_cov) * ch.h22.adjoint();
  return log2det_hpd(hermitize(z)) - p.n_r * std::log2(p.noise_power) - std::log2(1.0 + a0 * k.phi) -
         k.phi * (a - a0) / (kLn2 * (1.0 + a0 * k.phi));
}

double rank1_a_min(const SystemParams& p, const ChannelSet&, const OverlayConstants& k) {
  require_relaying_regime(k);
  const double margin = p.p1 * k.g_sq - k.c_star * p.noise_power * k.h11_sq;
  if (!(margin > 0.0) || !(k.h21_sq > 0.0))
    throw Error(ErrorCode::Rank1Infeasible, "no relay gain meets the primary target");
  return k.c_star * p.noise_power * k.h11_sq / (k.h21_sq * margin);
}

CMat recover_relay(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, const CMat& x) {
  const int n = p.n_t2;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(x));
  const RVec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMat ul = es.eigenvectors() * lam.asDiagonal();
  const CMat m_isqrt = inv_sqrtm_pd(k.m_mat.matrix());
  const CVec pv = m_isqrt * k.g;
  const CVec q = ul.adjoint() * ch.h21;
  CMat v = CMat::Identity(n, n);
  if (q.norm() > 0.0 && pv.norm() > 0.0) v = unitary_mapping(q / q.norm(), pv / pv.norm());
  return ul * v.adjoint() * m_isqrt;
}

OverlayInit default_overlay_init(const SystemParams& p, const ChannelSet& ch) {
  const auto k = overlay_constants(p, ch);
  require_relaying_regime(k);
  if (!(k.h21_sq > 0.0) || !(k.kappa > 1.0))
    throw Error(ErrorCode::InitInfeasible, "relaying cannot meet the primary target");
  const double s = p.p2 / p.alpha;
  const double n = p.n_t2;
  const double rho_min = (p.noise_power + s * k.h21_sq / n) / (s * k.h21_sq * (k.kappa - 1.0 + 1.0 / n));
  if (!(rho_min < 1.0 - 1e-9)) throw Error(ErrorCode::InitInfeasible, "relaying needs more than P2");

  const CVec u = ch.h21 / std::sqrt(k.h21_sq);
  auto make = [&](double rho) {
    OverlayInit in;
    in.rho = rho;
    in.x = u * u.adjoint() * (rho * s);
    in.b_cov = CMat::Identity(n, n) * ((1.0 - rho) * s / n);
    return in;
  };
  // Bisection from rho = 0.9 towards the relaying boundary: A* meets the primary
  // target with the least relay power there. Step slightly inside for an interior start.
  auto relaying_ok = [&](double r) { return r * s * k.h21_sq * (k.kappa - 1.0) > p.noise_power + (1.0 - r) * s * k.h21_sq / n; };
  double lo = 0.0, hi = 0.9;
  if (!relaying_ok(hi)) {
    lo = 0.9;
    hi = 1.0;
  }
  for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (relaying_ok(mid) ? hi : lo) = mid;
  }
  const double rho = hi + kInitMargin * (1.0 - hi);
  if (p.r2_star <= 0.0) return make(rho);

  // R2 falls as rho grows: move towards rho_min until the rate row holds.
  const double target = 2.0 * p.r2_star / p.bandwidth;
  auto rate = [&](double r) {
    const auto in = make(r);
    return overlay_rate_numerator(p, ch, in.x, in.b_cov);
  };
  if (rate(rho) > target) return make(rho);
  if (!(rate(rho_min) > target)) throw Error(ErrorCode::InitInfeasible, "secondary rate target unreachable at init");
  lo = rho_min;
  hi = rho;
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rate(mid) > target ? lo : hi) = mid;
  }
  return make(0.5 * (rho_min + lo));
}

namespace {

void require_feasible(const SystemParams& p, const ChannelSet& ch) {
  const auto f = check_feasibility(p, ch);
  if (f.status == OverlayFeasibility::UnderlayRegime)
    throw Error(ErrorCode::InvalidArgument, "R1* is within the direct-link capacity; use the underlay allocator");
  if (f.status == OverlayFeasibility::InfeasibleR1Star)
    throw Error(ErrorCode::Infeasible, "R1* exceeds the largest relay-assisted primary rate");
}

ConcaveExpr power_row(const SystemParams& p, int b_slot) {
  ConcaveExpr e;
  e.add_constant(p.p2);
  e.add_trace(b_slot, -p.alpha);
  return e;
}

FractionalSolution run_surrogate(const FractionalLogDet& fp, const OverlayOptions& opts) {
  try {
    return solve_fractional(fp, opts.dinkelbach, opts.inner);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Infeasible)
      throw Error(ErrorCode::NumericalFailure, std::string("surrogate lost its feasible point: ") + e.what());
    throw;
  }
}

OverlaySolution finish(const SystemParams& p, const ChannelSet& ch, const OverlayConstants& k, const CMat& x,
                       const CMat& b, const SurrogateResult<ProgramPoint>& loop) {
  OverlaySolution s;
  s.relay_x = HermitianPSD::projected(x);
  s.b_cov = HermitianPSD::projected(b);
  s.relay_a = recover_relay(p, ch, k, s.relay_x.matrix());
  s.r1 = overlay_rates(p, ch, s.relay_a, s.b_cov).r1;
  s.r2 = overlay_r2_from_x(p, ch, s.relay_x, s.b_cov);
  s.tx_power = p.alpha * (s.relay_x.trace() + s.b_cov.trace());
  s.ee = s.r2 / (s.tx_power + p.p_c);
  s.iterations = loop.iterations;
  s.converged = loop.converged;
  s.trace = loop.trace;
  return s;
}

}  // namespace

OverlaySolution solve_overlay_full(const SystemParams& p, const ChannelSet& ch, const OverlayOptions& opts,
                                   const std::optional<OverlayInit>& init) {
  require_feasible(p, ch);
  const auto k = overlay_constants(p, ch);
  const OverlayInit start = init ? *init : default_overlay_init(p, ch);
  const auto cost = CostModel::of(p, opts.objective);
  const double scale = p.p2 / p.alpha;

  auto objective = [&](const ProgramPoint& pt) {
    const double num = std::max(0.0, overlay_rate_numerator(p, ch, pt.mats[0], pt.mats[1]));
    const double den = cost.alpha * (pt.mats[0].trace().real() + pt.mats[1].trace().real()) + cost.p_c;
    return 0.5 * p.bandwidth * num / den;
  };
  auto step = [&](const ProgramPoint& cur) {
    const auto tb = taylor_lower_bound(cur.mats[0], p, ch);
    FractionalLogDet fp;
    const int xs = fp.prog.add_matrix(p.n_t2, scale);
    const int bs = fp.prog.add_matrix(p.n_t2, scale);
    ConcaveExpr power = power_row(p, bs);
    power.add_trace(xs, -p.alpha);
    fp.prog.add_constraint(power, "power");
    fp.prog.add_constraint(optimal_v_constraint(p, ch, k, xs, bs), "relaying");
    const ConcaveExpr rate = tb.expr(p, ch, xs, bs);
    if (p.r2_star > 0.0) {
      ConcaveExpr r = rate;
      r.add_constant(-2.0 * p.r2_star / p.bandwidth);
      fp.prog.add_constraint(r, "secondary_rate");
    }
    fp.numerator = rate;
    fp.denominator.add_constant(cost.p_c).add_trace(xs, cost.alpha).add_trace(bs, cost.alpha);
    return run_surrogate(fp, opts).point;
  };

  ProgramPoint p0;
  p0.mats = {hermitize(start.x), hermitize(start.b_cov)};
  const auto loop = surrogate_loop<ProgramPoint>(p0, step, objective, opts.surrogate);
  return finish(p, ch, k, loop.point.mats[0], loop.point.mats[1], loop);
}

OverlaySolution solve_overlay_rank1(const SystemParams& p, const ChannelSet& ch, const OverlayOptions& opts,
                                    const std::optional<OverlayInit>& init) {
  require_feasible(p, ch);
  const auto k = overlay_constants(p, ch);
  rank1_a_min(p, ch, k);  // throws Rank1Infeasible
  const OverlayInit start = init ? *init : default_overlay_init(p, ch);
  const auto cost = CostModel::of(p, opts.objective);
  const double relay_unit = p.noise_power * k.psi;  // tr X per unit of a
  const double scale = p.p2 / p.alpha;
  const CVec u = ch.h21 / std::sqrt(k.h21_sq);
  const CMat hu = ch.h22 * u;
  const CMat f_relay = hermitize(hu * hu.adjoint() * relay_unit);

  auto objective = [&](const ProgramPoint& pt) {
    const double a = pt.scalars[0];
    const double num = std::max(0.0, rank1_rate(p, ch, k, a, pt.mats[0]));
    const double den = cost.alpha * (pt.mats[0].trace().real() + relay_unit * a) + cost.p_c;
    return 0.5 * p.bandwidth * num / den;
  };
  auto step = [&](const ProgramPoint& cur) {
    const double a0 = cur.scalars[0];
    FractionalLogDet fp;
    const int bs = fp.prog.add_matrix(p.n_t2, scale);
    const int as = fp.prog.add_scalar(scale / relay_unit);
    ConcaveExpr power = power_row(p, bs);
    power.add_scalar(as, -p.alpha * relay_unit);
    fp.prog.add_constraint(power, "power");
    ConcaveExpr v;
    v.add_constant(-p.noise_power).add_scalar(as, (k.kappa - 1.0) * relay_unit * k.h21_sq).add_quad(bs, ch.h21, -1.0);
    fp.prog.add_constraint(v, "relaying");

    const double lin = k.phi / (kLn2 * (1.0 + a0 * k.phi));
    ConcaveExpr rate;
    rate.add_log2det(1.0, CMat::Identity(p.n_r, p.n_r) * p.noise_power, {{bs, ch.h22}}, {{as, f_relay}});
    rate.add_constant(-p.n_r * std::log2(p.noise_power) - std::log2(1.0 + a0 * k.phi) + lin * a0);
    rate.add_scalar(as, -lin);
    if (p.r2_star > 0.0) {
      ConcaveExpr r = rate;
      r.add_constant(-2.0 * p.r2_star / p.bandwidth);
      fp.prog.add_constraint(r, "secondary_rate");
    }
    fp.numerator = rate;
    fp.denominator.add_constant(cost.p_c).add_trace(bs, cost.alpha).add_scalar(as, cost.alpha * relay_unit);
    return run_surrogate(fp, opts).point;
  };

  ProgramPoint p0;
  p0.mats = {hermitize(start.b_cov)};
  p0.scalars = {start.x.trace().real() / relay_unit};
  const auto loop = surrogate_loop<ProgramPoint>(p0, step, objective, opts.surrogate);
  const double a = loop.point.scalars[0];
  auto s = finish(p, ch, k, rank1_relay_x(p, ch, k, a), loop.point.mats[0], loop);
  s.relay_scale_a = a;
  s.relay_a = rank1_relay_a(ch, k, a);
  s.r1 = overlay_rates(p, ch, s.relay_a, s.b_cov).r1;
  return s;
}

}  // namespace eeshare
