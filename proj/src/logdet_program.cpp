#include "eeshare/logdet_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eeshare/error.hpp"

namespace eeshare {

namespace {

constexpr double kPsdDelta = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Re tr(A B)
inline double re_tr_prod(const CMat& a, const CMat& b) { return (a.cwiseProduct(b.transpose())).sum().real(); }

}  // namespace

// ---------------------------------------------------------------------------
// Expression builders and direct evaluation

ConcaveExpr& ConcaveExpr::add_quad(int slot, const CVec& v, double coef) {
  linear.emplace_back(slot, hermitize(v * v.adjoint() * coef));
  return *this;
}

ConcaveExpr& ConcaveExpr::add_log2det(double weight, const CMat& s, std::vector<std::pair<int, CMat>> gmaps,
                                      std::vector<std::pair<int, CMat>> fmaps) {
  LogDet t;
  t.weight = weight;
  t.s = hermitize(s);
  t.gmaps = std::move(gmaps);
  for (auto& f : fmaps) f.second = hermitize(f.second);
  t.fmaps = std::move(fmaps);
  logdets.push_back(std::move(t));
  return *this;
}

ConcaveExpr& ConcaveExpr::add(const ConcaveExpr& o, double k) {
  constant += k * o.constant;
  for (const auto& [slot, c] : o.linear) linear.emplace_back(slot, c * k);
  for (const auto& [slot, c] : o.traces) traces.emplace_back(slot, c * k);
  for (const auto& [slot, c] : o.scalar_linear) scalar_linear.emplace_back(slot, c * k);
  for (auto t : o.logdets) {
    t.weight *= k;
    logdets.push_back(std::move(t));
  }
  return *this;
}

double evaluate(const ConcaveExpr& e, const ProgramPoint& pt) {
  double v = e.constant;
  for (const auto& [slot, c] : e.linear) v += re_tr_prod(c, pt.mats.at(slot));
  for (const auto& [slot, c] : e.traces) v += c * pt.mats.at(slot).trace().real();
  for (const auto& [slot, c] : e.scalar_linear) v += c * pt.scalars.at(slot);
  for (const auto& t : e.logdets) {
    CMat y = t.s;
    for (const auto& [slot, g] : t.gmaps) y += g * pt.mats.at(slot) * g.adjoint();
    for (const auto& [slot, f] : t.fmaps) y += f * pt.scalars.at(slot);
    v += t.weight * log2det_hpd(hermitize(y));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Program assembly

int LogDetProgram::add_matrix(int dim, double scale, const CMat& embed) {
  if (dim < 1) throw Error(ErrorCode::InvalidArgument, "matrix slot dimension must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "slot scale must be positive");
  int rdim = dim;
  if (embed.size() > 0) {
    if (embed.rows() != dim || embed.cols() < 1 || embed.cols() > dim)
      throw Error(ErrorCode::DimensionMismatch, "embedding must be dim x r with 1 <= r <= dim");
    rdim = static_cast<int>(embed.cols());
  }
  mats_.push_back({dim, rdim, scale, embed, nvar_});
  nvar_ += rdim * rdim;
  return static_cast<int>(mats_.size()) - 1;
}

int LogDetProgram::add_scalar(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::InvalidArgument, "slot scale must be positive");
  scalars_.push_back({scale, nvar_});
  nvar_ += 1;
  return static_cast<int>(scalars_.size()) - 1;
}

void LogDetProgram::add_constraint(ConcaveExpr e, std::string name) {
  constraints_.push_back(std::move(e));
  names_.push_back(name.empty() ? "c" + std::to_string(constraints_.size() - 1) : std::move(name));
}

namespace {

// Hermitian basis of r x r matrices: r diagonal units, then (re, im) per i < j.
std::vector<CMat> hermitian_basis(int r) {
  std::vector<CMat> b;
  b.reserve(static_cast<size_t>(r * r));
  for (int i = 0; i < r; ++i) {
    CMat e = CMat::Zero(r, r);
    e(i, i) = 1.0;
    b.push_back(e);
  }
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      CMat re = CMat::Zero(r, r);
      re(i, j) = 1.0;
      re(j, i) = 1.0;
      b.push_back(re);
      CMat im = CMat::Zero(r, r);
      im(i, j) = cplx(0.0, 1.0);
      im(j, i) = cplx(0.0, -1.0);
      b.push_back(im);
    }
  return b;
}

CMat khat_from(const RVec& x, int offset, int r) {
  CMat k(r, r);
  int p = offset;
  for (int i = 0; i < r; ++i) k(i, i) = x(p++);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const cplx v(x(p), x(p + 1));
      p += 2;
      k(i, j) = v;
      k(j, i) = std::conj(v);
    }
  return k;
}

void khat_to(RVec& x, int offset, const CMat& k) {
  const int r = static_cast<int>(k.rows());
  int p = offset;
  for (int i = 0; i < r; ++i) x(p++) = k(i, i).real();
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      x(p++) = k(i, j).real();
      x(p++) = k(i, j).imag();
    }
}

}  // namespace

ProgramPoint LogDetProgram::point_from(const RVec& x) const {
  ProgramPoint pt;
  for (const auto& m : mats_) {
    CMat k = project_psd(khat_from(x, m.offset, m.rdim)) * m.scale;
    if (m.embed.size() > 0) k = m.embed * k * m.embed.adjoint();
    pt.mats.push_back(hermitize(k));
  }
  for (const auto& s : scalars_) pt.scalars.push_back(std::max(0.0, x(s.offset)) * s.scale);
  return pt;
}

ProgramPoint LogDetProgram::zero_point() const {
  ProgramPoint pt;
  for (const auto& m : mats_) pt.mats.push_back(CMat::Zero(m.dim, m.dim));
  for (size_t i = 0; i < scalars_.size(); ++i) pt.scalars.push_back(0.0);
  return pt;
}

double LogDetProgram::min_constraint(const ProgramPoint& pt, int* argmin) const {
  double best = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < constraints_.size(); ++k) {
    const double v = evaluate(constraints_[k], pt);
    if (v < best) {
      best = v;
      if (argmin) *argmin = static_cast<int>(k);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Barrier engine: the program compiled to the real variable vector x.

class BarrierEngine {
 public:
  struct Term {
    double w = 0.0;        // weight in natural-log units converted to bits
    double offset = 0.0;   // contribution of the normalization constant
    CMat s;
    std::vector<int> vars;
    std::vector<CMat> dirs;
  };
  struct Expr {
    double constant = 0.0;
    RVec lin;
    std::vector<Term> terms;
  };

  BarrierEngine(const LogDetProgram& prog, int extra_vars) : prog_(prog) {
    n_ = prog.nvar_ + extra_vars;
    for (const auto& m : prog.mats_) {
      basis_.push_back(hermitian_basis(m.rdim));
      std::vector<CMat> dirs;
      for (const auto& b : basis_.back()) {
        CMat d = b * m.scale;
        if (m.embed.size() > 0) d = m.embed * d * m.embed.adjoint();
        dirs.push_back(d);
      }
      slot_dirs_.push_back(std::move(dirs));
    }
    objective_ = compile(prog.objective_);
    for (const auto& c : prog.constraints_) constraints_.push_back(compile(c));
  }

  int size() const { return n_; }
  int barrier_count() const {
    int m = static_cast<int>(constraints_.size()) + static_cast<int>(prog_.scalars_.size());
    for (const auto& s : prog_.mats_) m += s.rdim;
    return m;
  }

  Expr compile(const ConcaveExpr& e) const {
    Expr c;
    c.constant = e.constant;
    c.lin = RVec::Zero(n_);
    for (const auto& [slot, cm] : e.linear) {
      const auto& s = prog_.mats_.at(slot);
      for (int p = 0; p < s.rdim * s.rdim; ++p) c.lin(s.offset + p) += re_tr_prod(cm, slot_dirs_[slot][p]);
    }
    for (const auto& [slot, coef] : e.traces) {
      const auto& s = prog_.mats_.at(slot);
      for (int p = 0; p < s.rdim * s.rdim; ++p)
        c.lin(s.offset + p) += coef * slot_dirs_[slot][p].trace().real();
    }
    for (const auto& [slot, coef] : e.scalar_linear) {
      const auto& s = prog_.scalars_.at(slot);
      c.lin(s.offset) += coef * s.scale;
    }
    for (const auto& t : e.logdets) {
      Term ct;
      const double m = static_cast<double>(t.s.rows());
      const double s0 = t.s.trace().real() / m;
      if (!(s0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "log-det constant part must be positive definite");
      ct.w = t.weight / kLn2;
      ct.offset = ct.w * m * std::log(s0);
      ct.s = t.s / s0;
      for (const auto& [slot, g] : t.gmaps) {
        const auto& s = prog_.mats_.at(slot);
        if (g.rows() != t.s.rows() || g.cols() != s.dim)
          throw Error(ErrorCode::DimensionMismatch, "log-det map has the wrong shape");
        for (int p = 0; p < s.rdim * s.rdim; ++p) {
          ct.vars.push_back(s.offset + p);
          ct.dirs.push_back(hermitize(g * slot_dirs_[slot][p] * g.adjoint()) / s0);
        }
      }
      for (const auto& [slot, f] : t.fmaps) {
        const auto& s = prog_.scalars_.at(slot);
        if (f.rows() != t.s.rows()) throw Error(ErrorCode::DimensionMismatch, "log-det scalar map has the wrong shape");
        ct.vars.push_back(s.offset);
        ct.dirs.push_back(f * (s.scale / s0));
      }
      c.terms.push_back(std::move(ct));
    }
    return c;
  }

  /// Value (and optionally derivatives accumulated with multiplier k) of a compiled
  /// expression. Returns false when a log-det argument loses definiteness.
  static bool eval(const Expr& e, const RVec& x, double& v, RVec* g = nullptr, RMat* h = nullptr) {
    v = e.constant + e.lin.dot(x);
    if (g) *g = e.lin;
    if (h) h->setZero(x.size(), x.size());
    for (const auto& t : e.terms) {
      CMat y = t.s;
      for (size_t i = 0; i < t.vars.size(); ++i) y += t.dirs[i] * x(t.vars[i]);
      Eigen::LLT<CMat> llt(y);
      if (llt.info() != Eigen::Success) return false;
      double ld = 0.0;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double d = llt.matrixLLT()(i, i).real();
        if (!(d > 0.0)) return false;
        ld += std::log(d);
      }
      v += t.w * 2.0 * ld + t.offset;
      if (!g) continue;
      const CMat w = llt.solve(CMat::Identity(y.rows(), y.rows()));
      std::vector<CMat> wd(t.vars.size());
      for (size_t i = 0; i < t.vars.size(); ++i) {
        wd[i] = w * t.dirs[i];
        (*g)(t.vars[i]) += t.w * wd[i].trace().real();
      }
      if (!h) continue;
      for (size_t i = 0; i < t.vars.size(); ++i)
        for (size_t j = i; j < t.vars.size(); ++j) {
          const double hij = -t.w * re_tr_prod(wd[i], wd[j]);
          (*h)(t.vars[i], t.vars[j]) += hij;
          if (i != j) (*h)(t.vars[j], t.vars[i]) += hij;
        }
    }
    return std::isfinite(v);
  }

  /// Barrier function t f + sum log c_k + sum log|Khat + delta I| + sum log a.
  /// `obj` and `cons` default to the program's own.
  double phi(const RVec& x, double t, RVec* g, RMat* h, double* fval = nullptr) const {
    if (g) g->setZero(n_);
    if (h) h->setZero(n_, n_);
    RVec eg;
    RMat eh;
    double v = 0.0;

    // slot barriers first: cheapest rejection of infeasible trial points
    for (size_t i = 0; i < prog_.mats_.size(); ++i) {
      const auto& s = prog_.mats_[i];
      CMat k = khat_from(x, s.offset, s.rdim) + kPsdDelta * CMat::Identity(s.rdim, s.rdim);
      Eigen::LLT<CMat> llt(k);
      if (llt.info() != Eigen::Success) return kNegInf;
      double ld = 0.0;
      for (int d = 0; d < s.rdim; ++d) {
        const double dd = llt.matrixLLT()(d, d).real();
        if (!(dd > 0.0)) return kNegInf;
        ld += std::log(dd);
      }
      v += 2.0 * ld;
      if (!g) continue;
      const CMat w = llt.solve(CMat::Identity(s.rdim, s.rdim));
      const auto& basis = basis_[i];
      const int np = s.rdim * s.rdim;
      std::vector<CMat> wb(static_cast<size_t>(np));
      for (int p = 0; p < np; ++p) {
        wb[p] = w * basis[p];
        (*g)(s.offset + p) += wb[p].trace().real();
      }
      if (!h) continue;
      for (int p = 0; p < np; ++p)
        for (int q = p; q < np; ++q) {
          const double hpq = -re_tr_prod(wb[p], wb[q]);
          (*h)(s.offset + p, s.offset + q) += hpq;
          if (p != q) (*h)(s.offset + q, s.offset + p) += hpq;
        }
    }
    for (const auto& s : prog_.scalars_) {
      const double a = x(s.offset);
      if (!(a > 0.0)) return kNegInf;
      v += std::log(a);
      if (g) (*g)(s.offset) += 1.0 / a;
      if (h) (*h)(s.offset, s.offset) -= 1.0 / (a * a);
    }
    for (const auto& c : constraints_) {
      double cv;
      if (!eval(c, x, cv, g ? &eg : nullptr, h ? &eh : nullptr)) return kNegInf;
      if (!(cv > 0.0)) return kNegInf;
      v += std::log(cv);
      if (g) *g += eg / cv;
      if (h) *h += eh / cv - (eg * eg.transpose()) / (cv * cv);
    }
    double f;
    if (!eval(objective_, x, f, g ? &eg : nullptr, h ? &eh : nullptr)) return kNegInf;
    if (fval) *fval = f;
    v += t * f;
    if (g) *g += t * eg;
    if (h) *h += t * eh;
    return v;
  }

  struct Centering {
    int steps = 0;
    bool stalled = false;
    double decrement = kInf;  // squared Newton decrement at the returned point
  };

  /// Damped Newton on phi(., t) from a strictly feasible x. `stop` is polled after
  /// every accepted step and ends the centering early when it returns true.
  template <class Stop>
  Centering center(RVec& x, double t, int budget, Stop&& stop) const {
    Centering out;
    RVec g(n_);
    RMat h(n_, n_);
    for (int it = 0; it < budget; ++it) {
      const double v = phi(x, t, &g, &h);
      if (!std::isfinite(v)) throw Error(ErrorCode::NumericalFailure, "barrier iterate left the domain");
      const RVec dx = newton_direction(h, g);
      const double dec = g.dot(dx);
      out.decrement = std::max(0.0, dec);
      if (!(dec > 0.0) || dec * 0.5 <= 1e-10) break;
      double step = 1.0;
      bool accepted = false;
      // Steps below 1e-10 only chase roundoff in phi; count them as a stall.
      while (step > 1e-10) {
        const RVec xn = x + step * dx;
        const double vn = phi(xn, t, nullptr, nullptr);
        if (std::isfinite(vn) && vn > v && vn >= v + 0.25 * step * dec) {
          x = xn;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      ++out.steps;
      if (!accepted) {
        out.stalled = true;
        break;
      }
      out.decrement = kInf;
      if (stop(x)) break;
    }
    return out;
  }

  /// Solves (-H) dx = g with Jacobi scaling; falls back to an eigenvalue floor
  /// when -H is not numerically positive definite.
  static RVec newton_direction(const RMat& h, const RVec& g) {
    const Eigen::Index n = g.size();
    RMat a = -h;
    RVec d = a.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    RMat as = d.asDiagonal() * a * d.asDiagonal();
    const RVec gs = d.cwiseProduct(g);
    Eigen::LLT<RMat> llt(as);
    if (llt.info() == Eigen::Success) {
      const RVec y = llt.solve(gs);
      if (y.allFinite()) return d.cwiseProduct(y);
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(as);
    RVec ev = es.eigenvalues();
    const double floor = std::max(1e-12 * ev.cwiseAbs().maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < n; ++i) ev(i) = std::max(ev(i), floor);
    const RVec y = es.eigenvectors() * (es.eigenvectors().transpose() * gs).cwiseQuotient(ev);
    return d.cwiseProduct(y);
  }

  RVec initial_point() const {
    RVec x = RVec::Zero(n_);
    const double nslots = static_cast<double>(prog_.mats_.size() + prog_.scalars_.size());
    for (const auto& s : prog_.mats_) {
      CMat k = CMat::Identity(s.rdim, s.rdim) * (0.5 / (s.rdim * nslots));
      khat_to(x, s.offset, k);
    }
    for (const auto& s : prog_.scalars_) x(s.offset) = 0.5 / nslots;
    return x;
  }

  const Expr& objective() const { return objective_; }
  Expr& objective() { return objective_; }
  std::vector<Expr>& constraints() { return constraints_; }

 private:
  const LogDetProgram& prog_;
  int n_ = 0;
  std::vector<std::vector<CMat>> basis_;
  std::vector<std::vector<CMat>> slot_dirs_;
  Expr objective_;
  std::vector<Expr> constraints_;
};

// ---------------------------------------------------------------------------
// Phase I and phase II

bool expression_derivatives(const LogDetProgram& prog, const ConcaveExpr& e, const RVec& x, double& value, RVec& grad,
                            RMat& hess) {
  const BarrierEngine eng(prog, 0);
  if (x.size() != eng.size()) throw Error(ErrorCode::DimensionMismatch, "variable vector has the wrong length");
  return BarrierEngine::eval(eng.compile(e), x, value, &grad, &hess);
}

FeasibilityResult LogDetProgram::find_feasible(const SolverOptions& opts) const {
  FeasibilityResult res;
  BarrierEngine base(*this, 0);
  RVec x0 = base.initial_point();

  // Constraint values at the start and their normalization.
  const size_t ncons = constraints_.size();
  std::vector<double> c0(ncons), norm(ncons);
  double worst = kNegInf;
  for (size_t k = 0; k < ncons; ++k) {
    RVec g;
    double v;
    if (!BarrierEngine::eval(base.constraints()[k], x0, v, &g))
      throw Error(ErrorCode::NumericalFailure, "constraint not evaluable at the initial point");
    c0[k] = v;
    norm[k] = std::abs(v) + g.norm() * std::max(1.0, x0.norm()) + 1e-300;
    worst = std::max(worst, -v / norm[k]);
  }
  if (ncons == 0 || worst < 0.0) {
    res.status = FeasibilityStatus::Feasible;
    res.interior = x0;
    return res;
  }

  // Augmented variable s (index nvar_): maximize -s s.t. c_k / norm_k + s > 0.
  BarrierEngine eng(*this, 1);
  const int si = nvar_;
  auto& cons = eng.constraints();
  for (size_t k = 0; k < ncons; ++k) {
    auto& c = cons[k];
    const double m = 1.0 / norm[k];
    c.constant *= m;
    c.lin *= m;
    for (auto& t : c.terms) {
      t.w *= m;
      t.offset *= m;
    }
    c.lin(si) = 1.0;
  }
  eng.objective() = BarrierEngine::Expr{0.0, RVec::Zero(eng.size()), {}};
  eng.objective().lin(si) = -1.0;

  RVec x(eng.size());
  x.head(nvar_) = x0;
  x(si) = worst + 1.0;

  const double m = eng.barrier_count();
  double t = 1.0;
  int steps = 0;
  auto feasible_now = [&](const RVec& xx) { return xx(si) < 0.0; };
  for (int stage = 0; stage < 60; ++stage) {
    const auto c = eng.center(x, t, opts.max_newton - steps, feasible_now);
    steps += c.steps;
    if (feasible_now(x)) {
      res.status = FeasibilityStatus::Feasible;
      res.interior = x.head(nvar_);
      return res;
    }
    const double gap = m / t;
    if (x(si) - gap > 1e-9) {
      res.status = FeasibilityStatus::Infeasible;
      return res;
    }
    if (gap < 1e-10 || steps >= opts.max_newton) {
      res.status = x(si) > 1e-7 ? FeasibilityStatus::Infeasible : FeasibilityStatus::NoInterior;
      return res;
    }
    t *= opts.mu;
  }
  res.status = FeasibilityStatus::NoInterior;
  return res;
}

ProgramSolution LogDetProgram::solve(const SolverOptions& opts, const RVec* start) const {
  RVec x;
  if (start) {
    if (start->size() != nvar_) throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong size");
    x = *start;
  } else {
    const auto fr = find_feasible(opts);
    if (fr.status == FeasibilityStatus::Infeasible)
      throw Error(ErrorCode::Infeasible, "constraint set is empty");
    if (fr.status == FeasibilityStatus::NoInterior) {
      ProgramSolution sol;
      sol.point = zero_point();
      if (min_constraint(sol.point) < -1e-12)
        throw Error(ErrorCode::Infeasible, "constraint set has no interior and excludes the zero point");
      sol.value = evaluate(objective_, sol.point);
      sol.interior = RVec::Zero(nvar_);
      return sol;
    }
    x = fr.interior;
  }

  BarrierEngine eng(*this, 0);
  if (!std::isfinite(eng.phi(x, opts.t0, nullptr, nullptr)))
    throw Error(ErrorCode::InvalidArgument, "starting point is not strictly feasible");

  const double m = eng.barrier_count();
  double t = opts.t0;
  int steps = 0;
  int stalls = 0;
  double f = 0.0;
  ProgramSolution sol;
  RVec best_x = x;
  double best_gap = kInf;
  for (;;) {
    const auto c = eng.center(x, t, std::max(1, opts.max_newton - steps), [](const RVec&) { return false; });
    steps += c.steps;
    eng.phi(x, t, nullptr, nullptr, &f);
    // A line search that fails with a small decrement has hit the roundoff floor
    // of phi: the point is still centered and m/t remains a valid gap bound.
    const bool centered = c.decrement <= 0.25;
    if (centered) {
      stalls = 0;
      const double gap = m / t * (1.0 + std::sqrt(c.decrement));
      if (gap < best_gap) {
        best_gap = gap;
        best_x = x;
      }
      if (gap <= opts.tol * (1.0 + std::abs(f))) break;
    } else if (c.stalled) {
      ++stalls;
    }
    if (stalls >= 3 || steps >= opts.max_newton || t > 1e20) {
      // No further progress: accept the best certified point when its gap is loose but small.
      x = best_x;
      eng.phi(x, t, nullptr, nullptr, &f);
      if (best_gap <= 1e-5 * (1.0 + std::abs(f))) break;
      throw Error(ErrorCode::NumericalFailure, "barrier method stalled before reaching the requested gap");
    }
    t *= opts.mu;
  }
  sol.gap = best_gap;
  sol.point = point_from(x);
  sol.value = evaluate(objective_, sol.point);
  sol.interior = x;
  sol.newton_steps = steps;
  return sol;
}

}  // namespace eeshare
