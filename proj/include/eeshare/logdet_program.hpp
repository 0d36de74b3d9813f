#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eeshare/linalg.hpp"

namespace eeshare {

/// Values of every variable slot: full-size Hermitian matrices and scalars.
struct ProgramPoint {
  std::vector<CMat> mats;
  std::vector<double> scalars;
};

/// c0 + sum Re tr(C_i K_i) + sum c_i tr(K_i) + sum c_j a_j + sum w_k log2|S_k + sum G K G^H + sum a F|.
/// Concavity is the caller's responsibility; negative weights are allowed as long
/// as the whole expression stays concave (e.g. minus a convex rate).
struct ConcaveExpr {
  struct LogDet {
    double weight = 1.0;
    CMat s;                                    // constant part, Hermitian positive definite
    std::vector<std::pair<int, CMat>> gmaps;   // (matrix slot, G): adds G K G^H
    std::vector<std::pair<int, CMat>> fmaps;   // (scalar slot, F): adds a F
  };

  double constant = 0.0;
  std::vector<std::pair<int, CMat>> linear;     // (matrix slot, C Hermitian): Re tr(C K)
  std::vector<std::pair<int, double>> traces;   // (matrix slot, c): c tr(K)
  std::vector<std::pair<int, double>> scalar_linear;
  std::vector<LogDet> logdets;

  ConcaveExpr& add_constant(double c) {
    constant += c;
    return *this;
  }
  /// coef * tr(K_slot)
  ConcaveExpr& add_trace(int slot, double coef) {
    traces.emplace_back(slot, coef);
    return *this;
  }
  /// coef * v^H K_slot v
  ConcaveExpr& add_quad(int slot, const CVec& v, double coef);
  ConcaveExpr& add_linear(int slot, const CMat& c) {
    linear.emplace_back(slot, hermitize(c));
    return *this;
  }
  ConcaveExpr& add_scalar(int slot, double coef) {
    scalar_linear.emplace_back(slot, coef);
    return *this;
  }
  ConcaveExpr& add_log2det(double weight, const CMat& s, std::vector<std::pair<int, CMat>> gmaps,
                           std::vector<std::pair<int, CMat>> fmaps = {});
  /// Appends all terms of `o` multiplied by `k`.
  ConcaveExpr& add(const ConcaveExpr& o, double k = 1.0);
};

struct SolverOptions {
  double tol = 1e-9;      // relative barrier gap m/t <= tol (1 + |value|)
  double t0 = 1.0;
  double mu = 10.0;
  int max_newton = 4000;
};

struct ProgramSolution {
  ProgramPoint point;
  double value = 0.0;
  RVec interior;          // raw strictly feasible iterate (usable as a warm start)
  int newton_steps = 0;
  double gap = 0.0;
};

enum class FeasibilityStatus { Feasible, Infeasible, NoInterior };

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::Infeasible;
  RVec interior;          // valid when Feasible
};

/// maximize objective  s.t.  constraint_k >= 0,  K_i >= 0,  a_j >= 0.
/// Matrix slot i is K_i = scale_i * E_i Khat_i E_i^H with Khat_i Hermitian r_i x r_i;
/// E_i (n_i x r_i, orthonormal columns) restricts a slot to a subspace.
class LogDetProgram {
 public:
  int add_matrix(int dim, double scale = 1.0, const CMat& embed = CMat());
  int add_scalar(double scale = 1.0);

  void set_objective(ConcaveExpr e) { objective_ = std::move(e); }
  void add_constraint(ConcaveExpr e, std::string name = {});

  int num_matrix_slots() const { return static_cast<int>(mats_.size()); }
  int num_scalar_slots() const { return static_cast<int>(scalars_.size()); }
  int num_variables() const { return nvar_; }
  int slot_dim(int slot) const { return mats_.at(slot).dim; }
  const ConcaveExpr& objective() const { return objective_; }
  const std::vector<ConcaveExpr>& constraints() const { return constraints_; }
  const std::string& constraint_name(int k) const { return names_.at(k); }

  /// Full-size matrices and scalars encoded by an internal variable vector.
  ProgramPoint point_from(const RVec& x) const;
  ProgramPoint zero_point() const;

  /// Phase I: strictly feasible point, or a certificate that none exists.
  FeasibilityResult find_feasible(const SolverOptions& opts = {}) const;

  /// Barrier method. `start` must be strictly feasible when given; otherwise phase I
  /// runs first. A program without interior returns the zero point when it is
  /// feasible (degenerate budget) and throws Infeasible otherwise.
  ProgramSolution solve(const SolverOptions& opts = {}, const RVec* start = nullptr) const;

  /// Smallest constraint value at a point (>= 0 means feasible).
  double min_constraint(const ProgramPoint& pt, int* argmin = nullptr) const;

 private:
  struct MatSlot {
    int dim;       // full size n
    int rdim;      // reduced size r
    double scale;
    CMat embed;    // n x r, empty means identity
    int offset;    // first variable index
  };
  struct ScalarSlot {
    double scale;
    int offset;
  };

  MatSlot& mat(int i) { return mats_.at(i); }

  std::vector<MatSlot> mats_;
  std::vector<ScalarSlot> scalars_;
  int nvar_ = 0;
  ConcaveExpr objective_;
  std::vector<ConcaveExpr> constraints_;
  std::vector<std::string> names_;

  friend class BarrierEngine;
};

/// Value of an expression at a point given in full-size matrices.
double evaluate(const ConcaveExpr& e, const ProgramPoint& pt);

/// Value, gradient and Hessian of `e` in the internal variables of `prog` (the
/// coordinates the barrier method works in). False outside the log-det domain.
bool expression_derivatives(const LogDetProgram& prog, const ConcaveExpr& e, const RVec& x, double& value, RVec& grad,
                            RMat& hess);

}  // namespace eeshare
