#pragma once

#include <complex>

#include <Eigen/Dense>

namespace eeshare {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kLn2 = 0.69314718055994530941723212145818;

/// (M + M^H) / 2
CMat hermitize(const CMat& m);

/// Natural-log determinant of a Hermitian positive-definite matrix via Cholesky.
/// Throws NumericalFailure when the factorization breaks down.
double logdet_hpd(const CMat& m);

/// Same as logdet_hpd but reports failure through the return flag instead of throwing.
bool try_logdet_hpd(const CMat& m, double& out);

/// log2 |m| for Hermitian positive-definite m.
inline double log2det_hpd(const CMat& m) { return logdet_hpd(m) / kLn2; }

double min_eigenvalue(const CMat& hermitian);

/// Eigen-decomposition based square root / inverse square root of a HPD matrix.
CMat sqrtm_psd(const CMat& m);
CMat inv_sqrtm_pd(const CMat& m);

/// Symmetrize and clip negative eigenvalues at zero. Returns the magnitude of the
/// most negative clipped eigenvalue through `clipped` when non-null.
CMat project_psd(const CMat& m, double* clipped = nullptr);

/// Orthonormal basis (n x (n-1)) for the orthogonal complement of a nonzero vector.
CMat orthogonal_complement(const CVec& v);

/// Unitary V with V * p_hat = q_hat for unit vectors p_hat, q_hat.
CMat unitary_mapping(const CVec& p_hat, const CVec& q_hat);

/// Complex Hermitian positive-semidefinite matrix. Construction validates
/// self-adjointness (1e-12 relative) and the numerical PSD tolerance
/// min eig >= -1e-9 * trace / dim, then stores the symmetrized matrix.
class HermitianPSD {
 public:
  HermitianPSD() = default;
  explicit HermitianPSD(const CMat& m);

  static HermitianPSD zero(Eigen::Index dim);
  static HermitianPSD identity(Eigen::Index dim, double scale = 1.0);
  /// Symmetrize and clip instead of validating.
  static HermitianPSD projected(const CMat& m);

  const CMat& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  double trace() const { return m_.trace().real(); }

  /// v^H K v
  double quad(const CVec& v) const { return (v.adjoint() * m_ * v)(0, 0).real(); }

  HermitianPSD operator+(const HermitianPSD& o) const;
  HermitianPSD scaled(double s) const;

 private:
  CMat m_;
};

/// Random complex matrix with i.i.d. CN(0,1) entries, drawn from a std engine.
/// Test and probe helper only; channel generation has its own deterministic RNG.
template <class Engine>
CMat random_cn(Engine& eng, Eigen::Index rows, Eigen::Index cols);

}  // namespace eeshare

#include <random>

namespace eeshare {

template <class Engine>
CMat random_cn(Engine& eng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(n(eng), n(eng));
  return m;
}

}  // namespace eeshare
