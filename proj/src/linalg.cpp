#include "eeshare/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "eeshare/error.hpp"

namespace eeshare {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::SubproblemFailed: return "SubproblemFailed";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::NonMonotoneObjective: return "NonMonotoneObjective";
    case ErrorCode::R1StarExceedsDirectCapacity: return "R1StarExceedsDirectCapacity";
    case ErrorCode::R2StarInfeasible: return "R2StarInfeasible";
    case ErrorCode::GammaBracketFailure: return "GammaBracketFailure";
    case ErrorCode::DegenerateChannel: return "DegenerateChannel";
    case ErrorCode::Rank1Infeasible: return "Rank1Infeasible";
    case ErrorCode::InitInfeasible: return "InitInfeasible";
    case ErrorCode::PlacementFailed: return "PlacementFailed";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

CMat hermitize(const CMat& m) { return (m + m.adjoint()) * 0.5; }

bool try_logdet_hpd(const CMat& m, double& out) {
  if (m.rows() == 0) {
    out = 0.0;
    return true;
  }
  Eigen::LLT<CMat> llt(m);
  if (llt.info() != Eigen::Success) return false;
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i).real();
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    acc += std::log(d);
  }
  out = 2.0 * acc;
  return true;
}

double logdet_hpd(const CMat& m) {
  double v = 0.0;
  if (!try_logdet_hpd(m, v))
    throw Error(ErrorCode::NumericalFailure, "Cholesky failed in log-det of a matrix expected to be positive definite");
  return v;
}

double min_eigenvalue(const CMat& hermitian) {
  if (hermitian.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

CMat sqrtm_psd(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(m));
  RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMat inv_sqrtm_pd(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(m));
  if (es.eigenvalues()(0) <= 0.0)
    throw Error(ErrorCode::NumericalFailure, "inverse square root of a matrix that is not positive definite");
  RVec ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMat project_psd(const CMat& m, double* clipped) {
  if (m.rows() == 0) {
    if (clipped) *clipped = 0.0;
    return m;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(m));
  RVec ev = es.eigenvalues();
  if (clipped) *clipped = std::max(0.0, -ev.minCoeff());
  ev = ev.cwiseMax(0.0);
  return hermitize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint());
}

CMat orthogonal_complement(const CVec& v) {
  const Eigen::Index n = v.size();
  if (v.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "orthogonal complement of a zero vector");
  // Eigenvectors of v v^H: the n-1 with zero eigenvalue span the complement.
  Eigen::SelfAdjointEigenSolver<CMat> es(v * v.adjoint());
  return es.eigenvectors().leftCols(n - 1);
}

CMat unitary_mapping(const CVec& p_hat, const CVec& q_hat) {
  const Eigen::Index n = p_hat.size();
  const cplx ip = q_hat.dot(p_hat);  // q^H p
  const cplx phase = std::abs(ip) > 0.0 ? ip / std::abs(ip) : cplx(1.0, 0.0);
  // Householder reflector sending p to phase * q, then undo the phase.
  CVec v = p_hat - phase * q_hat;
  const double vv = v.squaredNorm();
  CMat h = CMat::Identity(n, n);
  if (vv > 1e-300) h -= 2.0 * v * v.adjoint() / vv;
  return std::conj(phase) * h;
}

namespace {

void validate_hermitian_psd(const CMat& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "HermitianPSD requires a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "HermitianPSD has non-finite entries");
  const double scale = std::max(m.norm(), 1e-300);
  if ((m - m.adjoint()).norm() > 1e-12 * scale)
    throw Error(ErrorCode::InvalidArgument, "matrix is not Hermitian");
  if (m.rows() == 0) return;
  const double tr = m.trace().real();
  const double floor = -1e-9 * std::max(tr, 0.0) / static_cast<double>(m.rows());
  if (min_eigenvalue(m) < floor - 1e-300)
    throw Error(ErrorCode::InvalidArgument, "matrix is not positive semidefinite");
}

}  // namespace

HermitianPSD::HermitianPSD(const CMat& m) {
  validate_hermitian_psd(m);
  m_ = hermitize(m);
}

HermitianPSD HermitianPSD::zero(Eigen::Index dim) {
  HermitianPSD k;
  k.m_ = CMat::Zero(dim, dim);
  return k;
}

HermitianPSD HermitianPSD::identity(Eigen::Index dim, double scale) {
  if (scale < 0.0) throw Error(ErrorCode::InvalidArgument, "negative identity scale");
  HermitianPSD k;
  k.m_ = CMat::Identity(dim, dim) * scale;
  return k;
}

HermitianPSD HermitianPSD::projected(const CMat& m) {
  HermitianPSD k;
  k.m_ = project_psd(m);
  return k;
}

HermitianPSD HermitianPSD::operator+(const HermitianPSD& o) const {
  if (dim() != o.dim()) throw Error(ErrorCode::DimensionMismatch, "HermitianPSD sum of different sizes");
  HermitianPSD k;
  k.m_ = hermitize(m_ + o.m_);
  return k;
}

HermitianPSD HermitianPSD::scaled(double s) const {
  if (s < 0.0) throw Error(ErrorCode::InvalidArgument, "negative scale of a PSD matrix");
  HermitianPSD k;
  k.m_ = m_ * s;
  return k;
}

}  // namespace eeshare
