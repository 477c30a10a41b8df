#include "ampc/linalg.hpp"

#include "ampc/error.hpp"

#include <limits>

namespace ampc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Configuration: return "ConfigurationError";
    case ErrorCode::EigenvalueOneAtEquilibrium: return "EigenvalueOneAtEquilibrium";
    case ErrorCode::NoEquilibriumFound: return "NoEquilibriumFound";
    case ErrorCode::PeriodicityJacobianSingular: return "PeriodicityJacobianSingular";
    case ErrorCode::ShootingDiverged: return "ShootingDiverged";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::CertificationFailed: return "CertificationFailed";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::PenaltyStalled: return "PenaltyStalled";
    case ErrorCode::RolloutDiverged: return "RolloutDiverged";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::IllConditionedUpdate: return "IllConditionedUpdate";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
  }
  return "Unknown";
}

EigenBounds symmetric_eigen_bounds(const MatrixXd& sym) {
  if (sym.rows() == 0) return {};
  if (sym.rows() == 1) return {sym(0, 0), sym(0, 0)};
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

int numerical_rank(const MatrixXd& mat, double scale) {
  if (mat.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = scale * std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return rank;
}

bool is_symmetric(const MatrixXd& mat, double tol) {
  if (mat.rows() != mat.cols()) return false;
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  return (mat - mat.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const MatrixXd& mat) {
  if (mat.rows() == 0 || !is_symmetric(mat)) return false;
  Eigen::LLT<MatrixXd> llt(mat);
  return llt.info() == Eigen::Success && symmetric_eigen_bounds(mat).min > 0.0;
}

MatrixXd weight_root(const MatrixXd& mat) {
  Eigen::LLT<MatrixXd> llt(mat);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("weight matrix is not positive definite");
  }
  return llt.matrixU();
}

VectorXd stack(const Sequence& seq) {
  if (seq.empty()) return {};
  const auto block = seq.front().size();
  VectorXd flat(block * static_cast<Eigen::Index>(seq.size()));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    flat.segment(static_cast<Eigen::Index>(i) * block, block) = seq[i];
  }
  return flat;
}

Sequence unstack(const VectorXd& flat, int block, int count) {
  Sequence seq(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) seq[i] = flat.segment(i * block, block);
  return seq;
}

bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace ampc
