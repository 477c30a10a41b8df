#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ampc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A sequence of equally sized vectors (states or inputs over time).
using Sequence = std::vector<VectorXd>;

struct EigenBounds {
  double min = 0.0;
  double max = 0.0;
};

/// Extreme eigenvalues of a symmetric matrix (only the lower triangle is read).
EigenBounds symmetric_eigen_bounds(const MatrixXd& sym);

/// Numerical rank with tolerance `scale * eps * sigma_max`.
int numerical_rank(const MatrixXd& mat, double scale);

bool is_symmetric(const MatrixXd& mat, double tol = 1e-12);
bool is_positive_definite(const MatrixXd& mat);

/// Upper factor U with U^T U = mat, so that |U v|^2 = v^T mat v.
MatrixXd weight_root(const MatrixXd& mat);

/// Stack a sequence of vectors into one column.
VectorXd stack(const Sequence& seq);
Sequence unstack(const VectorXd& flat, int block, int count);

bool all_finite(const VectorXd& v);

}  // namespace ampc
