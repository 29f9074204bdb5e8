#pragma once

#include <vector>

#include <Eigen/Dense>

#include "iqr/basis.hpp"

namespace iqr {

/// Relative residual bound ||V c||_2 <= kNullTolerance * ||V||_F for every
/// null vector handed out by this module.
inline constexpr double kNullTolerance = 1e-10;

/// V(j, k) = phi_j(nodes.col(k)); nodes is d x n.
Eigen::MatrixXd build_vandermonde(const BasisSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& nodes);

/// Flips the sign of `c` so that its first significant entry is positive.
void apply_sign_convention(Eigen::Ref<Eigen::VectorXd> c);

/// Numerical rank of V from a column-pivoted QR of V^T.
Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& v);

/// `count` orthonormal null vectors of V (n x count), extracted from the
/// trailing columns of the orthogonal factor of a column-pivoted QR of V^T.
/// Throws NullSpaceFailure when any of them violates the residual bound.
Eigen::MatrixXd null_space(const Eigen::Ref<const Eigen::MatrixXd>& v, Index count);

/// Unit null vector of V with the sign convention applied.
Eigen::VectorXd null_vector(const Eigen::Ref<const Eigen::MatrixXd>& v);

/// Keeps the inverse of a square base matrix B (or of a square column subset
/// of a wide one) and hands out null vectors of [B | v] without refactoring.
/// Column replacements are folded in as rank-one product-form updates; the
/// inverse is rebuilt from B every `refactor_interval` updates or whenever a
/// residual check fails.
class ExtensionSolver {
 public:
  explicit ExtensionSolver(Eigen::MatrixXd base, int refactor_interval = 64);

  Index rows() const { return base_.rows(); }
  Index cols() const { return base_.cols(); }
  const Eigen::MatrixXd& base() const { return base_; }
  /// Columns of the base that form the factored square block.
  const std::vector<Index>& basis() const { return basis_; }
  const Eigen::MatrixXd& inverse() const { return inverse_; }

  /// Null vector of [base | column], unit length, sign convention applied.
  Eigen::VectorXd extend_solve(const Eigen::Ref<const Eigen::VectorXd>& column);

  /// Coefficients u with B_basis u = column.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& column) const;

  /// Replaces base column `position` by `column`. Only valid for square bases.
  void replace_column(Index position, const Eigen::Ref<const Eigen::VectorXd>& column);

  /// Moves column `position` to the end, shifting the later ones left.
  void move_column_to_end(Index position);

  void refactor();
  int updates_since_refactor() const { return updates_; }

 private:
  bool residual_ok(const Eigen::VectorXd& u, const Eigen::Ref<const Eigen::VectorXd>& column) const;

  Eigen::MatrixXd base_;
  std::vector<Index> basis_;
  Eigen::MatrixXd inverse_;
  int refactor_interval_;
  int updates_ = 0;
};

/// Factorization handle for null vectors of base matrices extended by one
/// column.
inline ExtensionSolver refactor_for_extension(const Eigen::Ref<const Eigen::MatrixXd>& base) {
  return ExtensionSolver(Eigen::MatrixXd(base));
}

inline Eigen::VectorXd extend_solve(ExtensionSolver& handle, const Eigen::Ref<const Eigen::VectorXd>& column) {
  return handle.extend_solve(column);
}

}  // namespace iqr
