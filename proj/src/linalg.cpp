#include "iqr/linalg.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace iqr {

Eigen::MatrixXd build_vandermonde(const BasisSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& nodes) {
  if (nodes.cols() == 0) throw std::invalid_argument("build_vandermonde: no nodes");
  if (nodes.rows() != spec.dim()) {
    throw DimensionMismatch("build_vandermonde: nodes have dimension " + std::to_string(nodes.rows()) +
                            ", basis expects " + std::to_string(spec.dim()));
  }
  Eigen::MatrixXd v(spec.size(), nodes.cols());
  for (Index k = 0; k < nodes.cols(); ++k) v.col(k) = evaluate_basis(spec, nodes.col(k));
  return v;
}

void apply_sign_convention(Eigen::Ref<Eigen::VectorXd> c) {
  const double scale = c.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Index k = 0; k < c.size(); ++k) {
    if (std::abs(c(k)) > 1e-12 * scale) {
      if (c(k) < 0.0) c = -c;
      return;
    }
  }
}

Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXd>& v) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v.transpose());
  return qr.rank();
}

Eigen::MatrixXd null_space(const Eigen::Ref<const Eigen::MatrixXd>& v, Index count) {
  const Index n = v.cols();
  if (count < 1 || count > n) {
    throw std::invalid_argument("null_space: requested " + std::to_string(count) + " vectors for " +
                                std::to_string(n) + " columns");
  }
  // V^T P = Q R: the first rank(V) columns of Q span range(V^T), the trailing
  // ones its orthogonal complement, which is the null space of V.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v.transpose());
  Eigen::MatrixXd tail = Eigen::MatrixXd::Identity(n, n).rightCols(count);
  tail.applyOnTheLeft(qr.householderQ());

  const double bound = kNullTolerance * std::max(v.norm(), std::numeric_limits<double>::min());
  for (Index i = 0; i < count; ++i) {
    apply_sign_convention(tail.col(i));
    const double residual = (v * tail.col(i)).norm();
    if (!(residual <= bound)) {
      throw NullSpaceFailure("null_space: residual " + std::to_string(residual) + " exceeds " +
                             std::to_string(bound) + " (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(v.rows()) + "x" + std::to_string(n) + ")");
    }
  }
  return tail;
}

Eigen::VectorXd null_vector(const Eigen::Ref<const Eigen::MatrixXd>& v) { return null_space(v, 1).col(0); }

ExtensionSolver::ExtensionSolver(Eigen::MatrixXd base, int refactor_interval)
    : base_(std::move(base)), refactor_interval_(refactor_interval) {
  const Index r = base_.rows();
  if (base_.cols() < r) {
    throw std::invalid_argument("ExtensionSolver: base must have at least as many columns as rows");
  }
  if (base_.cols() == r) {
    basis_.resize(static_cast<std::size_t>(r));
    std::iota(basis_.begin(), basis_.end(), Index{0});
  } else {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(base_);
    if (qr.rank() < r) throw NullSpaceFailure("ExtensionSolver: base matrix is rank deficient");
    for (Index i = 0; i < r; ++i) basis_.push_back(qr.colsPermutation().indices()(i));
  }
  refactor();
}

void ExtensionSolver::refactor() {
  const Index r = base_.rows();
  Eigen::MatrixXd square(r, r);
  for (Index i = 0; i < r; ++i) square.col(i) = base_.col(basis_[static_cast<std::size_t>(i)]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(square);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    throw NullSpaceFailure("ExtensionSolver: base matrix is numerically singular (rcond " +
                           std::to_string(rcond) + ")");
  }
  inverse_ = lu.inverse();
  updates_ = 0;
}

Eigen::VectorXd ExtensionSolver::solve(const Eigen::Ref<const Eigen::VectorXd>& column) const {
  return inverse_ * column;
}

bool ExtensionSolver::residual_ok(const Eigen::VectorXd& u, const Eigen::Ref<const Eigen::VectorXd>& column) const {
  Eigen::VectorXd r = -column;
  for (Index i = 0; i < u.size(); ++i) r.noalias() += u(i) * base_.col(basis_[static_cast<std::size_t>(i)]);
  const double scale = std::sqrt(base_.squaredNorm() + column.squaredNorm());
  const double length = std::sqrt(u.squaredNorm() + 1.0);
  return r.allFinite() && r.norm() <= kNullTolerance * scale * length;
}

Eigen::VectorXd ExtensionSolver::extend_solve(const Eigen::Ref<const Eigen::VectorXd>& column) {
  if (column.size() != rows()) throw DimensionMismatch("extend_solve: column length mismatch");
  Eigen::VectorXd u = solve(column);
  if (!residual_ok(u, column) && updates_ > 0) {
    refactor();
    u = solve(column);
  }
  if (!residual_ok(u, column)) {
    Eigen::MatrixXd extended(rows(), cols() + 1);
    extended << base_, column;
    return null_vector(extended);
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(cols() + 1);
  for (Index i = 0; i < u.size(); ++i) c(basis_[static_cast<std::size_t>(i)]) = u(i);
  c(cols()) = -1.0;
  c.normalize();
  apply_sign_convention(c);
  return c;
}

void ExtensionSolver::replace_column(Index position, const Eigen::Ref<const Eigen::VectorXd>& column) {
  if (cols() != rows()) throw std::logic_error("ExtensionSolver::replace_column needs a square base");
  const Eigen::VectorXd u = inverse_ * column;
  base_.col(position) = column;
  const double pivot = u(position);
  if (!(std::abs(pivot) > 1e-10 * u.cwiseAbs().maxCoeff()) || ++updates_ >= refactor_interval_) {
    refactor();
    return;
  }
  // Product-form update of the inverse for a single column exchange.
  const Eigen::RowVectorXd pivot_row = inverse_.row(position) / pivot;
  inverse_.noalias() -= u * pivot_row;
  inverse_.row(position) = pivot_row;
}

void ExtensionSolver::move_column_to_end(Index position) {
  if (cols() != rows()) throw std::logic_error("ExtensionSolver::move_column_to_end needs a square base");
  const Index n = cols();
  if (position == n - 1) return;
  const Eigen::VectorXd moved = base_.col(position);
  const Eigen::RowVectorXd moved_row = inverse_.row(position);
  const Index tail = n - 1 - position;
  base_.middleCols(position, tail) = base_.middleCols(position + 1, tail).eval();
  base_.col(n - 1) = moved;
  inverse_.middleRows(position, tail) = inverse_.middleRows(position + 1, tail).eval();
  inverse_.row(n - 1) = moved_row;
}

}  // namespace iqr
