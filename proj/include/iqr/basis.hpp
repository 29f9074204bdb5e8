#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iqr/errors.hpp"

namespace iqr {

using Index = Eigen::Index;

/// Exponent vector of a d-variate monomial (or of a product of univariate
/// Legendre polynomials).
struct MultiIndex {
  Eigen::VectorXi exponents;

  Index dim() const { return exponents.size(); }
  int total_degree() const { return exponents.sum(); }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.exponents.size() == b.exponents.size() && a.exponents == b.exponents;
  }
};

/// Graded reverse lexicographic comparison. Lower total degree first; within
/// a degree, the exponent vectors are compared from the last coordinate and
/// the larger last-differing exponent sorts later.
bool grevlex_less(const MultiIndex& a, const MultiIndex& b);

/// First `count` multi-indices of dimension `d` in graded reverse
/// lexicographic order. The first entry is the zero index.
std::vector<MultiIndex> generate_indices(Index d, Index count);

/// binomial(Q + d, d), the number of d-variate polynomials of degree <= Q.
/// Throws std::overflow_error instead of wrapping.
std::uint64_t dimension_for_degree(Index d, Index degree);

enum class BasisFamily { monomial, product_legendre };

/// Closed coordinate range mapped affinely onto [-1, 1].
struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-coordinate bounding box of the columns of `points` (d x n). A
/// coordinate with zero extent is widened by 1/2 on either side.
std::vector<Interval> bounding_box(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// The polynomial space Phi_D = span{phi_0, ..., phi_D}: dimension, number of
/// basis functions, family, graded index list and domain map.
class BasisSpec {
 public:
  BasisSpec() = default;
  BasisSpec(Index d, Index size, BasisFamily family, std::vector<Interval> domain);

  static BasisSpec monomial(Index d, Index size);
  static BasisSpec legendre(Index d, Index size);
  static BasisSpec legendre(Index d, Index size, std::vector<Interval> domain);

  Index dim() const { return d_; }
  Index size() const { return size_; }
  BasisFamily family() const { return family_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const std::vector<Interval>& domain() const { return domain_; }

  /// Largest exponent that occurs in coordinate i.
  int max_exponent(Index i) const { return max_exponent_[static_cast<std::size_t>(i)]; }

  /// Same family and domain with a different number of basis functions.
  /// Smaller sizes give a prefix of the index list.
  BasisSpec resized(Index size) const;

  friend bool operator==(const BasisSpec& a, const BasisSpec& b) {
    return a.d_ == b.d_ && a.size_ == b.size_ && a.family_ == b.family_ && a.domain_ == b.domain_;
  }

 private:
  Index d_ = 0;
  Index size_ = 0;
  BasisFamily family_ = BasisFamily::product_legendre;
  std::vector<Interval> domain_;
  std::vector<MultiIndex> indices_;
  std::vector<int> max_exponent_;
};

/// P_0(x), ..., P_n(x) through the three-term recurrence
/// (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
template <typename Scalar>
void legendre_values(Scalar x, int max_degree, Scalar* out) {
  out[0] = Scalar(1);
  if (max_degree == 0) return;
  out[1] = x;
  for (int k = 1; k < max_degree; ++k) {
    out[k + 1] = (Scalar(2 * k + 1) * x * out[k] - Scalar(k) * out[k - 1]) / Scalar(k + 1);
  }
}

/// Values phi_0(point), ..., phi_D(point).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> evaluate_basis(
    const BasisSpec& spec, const Eigen::MatrixBase<Derived>& point) {
  using Scalar = typename Derived::Scalar;
  const Index d = spec.dim();
  if (point.size() != d) {
    throw DimensionMismatch("evaluate_basis: point has dimension " + std::to_string(point.size()) +
                            ", basis expects " + std::to_string(d));
  }

  // table(k, i) holds the univariate factor of degree k in coordinate i.
  int max_deg = 0;
  for (Index i = 0; i < d; ++i) max_deg = std::max(max_deg, spec.max_exponent(i));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> table(max_deg + 1, d);
  for (Index i = 0; i < d; ++i) {
    const int deg = spec.max_exponent(i);
    const Scalar xi = point(i);
    if (spec.family() == BasisFamily::product_legendre) {
      const Interval& box = spec.domain()[static_cast<std::size_t>(i)];
      const Scalar mapped = (Scalar(2) * xi - Scalar(box.lo) - Scalar(box.hi)) / Scalar(box.hi - box.lo);
      legendre_values(mapped, deg, &table(0, i));
    } else {
      table(0, i) = Scalar(1);
      for (int k = 1; k <= deg; ++k) table(k, i) = table(k - 1, i) * xi;
    }
  }

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values(spec.size());
  const auto& idx = spec.indices();
  for (Index j = 0; j < spec.size(); ++j) {
    const Eigen::VectorXi& e = idx[static_cast<std::size_t>(j)].exponents;
    Scalar v(1);
    for (Index i = 0; i < d; ++i) {
      if (e(i) != 0) v *= table(e(i), i);
    }
    values(j) = v;
  }
  return values;
}

}  // namespace iqr
