#include "iqr/basis.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace iqr {

bool grevlex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.total_degree();
  const int db = b.total_degree();
  if (da != db) return da < db;
  for (Index i = a.dim() - 1; i >= 0; --i) {
    if (a.exponents(i) != b.exponents(i)) return a.exponents(i) < b.exponents(i);
  }
  return false;
}

namespace {

void compositions(Index d, int degree, Index pos, Eigen::VectorXi& current,
                  std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    current(pos) = degree;
    out.push_back({current});
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current(pos) = e;
    compositions(d, degree - e, pos + 1, current, out);
  }
}

}  // namespace

std::vector<MultiIndex> generate_indices(Index d, Index count) {
  if (d < 1) throw std::invalid_argument("generate_indices: d must be >= 1");
  if (count < 1) throw std::invalid_argument("generate_indices: count must be >= 1");

  std::vector<MultiIndex> result;
  result.reserve(static_cast<std::size_t>(count));
  Eigen::VectorXi current(d);
  for (int degree = 0; static_cast<Index>(result.size()) < count; ++degree) {
    std::vector<MultiIndex> level;
    compositions(d, degree, 0, current, level);
    std::sort(level.begin(), level.end(), grevlex_less);
    for (auto& m : level) {
      if (static_cast<Index>(result.size()) == count) break;
      result.push_back(std::move(m));
    }
  }
  return result;
}

std::uint64_t dimension_for_degree(Index d, Index degree) {
  if (d < 1 || degree < 0) throw std::invalid_argument("dimension_for_degree: need d >= 1, Q >= 0");
  // binomial(Q + d, d) built up as prod_{i=1..k} (n - k + i) / i with k = min(d, Q),
  // every partial product is itself a binomial coefficient.
  const auto n = static_cast<std::uint64_t>(degree + d);
  const auto k = static_cast<std::uint64_t>(std::min(d, degree));
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t factor = n - k + i;
    // result * factor / i, with the division applied before multiplying where
    // possible so intermediate values stay as small as the result allows.
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t f = factor / (i / g);
    if (r != 0 && f > std::numeric_limits<std::uint64_t>::max() / r) {
      throw std::overflow_error("dimension_for_degree: binomial(" + std::to_string(n) + ", " +
                                std::to_string(d) + ") overflows 64 bits");
    }
    result = r * f;
  }
  return result;
}

std::vector<Interval> bounding_box(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (points.cols() == 0) throw std::invalid_argument("bounding_box: no points");
  std::vector<Interval> box(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    double lo = points.row(i).minCoeff();
    double hi = points.row(i).maxCoeff();
    if (!(lo < hi)) {
      lo -= 0.5;
      hi += 0.5;
    }
    box[static_cast<std::size_t>(i)] = {lo, hi};
  }
  return box;
}

BasisSpec::BasisSpec(Index d, Index size, BasisFamily family, std::vector<Interval> domain)
    : d_(d), size_(size), family_(family), domain_(std::move(domain)) {
  if (d < 1) throw std::invalid_argument("BasisSpec: d must be >= 1");
  if (size < 1) throw std::invalid_argument("BasisSpec: size must be >= 1");
  if (static_cast<Index>(domain_.size()) != d) {
    throw DimensionMismatch("BasisSpec: domain has " + std::to_string(domain_.size()) +
                            " intervals for d = " + std::to_string(d));
  }
  for (const auto& box : domain_) {
    if (!(box.lo < box.hi)) throw std::invalid_argument("BasisSpec: domain requires lo < hi");
  }
  indices_ = generate_indices(d, size);
  max_exponent_.assign(static_cast<std::size_t>(d), 0);
  for (const auto& m : indices_) {
    for (Index i = 0; i < d; ++i) {
      auto& e = max_exponent_[static_cast<std::size_t>(i)];
      e = std::max(e, m.exponents(i));
    }
  }
}

BasisSpec BasisSpec::monomial(Index d, Index size) {
  return BasisSpec(d, size, BasisFamily::monomial, std::vector<Interval>(static_cast<std::size_t>(d)));
}

BasisSpec BasisSpec::legendre(Index d, Index size) {
  return BasisSpec(d, size, BasisFamily::product_legendre,
                   std::vector<Interval>(static_cast<std::size_t>(d)));
}

BasisSpec BasisSpec::legendre(Index d, Index size, std::vector<Interval> domain) {
  return BasisSpec(d, size, BasisFamily::product_legendre, std::move(domain));
}

BasisSpec BasisSpec::resized(Index size) const { return BasisSpec(d_, size, family_, domain_); }

}  // namespace iqr
