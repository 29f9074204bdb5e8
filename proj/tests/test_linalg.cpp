#include <doctest.h>

#include <cmath>

#include "iqr/linalg.hpp"
#include "iqr/random.hpp"
#include "oracles.hpp"

using namespace iqr;

namespace {

Eigen::MatrixXd random_points(Index d, Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd p(d, n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < d; ++i) p(i, k) = rng.uniform();
  return p;
}

double residual(const Eigen::MatrixXd& v, const Eigen::VectorXd& c) { return (v * c).norm() / v.norm(); }

}  // namespace

TEST_CASE("build_vandermonde examples") {
  Eigen::MatrixXd nodes(1, 2);
  nodes << 0, 1;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 0, 1;
  CHECK(build_vandermonde(BasisSpec::monomial(1, 2), nodes) == expected);

  Eigen::MatrixXd three(1, 3);
  three << -1, 0, 1;
  Eigen::MatrixXd leg(3, 3);
  leg << 1, 1, 1, -1, 0, 1, 1, -0.5, 1;
  CHECK((build_vandermonde(BasisSpec::legendre(1, 3), three) - leg).norm() < 1e-15);

  const auto spec = BasisSpec::legendre(2, 10, {{0, 1}, {0, 1}});
  const Eigen::MatrixXd p = random_points(2, 1, 4);
  CHECK((build_vandermonde(spec, p).col(0) - evaluate_basis(spec, p.col(0))).norm() == 0.0);
  CHECK((build_vandermonde(spec, random_points(2, 7, 5)).row(0).array() == 1.0).all());
  CHECK_THROWS_AS(build_vandermonde(spec, random_points(3, 2, 1)), DimensionMismatch);
}

TEST_CASE("null_vector examples") {
  Eigen::MatrixXd ones(1, 2);
  ones << 1, 1;
  const Eigen::VectorXd c = null_vector(ones);
  CHECK(c(0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(c(1) == doctest::Approx(-1 / std::sqrt(2.0)));

  Eigen::MatrixXd nodes(1, 3);
  nodes << 0, 1, 2;
  const Eigen::MatrixXd v = build_vandermonde(BasisSpec::monomial(1, 2), nodes);
  const Eigen::VectorXd c2 = null_vector(v);
  const Eigen::Vector3d ref = Eigen::Vector3d(1, -2, 1).normalized();
  CHECK((c2 - ref).norm() < 1e-14);
}

TEST_CASE("null_vector contract on random Vandermonde matrices") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index d = 1 + static_cast<Index>(seed % 3);
    const auto spec = BasisSpec::legendre(d, 6 + static_cast<Index>(seed % 5), std::vector<Interval>(d, {0, 1}));
    const Eigen::MatrixXd v = build_vandermonde(spec, random_points(d, spec.size() + 1, seed));
    const Eigen::VectorXd c = null_vector(v);
    CHECK(std::abs(c.norm() - 1) < 1e-14);
    CHECK(residual(v, c) <= kNullTolerance);
    CHECK(std::abs(c.sum()) <= 1e-9);
    CHECK(c.maxCoeff() > 0);
    CHECK(c.minCoeff() < 0);
    // first significant entry positive
    Index first = 0;
    while (std::abs(c(first)) <= 1e-14 * c.cwiseAbs().maxCoeff()) ++first;
    CHECK(c(first) > 0);
    // bit-identical on repeat
    CHECK((null_vector(v).array() == c.array()).all());
  }
}

TEST_CASE("null_space examples") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, 3);
  const Eigen::MatrixXd c = null_space(ones, 2);
  CHECK((c.transpose() * c - Eigen::Matrix2d::Identity()).norm() < 1e-14);
  CHECK((ones * c).norm() < 1e-14);

  const Eigen::MatrixXd v = build_vandermonde(BasisSpec::legendre(1, 4, {{0, 1}}), random_points(1, 7, 11));
  const Eigen::MatrixXd n3 = null_space(v, 3);
  CHECK((n3.transpose() * n3 - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  for (Index j = 0; j < 3; ++j) CHECK(residual(v, n3.col(j)) <= kNullTolerance);

  const Eigen::MatrixXd n1 = null_space(v.leftCols(5), 1);
  const Eigen::VectorXd c1 = null_vector(v.leftCols(5));
  CHECK(std::abs(std::abs(n1.col(0).dot(c1)) - 1) < 1e-12);
}

TEST_CASE("numerical_rank") {
  Eigen::MatrixXd nodes(1, 4);
  nodes << 0, 1, 1, 2;
  const Eigen::MatrixXd v = build_vandermonde(BasisSpec::monomial(1, 4), nodes);
  CHECK(numerical_rank(v) == 3);
  CHECK(numerical_rank(Eigen::MatrixXd::Identity(5, 5)) == 5);
}

TEST_CASE("extend_solve agrees with null_vector on the explicit matrix") {
  const auto spec = BasisSpec::legendre(2, 10, {{0, 1}, {0, 1}});
  const Eigen::MatrixXd init = random_points(2, 10, 21);
  const Eigen::MatrixXd stream = random_points(2, 100, 22);
  Eigen::MatrixXd base = build_vandermonde(spec, init);
  ExtensionSolver handle = refactor_for_extension(base);
  for (Index s = 0; s < stream.cols(); ++s) {
    const Eigen::VectorXd col = evaluate_basis(spec, stream.col(s));
    const Eigen::VectorXd c = extend_solve(handle, col);
    Eigen::MatrixXd full(10, 11);
    full << handle.base(), col;
    CHECK(residual(full, c) <= 1e-9);
    const Eigen::VectorXd ref = null_vector(full);
    CHECK(std::abs(c.dot(ref)) >= 1 - 1e-9);
    Index k = 0;
    c.head(10).cwiseAbs().maxCoeff(&k);
    handle.replace_column(k, col);
  }
}

TEST_CASE("duplicate column gives a null vector on the pair") {
  ExtensionSolver handle(Eigen::MatrixXd::Identity(4, 4));
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(4, 0);
  const Eigen::VectorXd c = handle.extend_solve(e1);
  CHECK(std::abs(c(0) - 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(c(4) + 1 / std::sqrt(2.0)) < 1e-15);
  CHECK(c.segment(1, 3).norm() == 0.0);
}

TEST_CASE("null_vector with a duplicated node") {
  Eigen::MatrixXd nodes(1, 5);
  nodes << 0, 0.5, 0.5, 1, 0.25;
  const Eigen::MatrixXd v = build_vandermonde(BasisSpec::legendre(1, 4, {{0, 1}}), nodes);
  const Eigen::VectorXd c = null_vector(v);
  CHECK(residual(v, c) <= kNullTolerance);
}
