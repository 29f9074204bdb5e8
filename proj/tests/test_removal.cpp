#include <doctest.h>

#include <set>

#include "iqr/linalg.hpp"
#include "iqr/random.hpp"
#include "iqr/removal.hpp"
#include "iqr/sampling.hpp"
#include "oracles.hpp"

using namespace iqr;

namespace {

QuadratureRule make_rule(const BasisSpec& spec, const Eigen::MatrixXd& nodes, const Eigen::VectorXd& w) {
  QuadratureRule r;
  r.spec = spec;
  r.nodes = nodes;
  r.weights = w;
  r.source_indices.assign(static_cast<std::size_t>(w.size()), -1);
  r.fixed_mask.assign(static_cast<std::size_t>(w.size()), false);
  return r;
}

/// n random nodes in [0,1]^d with random positive weights summing to one.
QuadratureRule random_rule(Index d, Index n, Index spec_size, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(d, n);
  Eigen::VectorXd w(n);
  for (Index k = 0; k < n; ++k) {
    for (Index i = 0; i < d; ++i) x(i, k) = rng.uniform();
    w(k) = rng.uniform(0.05, 1.0);
  }
  w /= w.sum();
  return make_rule(BasisSpec::legendre(d, spec_size, std::vector<Interval>(d, {0, 1})), x, w);
}

std::set<std::vector<Index>> index_sets(const RemovalSet& s) {
  std::set<std::vector<Index>> out;
  for (const Removal& r : s.removals) out.insert(r.indices);
  return out;
}

/// Independent check of a removal: reduced weights solve the square system
/// on the sub-basis and are nonnegative.
void check_removal(const QuadratureRule& rule, const Removal& r) {
  const Index n = rule.size();
  const Index m = static_cast<Index>(r.indices.size());
  CHECK(std::is_sorted(r.indices.begin(), r.indices.end()));
  CHECK(std::adjacent_find(r.indices.begin(), r.indices.end()) == r.indices.end());
  const BasisSpec sub = rule.spec.resized(n - m);
  std::vector<Index> keep;
  for (Index k = 0; k < n; ++k)
    if (!std::binary_search(r.indices.begin(), r.indices.end(), k)) keep.push_back(k);
  const Eigen::MatrixXd v = build_vandermonde(sub, rule.nodes);
  const Eigen::VectorXd mu = v * rule.weights;
  const auto w = oracle::subset_weights(sub, rule.nodes, keep, mu);
  REQUIRE(w);
  CHECK(w->minCoeff() >= -1e-10);

  const Eigen::VectorXd lib = removal_weights(rule, r.indices);
  for (Index idx : r.indices) CHECK(lib(idx) == 0.0);
  CHECK((v * lib - mu).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(is_valid_removal(rule, r.indices));
}

}  // namespace

TEST_CASE("M-removals equal the brute-force set on small rules") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Index n = 6 + static_cast<Index>(seed % 3);
    const QuadratureRule rule = random_rule(1, n, n, 300 + seed);
    for (Index m = 1; m <= 3; ++m) {
      const RemovalSet got = enumerate_removals(rule, m);
      CHECK(index_sets(got) == oracle::feasible_removals(rule, m));
      CHECK(got.null_basis.cols() == m);
      for (const Removal& r : got.removals) check_removal(rule, r);
    }
  }
}

TEST_CASE("two-dimensional rules: removals equal the brute-force set") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const QuadratureRule rule = random_rule(2, 9, 9, 500 + seed);
    for (Index m = 1; m <= 3; ++m) CHECK(index_sets(enumerate_removals(rule, m)) == oracle::feasible_removals(rule, m));
  }
}

TEST_CASE("a positive rule with a one-dimensional null space has exactly two 1-removals") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Index d = 1 + static_cast<Index>(seed % 3);
    const Index n = 5 + static_cast<Index>(seed % 6);
    const QuadratureRule rule = random_rule(d, n, n - 1, 700 + seed);
    const RemovalSet set = enumerate_removals(rule, 1);
    REQUIRE(set.removals.size() == 2);
    for (const Removal& r : set.removals) {
      check_removal(rule, r);
      const Removal other = neighbor(rule, r, 0);
      CHECK(other.indices != r.indices);
      CHECK(neighbor(rule, other, 0).indices == r.indices);
    }
    CHECK(neighbor(rule, set.removals[0], 0).indices == set.removals[1].indices);
    const Removal first = find_initial_removal(rule, 1);
    CHECK(index_sets(set).count(first.indices) == 1);
  }
}

TEST_CASE("neighbor is an involution and stays valid for M > 1") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QuadratureRule rule = random_rule(2, 10, 10, 900 + seed);
    const RemovalSet set = enumerate_removals(rule, 3);
    const auto all = index_sets(set);
    for (const Removal& r : set.removals) {
      if (r.degenerate) continue;
      for (Index i = 0; i < 3; ++i) {
        const Removal nb = neighbor(rule, r, i);
        check_removal(rule, nb);
        CHECK(all.count(nb.indices) == 1);
        // releasing the entry that came in restores the original removal
        Index pos = 0;
        while (std::binary_search(r.indices.begin(), r.indices.end(), nb.indices[static_cast<std::size_t>(pos)])) ++pos;
        CHECK(neighbor(rule, nb, pos).indices == r.indices);
      }
    }
  }
}

TEST_CASE("find_initial_removal") {
  const QuadratureRule rule = random_rule(1, 5, 5, 41);
  const Removal r2 = find_initial_removal(rule, 2);
  CHECK(oracle::feasible_removals(rule, 2).count(r2.indices) == 1);

  // M = N: one node remains, with weight one.
  const Removal all = find_initial_removal(rule, 4);
  CHECK(all.indices.size() == 4);
  const Eigen::VectorXd w = removal_weights(rule, all.indices);
  CHECK(w.sum() == doctest::Approx(1.0));
  CHECK(w.maxCoeff() == doctest::Approx(1.0));
  CHECK(enumerate_removals(rule, 4).removals.size() == 5);

  CHECK_THROWS(find_initial_removal(rule, 0));
  CHECK_THROWS(find_initial_removal(rule, 5));
}

TEST_CASE("enumeration from two different starts gives the same set") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const QuadratureRule rule = random_rule(2, 11, 11, 1100 + seed);
    const RemovalSet a = enumerate_removals(rule, 3);
    REQUIRE(a.removals.size() >= 2);
    const RemovalSet b = enumerate_removals_from(rule, a.removals.back());
    CHECK(index_sets(a) == index_sets(b));
  }
}

TEST_CASE("symmetric rules give symmetric removal sets") {
  // Nodes mirrored about 1/2 with mirrored weights.
  const Index half = 4;
  Eigen::MatrixXd x(1, 2 * half);
  Eigen::VectorXd w(2 * half);
  Rng rng(77);
  for (Index k = 0; k < half; ++k) {
    x(0, k) = 0.5 * rng.uniform();
    x(0, 2 * half - 1 - k) = 1.0 - x(0, k);
    w(k) = w(2 * half - 1 - k) = rng.uniform(0.1, 1);
  }
  w /= w.sum();
  const QuadratureRule rule = make_rule(BasisSpec::legendre(1, 2 * half, {{0, 1}}), x, w);
  for (Index m = 1; m <= 3; ++m) {
    const auto got = index_sets(enumerate_removals(rule, m));
    CHECK(got == oracle::feasible_removals(rule, m));
    for (const auto& s : got) {
      std::vector<Index> mirrored;
      for (Index k : s) mirrored.push_back(2 * half - 1 - k);
      std::sort(mirrored.begin(), mirrored.end());
      CHECK(got.count(mirrored) == 1);
    }
  }
}

TEST_CASE("degenerate vertices are recorded") {
  const auto spec = BasisSpec::monomial(1, 3);
  Eigen::MatrixXd nodes(1, 4);
  nodes << -1, -0.5, 0.5, 1;
  const QuadratureRule rule = make_rule(spec, nodes, Eigen::Vector4d(1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6));
  const RemovalSet set = enumerate_removals(rule, 1);
  CHECK(index_sets(set) == oracle::feasible_removals(rule, 1));
  CHECK(set.removals.size() == 4);
  for (const Removal& r : set.removals) {
    CHECK(r.degenerate);
    CHECK(r.zero_set.size() == 2);
  }
  CHECK(set.stats.degenerate_vertices > 0);
}

TEST_CASE("cap is enforced") {
  const QuadratureRule rule = random_rule(2, 12, 12, 5);
  CHECK_THROWS_AS(enumerate_removals(rule, 4, 3), CapExceeded);

  const RemovalSet full = enumerate_removals(rule, 4);
  REQUIRE(full.removals.size() > 3);
  const Removal root = find_initial_removal(rule, 4);
  const VertexSearch part = enumerate_vertices(full.null_basis, rule.weights, root.indices, 3, OnCap::truncate);
  CHECK(part.stats.truncated);
  CHECK(part.vertices.size() == 3);
  const auto all = index_sets(full);
  for (const SimplexVertex& v : part.vertices) CHECK(all.count(v.tight) == 1);
  CHECK_FALSE(enumerate_vertices(full.null_basis, rule.weights, root.indices, 100000, OnCap::truncate).stats.truncated);
}

TEST_CASE("removal vertex location") {
  const QuadratureRule rule = random_rule(1, 7, 7, 13);
  const RemovalSet set = enumerate_removals(rule, 2);
  for (const Removal& r : set.removals) {
    const Eigen::VectorXd v = rule.weights - set.null_basis * r.alphas;
    for (Index idx : r.indices) CHECK(std::abs(v(idx)) < 1e-13);
    CHECK(v.minCoeff() > -1e-13);
    CHECK((v - removal_weights(rule, r.indices)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("work grows with the number of removals") {
  // Non-degenerate enumeration visits each vertex once.
  const QuadratureRule rule = random_rule(2, 14, 14, 99);
  for (Index m = 1; m <= 4; ++m) {
    const RemovalSet set = enumerate_removals(rule, m);
    CHECK(set.stats.vertices == set.removals.size());
    CHECK(set.stats.neighbor_evaluations == set.removals.size() * static_cast<std::size_t>(m));
  }
}

TEST_CASE("removal on a fixed rule built from samples") {
  const SampleSet s = generate(DistributionSpec::uniform({0.0}, {1.0}, 3), 8);
  const auto spec = BasisSpec::legendre(1, 4, bounding_box(s.points));
  const QuadratureRule rule = construct_fixed_rule(s, spec);
  for (Index m = 1; m < rule.size(); ++m) {
    CHECK(index_sets(enumerate_removals(rule, m)) == oracle::feasible_removals(rule, m));
  }
}
