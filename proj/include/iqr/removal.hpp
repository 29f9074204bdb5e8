#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "iqr/rule.hpp"

namespace iqr {

inline constexpr std::size_t kDefaultRemovalCap = 1'000'000;

/// A set of M nodes whose joint deletion leaves a nonnegative rule that is
/// exact on the first N+1-M basis functions. `alphas` locates the vertex of
/// the feasibility simplex {alpha : w - C alpha >= 0}, C being the orthonormal
/// null basis returned by null_space.
struct Removal {
  std::vector<Index> indices;   // strictly increasing
  Eigen::VectorXd alphas;
  std::vector<Index> zero_set;  // every node whose weight vanishes at the vertex
  bool degenerate = false;      // zero_set is larger than indices
};

struct EnumerationStats {
  std::size_t vertices = 0;
  std::size_t neighbor_evaluations = 0;
  std::size_t degenerate_vertices = 0;
  bool truncated = false;  // the walk stopped at the cap
};

/// What enumerate_vertices does once the cap is reached.
enum class OnCap { raise, truncate };

struct RemovalSet {
  std::vector<Removal> removals;  // ascending by indices
  Eigen::MatrixXd null_basis;     // n x M
  EnumerationStats stats;
};

/// Vertex of {alpha : w - C alpha >= 0} given by the rows held at zero.
struct SimplexVertex {
  std::vector<Index> tight;  // sorted, |tight| = cols(C)
  Eigen::VectorXd alpha;
  std::vector<Index> zero_set;
};

struct VertexSearch {
  std::vector<SimplexVertex> vertices;  // ascending by tight set
  EnumerationStats stats;
};

/// The vertex with the given tight rows; alpha solves C_S alpha = w_S.
SimplexVertex vertex_at(const Eigen::Ref<const Eigen::MatrixXd>& c, const Eigen::Ref<const Eigen::VectorXd>& w,
                        std::vector<Index> tight);

/// Breadth-first walk over the vertex graph of {alpha : w - C alpha >= 0},
/// starting from the vertex whose tight rows are `root`. C need not be
/// orthonormal; its columns must span the null space of the constraint
/// matrix. Where several rows leave at once, one neighbour is produced per
/// candidate, so every tight set of a degenerate vertex is reached.
/// Past `cap` vertices: throws CapExceeded, or with OnCap::truncate stops
/// queueing new tight sets and returns the `cap` vertices reached.
VertexSearch enumerate_vertices(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                const Eigen::Ref<const Eigen::VectorXd>& w, std::vector<Index> root,
                                std::size_t cap = kDefaultRemovalCap, OnCap on_cap = OnCap::raise);

/// Weights on all N+1 nodes after deleting `indices` (zero there), from the
/// square system on the remaining nodes. Throws SingularSystem.
Eigen::VectorXd removal_weights(const QuadratureRule& rule, const std::vector<Index>& indices);

/// Direct check: the reduced system is nonsingular and its solution is
/// nonnegative up to the zero tolerance.
bool is_valid_removal(const QuadratureRule& rule, const std::vector<Index>& indices);

/// M successive 1-removals on the shrinking rule, each one taking the end
/// point of smaller magnitude. Throws NoRemovalExists.
Removal find_initial_removal(const QuadratureRule& rule, Index m);

/// The other M-removal sharing every entry but indices[i] (zero based).
/// Throws NumericalTie when both end points coincide with indices[i].
Removal neighbor(const QuadratureRule& rule, const Removal& removal, Index i);

/// Every M-removal of a positive rule.
RemovalSet enumerate_removals(const QuadratureRule& rule, Index m, std::size_t cap = kDefaultRemovalCap);

/// Same, walking from a given removal instead of the greedy one.
RemovalSet enumerate_removals_from(const QuadratureRule& rule, const Removal& start,
                                   std::size_t cap = kDefaultRemovalCap);

}  // namespace iqr
