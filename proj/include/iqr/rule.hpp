#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iqr/basis.hpp"

namespace iqr {

enum class SampleSource { file, generator };

struct SampleProvenance {
  SampleSource source = SampleSource::generator;
  std::string description;  // file path or distribution JSON
  std::uint64_t seed = 0;
};

/// Ordered samples y_0, ..., y_K stored as the columns of a d x (K+1) matrix.
/// Order matters: construction walks the samples front to back.
struct SampleSet {
  Eigen::MatrixXd points;
  SampleProvenance provenance;

  Index dim() const { return points.rows(); }
  Index count() const { return points.cols(); }
  auto point(Index k) const { return points.col(k); }
};

/// Raw sample moments mu_j = (1/(K+1)) sum_k phi_j(y_k).
struct MomentVector {
  Eigen::VectorXd values;
  Index K = 0;  // index of the last sample included
};

/// Positive interpolatory rule whose nodes are drawn from a sample set.
/// K is the index of the last sample whose moments the rule reproduces, so
/// the rule integrates the discrete distribution of K+1 samples.
struct QuadratureRule {
  BasisSpec spec;
  Eigen::MatrixXd nodes;  // d x (N+1)
  Eigen::VectorXd weights;
  std::vector<Index> source_indices;
  std::vector<bool> fixed_mask;
  Index K = 0;

  Index size() const { return weights.size(); }
  Index dim() const { return nodes.rows(); }
};

/// Which end of the feasible interval a single-node removal uses.
enum class AlphaChoice { alpha1, alpha2, smallest_abs };

struct AlphaSelection {
  double alpha1;  // min v_k / c_k over c_k > 0
  Index k1;
  double alpha2;  // max v_k / c_k over c_k < 0
  Index k2;
};

struct RemovalInterval {
  double alpha_min;  // max w_k / c_k over c_k < 0
  Index k_min;
  double alpha_max;  // min w_k / c_k over c_k > 0
  Index k_max;
  bool feasible;     // alpha_min <= alpha_max
};

/// Entries with |c_k| below this fraction of max|c_k| count as zero.
inline constexpr double kNullEntryTolerance = 1e-13;
/// Weights at or below kZeroWeightTolerance * max(w) are dropped.
inline constexpr double kZeroWeightTolerance = 1e-13;
/// Moment residual accepted for constructed rules (Legendre basis).
inline constexpr double kMomentTolerance = 1e-8;

MomentVector sample_moments(const SampleSet& samples, const BasisSpec& spec);

/// Solves the square system V(nodes) w = moments. Throws SingularSystem when
/// the nodes are not unisolvent for the basis.
Eigen::VectorXd solve_interpolatory_weights(const Eigen::Ref<const Eigen::MatrixXd>& nodes,
                                            const Eigen::Ref<const Eigen::VectorXd>& moments,
                                            const BasisSpec& spec);

/// Appends y: old weights scale by (K+1)/(K+2), y gets 1/(K+2), K grows by one.
QuadratureRule add_sample(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& y,
                          Index source_index = -1);

AlphaSelection select_alpha(const Eigen::Ref<const Eigen::VectorXd>& weights,
                            const Eigen::Ref<const Eigen::VectorXd>& c);

RemovalInterval removal_interval(const Eigen::Ref<const Eigen::VectorXd>& weights,
                                 const Eigen::Ref<const Eigen::VectorXd>& c);

struct RemovalStep {
  Eigen::VectorXd weights;    // full length, zero at dropped positions
  std::vector<Index> dropped;  // ascending
  double alpha;
};

/// Weights w - alpha c for the chosen end point; every entry at or below the
/// zero tolerance is dropped and the survivors renormalised to sum one.
RemovalStep removal_step(const Eigen::Ref<const Eigen::VectorXd>& weights,
                         const Eigen::Ref<const Eigen::VectorXd>& c, AlphaChoice choice);

/// Applies removal_step to a rule extended by one node.
QuadratureRule remove_one(const QuadratureRule& extended, const Eigen::Ref<const Eigen::VectorXd>& c,
                          AlphaChoice choice = AlphaChoice::smallest_abs);

/// The fixed implicit rule: Monte Carlo weights on the first D+1 samples,
/// then one add-and-remove step per remaining sample.
QuadratureRule construct_fixed_rule(const SampleSet& samples, const BasisSpec& spec,
                                    AlphaChoice policy = AlphaChoice::smallest_abs);

/// ||V(nodes) w - mu||_inf.
double moment_residual(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& moments);

/// A u for a rule and integrand values at its nodes.
inline double apply_rule(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& values) {
  return rule.weights.dot(values);
}

}  // namespace iqr
