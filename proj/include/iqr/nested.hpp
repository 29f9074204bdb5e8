#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "iqr/removal.hpp"
#include "iqr/rule.hpp"

namespace iqr {

enum class ExtensionMode { continue_samples, increase_degree, resampled };

struct ExtensionRequest {
  QuadratureRule base;
  Index target_size = 0;  // D+ + 1
  SampleSet samples;
  ExtensionMode mode = ExtensionMode::increase_degree;
};

struct ExtensionOptions {
  /// Vertex budget of the per-sample removal search; past it the choice is
  /// made among the vertices reached, nearest the greedy removal first.
  std::size_t removal_cap = 10'000;
  /// Re-verify positivity, normalization and the moment residual after
  /// every sample.
  bool check_invariants = false;
};

struct ExtensionStats {
  Index iterations = 0;
  Index max_excess = 0;      // largest null space dimension M seen
  Index cap_fallbacks = 0;
  std::size_t vertices = 0;  // removals visited over all samples
  Index zero_weight_fixed = 0;
  Index span_retries = 0;    // restarts with a stricter span tolerance
};

/// Working rule and the sample indices still to be added, in order.
struct ExtensionStart {
  QuadratureRule rule;
  std::vector<Index> stream;
};

/// Sets up the working rule for the chosen mode:
///  - continue_samples: the base rule as is (same basis, same sample stream);
///  - increase_degree: base nodes at weight 1/(N+1), stream is the samples
///    with one bit-identical copy of every base node taken out;
///  - resampled: base nodes plus the first sample, weights (0, ..., 0, 1).
/// Base nodes are marked fixed in every mode. An empty base starts from the
/// first sample at weight 1, as the fixed rule does.
ExtensionStart initialize_extension(const ExtensionRequest& req);

/// Nested rule on target_size basis functions whose nodes contain the base
/// nodes. Per sample, every removal of the extended rule is enumerated and
/// one deleting the most non-fixed nodes is drawn at random; fixed nodes hit
/// by a removal keep a zero weight. When the moment residual leaves
/// tolerance the step restarts with a stricter test for new span directions;
/// NullSpaceFailure once the strictest one fails too.
QuadratureRule extend_rule(const ExtensionRequest& req, std::uint64_t selection_seed,
                           const ExtensionOptions& options = {}, ExtensionStats* stats = nullptr);

/// D+ <= N + M <= N + D+ + 1 for a base of N+1 nodes and a result of N+M+1.
bool node_count_within_bound(Index base_nodes, Index target_size, Index result_nodes);

/// Bit pattern of a node, for exact lookups.
struct NodeKey {
  std::vector<std::uint64_t> bits;
  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept;
};

NodeKey node_key(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Integrand values keyed by node bits, shared along a nested chain.
class EvaluationCache {
 public:
  template <typename F>
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, F&& f) {
    NodeKey key = node_key(x);
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    const double value = f(x);
    values_.emplace(std::move(key), value);
    return value;
  }

  void insert(const Eigen::Ref<const Eigen::VectorXd>& x, double value) { values_[node_key(x)] = value; }
  std::optional<double> find(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t size() const { return values_.size(); }

 private:
  std::unordered_map<NodeKey, double, NodeKeyHash> values_;
};

/// sum_k w_k u(x_k) using cached values only. Throws MissingEvaluation.
double apply_cached(const QuadratureRule& rule, const EvaluationCache& values);

/// |A_small u - A_large u| from cached values; small's nodes must be among
/// large's.
double nested_error_estimate(const QuadratureRule& small, const QuadratureRule& large, const EvaluationCache& values);

}  // namespace iqr
