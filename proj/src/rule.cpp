#include "iqr/rule.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "iqr/linalg.hpp"

namespace iqr {

namespace {

void check_dim(Index got, Index want, const char* where) {
  if (got != want) {
    throw DimensionMismatch(std::string(where) + ": dimension " + std::to_string(got) + " does not match " +
                            std::to_string(want));
  }
}

bool significant(double ck, double scale) { return std::abs(ck) > kNullEntryTolerance * scale; }

}  // namespace

MomentVector sample_moments(const SampleSet& samples, const BasisSpec& spec) {
  if (samples.count() == 0) throw std::invalid_argument("sample_moments: empty sample set");
  check_dim(samples.dim(), spec.dim(), "sample_moments");

  // Neumaier summation per moment.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.size());
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(spec.size());
  for (Index k = 0; k < samples.count(); ++k) {
    const Eigen::VectorXd phi = evaluate_basis(spec, samples.point(k));
    for (Index j = 0; j < spec.size(); ++j) {
      const double t = sum(j) + phi(j);
      if (std::abs(sum(j)) >= std::abs(phi(j))) {
        comp(j) += (sum(j) - t) + phi(j);
      } else {
        comp(j) += (phi(j) - t) + sum(j);
      }
      sum(j) = t;
    }
  }
  MomentVector m;
  m.values = (sum + comp) / static_cast<double>(samples.count());
  m.values(0) = 1.0;  // phi_0 is the constant 1 in both families
  m.K = samples.count() - 1;
  return m;
}

Eigen::VectorXd solve_interpolatory_weights(const Eigen::Ref<const Eigen::MatrixXd>& nodes,
                                            const Eigen::Ref<const Eigen::VectorXd>& moments,
                                            const BasisSpec& spec) {
  check_dim(nodes.rows(), spec.dim(), "solve_interpolatory_weights");
  if (nodes.cols() != spec.size() || moments.size() != spec.size()) {
    throw DimensionMismatch("solve_interpolatory_weights: need D+1 = " + std::to_string(spec.size()) +
                            " nodes and moments, got " + std::to_string(nodes.cols()) + " and " +
                            std::to_string(moments.size()));
  }
  const Eigen::MatrixXd v = build_vandermonde(spec, nodes);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(v);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw SingularSystem("solve_interpolatory_weights: nodes are not unisolvent");
  Eigen::VectorXd w = lu.solve(moments);
  const double residual = (v * w - moments).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-9 * std::max(1.0, moments.cwiseAbs().maxCoeff()))) {
    throw SingularSystem("solve_interpolatory_weights: residual " + std::to_string(residual) +
                         " after solve, system too ill-conditioned");
  }
  return w;
}

QuadratureRule add_sample(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& y,
                          Index source_index) {
  check_dim(y.size(), rule.dim(), "add_sample");
  QuadratureRule out;
  out.spec = rule.spec;
  const Index n = rule.size();
  out.nodes.resize(rule.dim(), n + 1);
  out.nodes.leftCols(n) = rule.nodes;
  out.nodes.col(n) = y;
  const double kk = static_cast<double>(rule.K);
  out.weights.resize(n + 1);
  out.weights.head(n) = rule.weights * ((kk + 1.0) / (kk + 2.0));
  out.weights(n) = 1.0 / (kk + 2.0);
  out.source_indices = rule.source_indices;
  out.source_indices.push_back(source_index);
  out.fixed_mask = rule.fixed_mask;
  out.fixed_mask.push_back(false);
  out.K = rule.K + 1;
  return out;
}

AlphaSelection select_alpha(const Eigen::Ref<const Eigen::VectorXd>& weights,
                            const Eigen::Ref<const Eigen::VectorXd>& c) {
  const RemovalInterval r = removal_interval(weights, c);
  return {r.alpha_max, r.k_max, r.alpha_min, r.k_min};
}

RemovalInterval removal_interval(const Eigen::Ref<const Eigen::VectorXd>& weights,
                                 const Eigen::Ref<const Eigen::VectorXd>& c) {
  if (weights.size() != c.size()) throw DimensionMismatch("removal_interval: weights and c differ in length");
  const double scale = c.cwiseAbs().maxCoeff();
  RemovalInterval r{-std::numeric_limits<double>::infinity(), -1, std::numeric_limits<double>::infinity(), -1,
                    false};
  for (Index k = 0; k < c.size(); ++k) {
    if (!significant(c(k), scale)) continue;
    const double ratio = weights(k) / c(k);
    if (c(k) > 0.0) {
      if (ratio < r.alpha_max) {
        r.alpha_max = ratio;
        r.k_max = k;
      }
    } else if (ratio > r.alpha_min) {
      r.alpha_min = ratio;
      r.k_min = k;
    }
  }
  if (r.k_min < 0 || r.k_max < 0) {
    throw DegenerateNullVector("removal_interval: null vector lacks a positive or a negative entry");
  }
  r.feasible = r.alpha_min <= r.alpha_max;
  return r;
}

RemovalStep removal_step(const Eigen::Ref<const Eigen::VectorXd>& weights,
                         const Eigen::Ref<const Eigen::VectorXd>& c, AlphaChoice choice) {
  const AlphaSelection sel = select_alpha(weights, c);
  bool use_first = true;
  switch (choice) {
    case AlphaChoice::alpha1: use_first = true; break;
    case AlphaChoice::alpha2: use_first = false; break;
    case AlphaChoice::smallest_abs: use_first = std::abs(sel.alpha1) <= std::abs(sel.alpha2); break;
  }
  const double alpha = use_first ? sel.alpha1 : sel.alpha2;
  const Index zeroed = use_first ? sel.k1 : sel.k2;

  RemovalStep step;
  step.alpha = alpha;
  step.weights = weights - alpha * c;
  step.weights(zeroed) = 0.0;
  const double tol = kZeroWeightTolerance * step.weights.maxCoeff();
  for (Index k = 0; k < step.weights.size(); ++k) {
    if (step.weights(k) <= tol) {
      step.weights(k) = 0.0;
      step.dropped.push_back(k);
    }
  }
  step.weights /= step.weights.sum();
  return step;
}

QuadratureRule remove_one(const QuadratureRule& extended, const Eigen::Ref<const Eigen::VectorXd>& c,
                          AlphaChoice choice) {
  const RemovalStep step = removal_step(extended.weights, c, choice);
  QuadratureRule out;
  out.spec = extended.spec;
  out.K = extended.K;
  const Index kept = extended.size() - static_cast<Index>(step.dropped.size());
  out.nodes.resize(extended.dim(), kept);
  out.weights.resize(kept);
  Index next = 0;
  std::size_t skip = 0;
  for (Index k = 0; k < extended.size(); ++k) {
    if (skip < step.dropped.size() && step.dropped[skip] == k) {
      ++skip;
      continue;
    }
    out.nodes.col(next) = extended.nodes.col(k);
    out.weights(next) = step.weights(k);
    out.source_indices.push_back(extended.source_indices[static_cast<std::size_t>(k)]);
    out.fixed_mask.push_back(extended.fixed_mask[static_cast<std::size_t>(k)]);
    ++next;
  }
  return out;
}

namespace {

/// Working arrays of the fixed construction; columns stay aligned across
/// nodes, Vandermonde columns and the factorization handle.
struct FixedState {
  Eigen::MatrixXd nodes;
  Eigen::MatrixXd columns;
  Eigen::VectorXd weights;
  std::vector<Index> sources;

  Index size() const { return weights.size(); }

  void append(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::VectorXd& v, double w, Index src) {
    const Index n = size();
    nodes.conservativeResize(Eigen::NoChange, n + 1);
    columns.conservativeResize(Eigen::NoChange, n + 1);
    weights.conservativeResize(n + 1);
    nodes.col(n) = y;
    columns.col(n) = v;
    weights(n) = w;
    sources.push_back(src);
  }

  void drop(const std::vector<Index>& dropped) {
    if (dropped.empty()) return;
    const Index n = size();
    Index next = 0;
    std::size_t skip = 0;
    for (Index k = 0; k < n; ++k) {
      if (skip < dropped.size() && dropped[skip] == k) {
        ++skip;
        continue;
      }
      if (next != k) {
        nodes.col(next) = nodes.col(k);
        columns.col(next) = columns.col(k);
        weights(next) = weights(k);
        sources[static_cast<std::size_t>(next)] = sources[static_cast<std::size_t>(k)];
      }
      ++next;
    }
    nodes.conservativeResize(Eigen::NoChange, next);
    columns.conservativeResize(Eigen::NoChange, next);
    weights.conservativeResize(next);
    sources.resize(static_cast<std::size_t>(next));
  }
};

std::optional<ExtensionSolver> try_factor(const Eigen::MatrixXd& columns) {
  try {
    return ExtensionSolver(columns);
  } catch (const NullSpaceFailure&) {
    return std::nullopt;
  }
}

}  // namespace

QuadratureRule construct_fixed_rule(const SampleSet& samples, const BasisSpec& spec, AlphaChoice policy) {
  check_dim(samples.dim(), spec.dim(), "construct_fixed_rule");
  const Index r = spec.size();
  const Index total = samples.count();
  if (total < r) {
    throw InsufficientSamples("construct_fixed_rule: " + std::to_string(total) + " samples for a basis of size " +
                              std::to_string(r));
  }

  FixedState st;
  st.nodes.resize(spec.dim(), 0);
  st.columns.resize(r, 0);
  for (Index k = 0; k < r; ++k) {
    st.append(samples.point(k), evaluate_basis(spec, samples.point(k)), 1.0 / static_cast<double>(r), k);
  }
  Index K = r - 1;
  std::optional<ExtensionSolver> solver = try_factor(st.columns);

  for (Index k = r; k < total; ++k) {
    try {
      const Eigen::VectorXd v = evaluate_basis(spec, samples.point(k));
      const Index before = st.size();
      const double kk = static_cast<double>(K);
      st.weights *= (kk + 1.0) / (kk + 2.0);
      st.append(samples.point(k), v, 1.0 / (kk + 2.0), k);
      ++K;

      std::optional<Eigen::VectorXd> fast;
      if (solver && before == r) {
        try {
          fast = solver->extend_solve(v);
        } catch (const NullSpaceFailure&) {
          solver.reset();
        }
      }
      if (fast) {
        const RemovalStep step = removal_step(st.weights, *fast, policy);
        st.weights = step.weights;
        if (step.dropped.size() == 1) {
          const Index p = step.dropped.front();
          if (p != before) {
            try {
              solver->replace_column(p, v);
              solver->move_column_to_end(p);
            } catch (const NullSpaceFailure&) {
              // ill-conditioned node set: the rank-revealing path takes over
              solver.reset();
            }
          }
          st.drop(step.dropped);
          if (solver) continue;
        } else {
          st.drop(step.dropped);
          solver.reset();
        }
      } else {
        // General path: rank-revealing null space, removing until the columns
        // are independent again.
        solver.reset();
        while (st.size() > numerical_rank(st.columns)) {
          const Eigen::VectorXd c = null_vector(st.columns);
          const RemovalStep step = removal_step(st.weights, c, policy);
          st.weights = step.weights;
          st.drop(step.dropped);
        }
      }
      if (st.size() == r) solver = try_factor(st.columns);
    } catch (const NullSpaceFailure& e) {
      throw NullSpaceFailure("construct_fixed_rule: at sample " + std::to_string(k) + ": " + e.what());
    }
  }

  QuadratureRule rule;
  rule.spec = spec;
  rule.nodes = std::move(st.nodes);
  rule.weights = std::move(st.weights);
  rule.source_indices = std::move(st.sources);
  rule.fixed_mask.assign(static_cast<std::size_t>(rule.size()), false);
  rule.K = K;
  return rule;
}

double moment_residual(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& moments) {
  const Eigen::MatrixXd v = build_vandermonde(rule.spec, rule.nodes);
  if (moments.size() != v.rows()) throw DimensionMismatch("moment_residual: moment length mismatch");
  return (v * rule.weights - moments).cwiseAbs().maxCoeff();
}

}  // namespace iqr
