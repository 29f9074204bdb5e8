#include "iqr/removal.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "iqr/linalg.hpp"

namespace iqr {

namespace {

/// Fraction of max|C e| below which an entry does not block an edge.
constexpr double kPivotTolerance = 1e-11;

double weight_scale(const Eigen::Ref<const Eigen::VectorXd>& w) { return std::max(w.cwiseAbs().maxCoeff(), 1e-300); }

std::vector<Index> zeros_of(const Eigen::VectorXd& v, double tol) {
  std::vector<Index> z;
  for (Index k = 0; k < v.size(); ++k) {
    if (v(k) <= tol) z.push_back(k);
  }
  return z;
}

std::vector<Index> complement(Index n, const std::vector<Index>& sorted) {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(n) - sorted.size());
  std::size_t j = 0;
  for (Index k = 0; k < n; ++k) {
    if (j < sorted.size() && sorted[j] == k) {
      ++j;
    } else {
      out.push_back(k);
    }
  }
  return out;
}

void check_m(const QuadratureRule& rule, Index m, const char* where) {
  const Index n = rule.size();
  if (m < 1 || m >= n) {
    throw std::invalid_argument(std::string(where) + ": M = " + std::to_string(m) + " outside [1, " +
                                std::to_string(n - 1) + "]");
  }
  if (n - m > rule.spec.size()) {
    throw std::invalid_argument(std::string(where) + ": rule is exact on " + std::to_string(rule.spec.size()) +
                                " basis functions, M-removal needs " + std::to_string(n - m));
  }
}

Eigen::MatrixXd sub_vandermonde(const QuadratureRule& rule, Index m) {
  return build_vandermonde(rule.spec.resized(rule.size() - m), rule.nodes);
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& a, const std::vector<Index>& cols) {
  Eigen::MatrixXd out(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = a.col(cols[j]);
  return out;
}

Removal make_removal(const QuadratureRule& rule, std::vector<Index> indices, const Eigen::MatrixXd& null_basis) {
  const Eigen::VectorXd v = removal_weights(rule, indices);
  Removal r;
  r.indices = std::move(indices);
  r.alphas = null_basis.transpose() * (rule.weights - v);
  r.zero_set = zeros_of(v, kZeroWeightTolerance * weight_scale(rule.weights));
  r.degenerate = r.zero_set.size() > r.indices.size();
  return r;
}

RemovalSet collect(const QuadratureRule& rule, const Eigen::MatrixXd& c, const std::vector<Index>& root,
                   std::size_t cap) {
  VertexSearch search = enumerate_vertices(c, rule.weights, root, cap);
  RemovalSet out;
  out.null_basis = c;
  out.stats = search.stats;
  out.removals.reserve(search.vertices.size());
  for (auto& vx : search.vertices) {
    Removal r;
    r.degenerate = vx.zero_set.size() > vx.tight.size();
    r.indices = std::move(vx.tight);
    r.alphas = std::move(vx.alpha);
    r.zero_set = std::move(vx.zero_set);
    out.removals.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SimplexVertex vertex_at(const Eigen::Ref<const Eigen::MatrixXd>& c, const Eigen::Ref<const Eigen::VectorXd>& w,
                        std::vector<Index> tight) {
  const Index m = c.cols();
  if (static_cast<Index>(tight.size()) != m) throw std::invalid_argument("vertex_at: one tight row per column");
  std::sort(tight.begin(), tight.end());
  Eigen::MatrixXd cs(m, m);
  Eigen::VectorXd ws(m);
  for (Index i = 0; i < m; ++i) {
    cs.row(i) = c.row(tight[static_cast<std::size_t>(i)]);
    ws(i) = w(tight[static_cast<std::size_t>(i)]);
  }
  SimplexVertex vx;
  vx.alpha = cs.partialPivLu().solve(ws);
  Eigen::VectorXd v = w - c * vx.alpha;
  for (Index t : tight) v(t) = 0.0;
  vx.zero_set = zeros_of(v, kZeroWeightTolerance * weight_scale(w));
  vx.tight = std::move(tight);
  return vx;
}

VertexSearch enumerate_vertices(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                const Eigen::Ref<const Eigen::VectorXd>& w, std::vector<Index> root,
                                std::size_t cap, OnCap on_cap) {
  const Index n = c.rows();
  const Index m = c.cols();
  if (w.size() != n) throw DimensionMismatch("enumerate_vertices: weights and null basis differ in length");
  if (static_cast<Index>(root.size()) != m) {
    throw std::invalid_argument("enumerate_vertices: root must hold one row per null vector");
  }
  std::sort(root.begin(), root.end());
  const double ztol = kZeroWeightTolerance * weight_scale(w);

  VertexSearch out;
  std::set<std::vector<Index>> seen{root};
  std::deque<std::vector<Index>> queue{root};
  std::vector<SimplexVertex> found;

  Eigen::MatrixXd cs(m, m);
  Eigen::VectorXd ws(m);
  while (!queue.empty()) {
    std::vector<Index> tight = std::move(queue.front());
    queue.pop_front();

    for (Index i = 0; i < m; ++i) {
      cs.row(i) = c.row(tight[static_cast<std::size_t>(i)]);
      ws(i) = w(tight[static_cast<std::size_t>(i)]);
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(cs);
    SimplexVertex vx;
    vx.alpha = lu.solve(ws);
    Eigen::VectorXd v = w - c * vx.alpha;
    for (Index t : tight) v(t) = 0.0;
    vx.zero_set = zeros_of(v, ztol);
    if (vx.zero_set.size() > tight.size()) ++out.stats.degenerate_vertices;

    // Release tight row i: weights move along v + s (C e) with C_S e = e_i.
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(m);
    for (Index i = 0; i < m; ++i) {
      ++out.stats.neighbor_evaluations;
      unit.setZero();
      unit(i) = 1.0;
      const Eigen::VectorXd dir = c * lu.solve(unit);
      const double ptol = kPivotTolerance * dir.cwiseAbs().maxCoeff();
      const Index released = tight[static_cast<std::size_t>(i)];

      double step = std::numeric_limits<double>::infinity();
      for (Index k = 0; k < n; ++k) {
        if (k == released || dir(k) >= -ptol) continue;
        step = std::min(step, std::max(v(k), 0.0) / -dir(k));
      }
      if (!std::isfinite(step)) continue;  // unbounded edge, impossible when the basis holds a constant

      for (Index k = 0; k < n; ++k) {
        if (k == released || dir(k) >= -ptol) continue;
        if (std::max(v(k), 0.0) + step * dir(k) > ztol) continue;
        if (std::binary_search(tight.begin(), tight.end(), k)) continue;
        std::vector<Index> next = tight;
        next[static_cast<std::size_t>(i)] = k;
        std::sort(next.begin(), next.end());
        if (out.stats.truncated) continue;
        if (seen.insert(next).second) {
          if (seen.size() > cap) {
            if (on_cap == OnCap::raise) {
              throw CapExceeded("enumerate_vertices: more than " + std::to_string(cap) + " vertices");
            }
            out.stats.truncated = true;
            continue;
          }
          queue.push_back(std::move(next));
        }
      }
    }
    vx.tight = std::move(tight);
    found.push_back(std::move(vx));
  }

  std::sort(found.begin(), found.end(),
            [](const SimplexVertex& a, const SimplexVertex& b) { return a.tight < b.tight; });
  out.stats.vertices = found.size();
  out.vertices = std::move(found);
  return out;
}

Eigen::VectorXd removal_weights(const QuadratureRule& rule, const std::vector<Index>& indices) {
  const Index n = rule.size();
  const Index m = static_cast<Index>(indices.size());
  check_m(rule, m, "removal_weights");
  const BasisSpec sub = rule.spec.resized(n - m);
  const Eigen::MatrixXd v = build_vandermonde(sub, rule.nodes);
  const Eigen::VectorXd moments = v * rule.weights;
  const std::vector<Index> keep = complement(n, indices);
  if (static_cast<Index>(keep.size()) != n - m) throw std::invalid_argument("removal_weights: repeated index");

  const Eigen::MatrixXd square = gather_columns(v, keep);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(square);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw SingularSystem("removal_weights: remaining nodes are not unisolvent");
  const Eigen::VectorXd reduced = lu.solve(moments);

  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < keep.size(); ++j) full(keep[j]) = reduced(static_cast<Index>(j));
  return full;
}

bool is_valid_removal(const QuadratureRule& rule, const std::vector<Index>& indices) {
  if (!std::is_sorted(indices.begin(), indices.end()) ||
      std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    return false;
  }
  try {
    const Eigen::VectorXd v = removal_weights(rule, indices);
    return v.minCoeff() >= -kZeroWeightTolerance * weight_scale(rule.weights) * 10.0;
  } catch (const SingularSystem&) {
    return false;
  }
}

Removal find_initial_removal(const QuadratureRule& rule, Index m) {
  check_m(rule, m, "find_initial_removal");
  const Eigen::MatrixXd vsub = sub_vandermonde(rule, m);

  std::vector<Index> active(static_cast<std::size_t>(rule.size()));
  std::iota(active.begin(), active.end(), Index{0});
  Eigen::VectorXd w = rule.weights;
  std::vector<Index> removed;
  for (Index step = 0; step < m; ++step) {
    const Eigen::VectorXd c = null_vector(gather_columns(vsub, active));
    const RemovalInterval ri = removal_interval(w, c);
    if (!ri.feasible) {
      throw NoRemovalExists("find_initial_removal: empty interval at step " + std::to_string(step + 1) + " of " +
                            std::to_string(m));
    }
    const bool take_max = std::abs(ri.alpha_max) <= std::abs(ri.alpha_min);
    const double alpha = take_max ? ri.alpha_max : ri.alpha_min;
    const Index k = take_max ? ri.k_max : ri.k_min;
    w -= alpha * c;
    removed.push_back(active[static_cast<std::size_t>(k)]);
    active.erase(active.begin() + k);
    Eigen::VectorXd shrunk(w.size() - 1);
    shrunk << w.head(k), w.tail(w.size() - k - 1);
    w = std::move(shrunk);
  }
  std::sort(removed.begin(), removed.end());
  return make_removal(rule, std::move(removed), null_space(vsub, m));
}

Removal neighbor(const QuadratureRule& rule, const Removal& removal, Index i) {
  const Index m = static_cast<Index>(removal.indices.size());
  check_m(rule, m, "neighbor");
  if (i < 0 || i >= m) throw std::out_of_range("neighbor: position " + std::to_string(i) + " outside the removal");
  const Index qi = removal.indices[static_cast<std::size_t>(i)];

  // Restore q_i: the reduced rule keeps the vertex weights, with zero at q_i.
  std::vector<Index> others = removal.indices;
  others.erase(others.begin() + i);
  const std::vector<Index> keep = complement(rule.size(), others);
  const Eigen::VectorXd vertex = removal_weights(rule, removal.indices);
  Eigen::VectorXd w(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) w(static_cast<Index>(j)) = vertex(keep[j]);

  const Eigen::MatrixXd vsub = sub_vandermonde(rule, m);
  const Eigen::VectorXd c = null_vector(gather_columns(vsub, keep));
  const RemovalInterval ri = removal_interval(w, c);
  const Index kmax = keep[static_cast<std::size_t>(ri.k_max)];
  const Index kmin = keep[static_cast<std::size_t>(ri.k_min)];
  const Index hat = (qi == kmax) ? kmin : kmax;
  if (hat == qi) throw NumericalTie("neighbor: both end points select the released node");

  std::vector<Index> next = others;
  next.insert(std::upper_bound(next.begin(), next.end(), hat), hat);
  return make_removal(rule, std::move(next), null_space(vsub, m));
}

RemovalSet enumerate_removals(const QuadratureRule& rule, Index m, std::size_t cap) {
  const Removal start = find_initial_removal(rule, m);
  return enumerate_removals_from(rule, start, cap);
}

RemovalSet enumerate_removals_from(const QuadratureRule& rule, const Removal& start, std::size_t cap) {
  const Index m = static_cast<Index>(start.indices.size());
  check_m(rule, m, "enumerate_removals");
  const Eigen::MatrixXd c = null_space(sub_vandermonde(rule, m), m);
  return collect(rule, c, start.indices, cap);
}

}  // namespace iqr
