#include "iqr/nested.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <string>

#include "iqr/linalg.hpp"
#include "iqr/random.hpp"

namespace iqr {

namespace {

constexpr int kRefactorInterval = 64;
// Relative distance from the basis span below which a sample counts as
// dependent. Stricter values are tried when the moment residual drifts.
constexpr double kSpanLadder[] = {1e-9, 1e-8, 1e-7, 1e-6};

/// State of the nested construction. The nodes split into a basis, whose
/// Vandermonde columns are independent and span all others, and the rest,
/// which all carry zero weight (fixed nodes parked by an earlier removal, or
/// the sample just added). P is a left inverse of the basis columns (the
/// plain inverse once the basis is square), so the null space of the
/// extended Vandermonde matrix comes out as [-P a_j ; e_j] per non-basic j.
class Engine {
 public:
  Engine(const QuadratureRule& start, double span_tol, const ExtensionOptions& options, Rng& rng,
         ExtensionStats& stats)
      : span_tol_(span_tol),
        spec_(start.spec),
        rows_(start.spec.size()),
        nodes_(start.nodes),
        w_(start.weights),
        fixed_(start.fixed_mask.begin(), start.fixed_mask.end()),
        src_(start.source_indices),
        k_(start.K),
        options_(options),
        rng_(rng),
        stats_(stats) {
    cols_ = build_vandermonde(spec_, nodes_);
    moments_ = cols_ * w_;
    ztol_ = kZeroWeightTolerance;
    establish_vertex();
  }

  void add(const Eigen::Ref<const Eigen::VectorXd>& y, Index src) {
    ++stats_.iterations;
    refactored_ = false;
    const Eigen::VectorXd a = evaluate_basis(spec_, y);
    const double kk = static_cast<double>(k_);
    w_ *= (kk + 1.0) / (kk + 2.0);
    moments_ = moments_ * ((kk + 1.0) / (kk + 2.0)) + a / (kk + 2.0);
    append(y, a, 1.0 / (kk + 2.0), src);
    ++k_;
    const Index ypos = size() - 1;

    Eigen::VectorXd t = coords(a);
    if (rank() < rows_) {
      Eigen::VectorXd e = a - basis_columns() * t;
      if (e.norm() > span_tol_ * a.norm() && updates_ > 0) {
        // Updated left inverses drift; confirm the new direction on a fresh one.
        refactor();
        t = coords(a);
        e = a - basis_columns() * t;
      }
      if (e.norm() > span_tol_ * a.norm()) {
        grow_basis(ypos, t, e);
        refine();
        check_residual(false);
        finish();
        return;
      }
    }
    remove_along_null_space(ypos, t);
    refine();
    check_residual(false);
    finish();
  }

  // Fails fast once a fresh factorisation cannot bring the moments back.
  void check_residual(bool always) const {
    if (!always && !refactored_) return;
    const double residual = (cols_ * w_ - moments_).cwiseAbs().maxCoeff();
    if (!(residual <= kMomentTolerance)) {
      throw NullSpaceFailure("moment residual " + std::to_string(residual) + " exceeds tolerance");
    }
  }

  QuadratureRule result() const {
    QuadratureRule r;
    r.spec = spec_;
    r.nodes = nodes_;
    r.weights = w_;
    r.source_indices = src_;
    r.fixed_mask.assign(fixed_.begin(), fixed_.end());
    r.K = k_;
    return r;
  }

 private:
  Index size() const { return w_.size(); }
  Index rank() const { return static_cast<Index>(basis_.size()); }

  // P a with two refinement steps against the basis columns; keeps the
  // null vectors accurate when the basis is badly conditioned.
  Eigen::VectorXd coords(const Eigen::Ref<const Eigen::VectorXd>& a) const {
    Eigen::VectorXd t = p_ * a;
    for (int it = 0; it < 2; ++it) {
      Eigen::VectorXd r = a;
      for (Index i = 0; i < rank(); ++i) r.noalias() -= t(i) * cols_.col(basis_[static_cast<std::size_t>(i)]);
      t.noalias() += p_ * r;
    }
    return t;
  }

  Eigen::MatrixXd basis_columns() const {
    Eigen::MatrixXd b(rows_, rank());
    for (Index i = 0; i < rank(); ++i) b.col(i) = cols_.col(basis_[static_cast<std::size_t>(i)]);
    return b;
  }

  void append(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::VectorXd& a, double w, Index src) {
    const Index n = size();
    nodes_.conservativeResize(Eigen::NoChange, n + 1);
    cols_.conservativeResize(Eigen::NoChange, n + 1);
    w_.conservativeResize(n + 1);
    nodes_.col(n) = y;
    cols_.col(n) = a;
    w_(n) = w;
    fixed_.push_back(0);
    src_.push_back(src);
  }

  void refactor() {
    const Eigen::MatrixXd b = basis_columns();
    if (rank() == rows_) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
      p_ = lu.inverse();
    } else {
      p_ = Eigen::HouseholderQR<Eigen::MatrixXd>(b).solve(Eigen::MatrixXd::Identity(rows_, rows_));
    }
    updates_ = 0;
    refactored_ = true;
    if (!p_.allFinite()) throw NullSpaceFailure("node basis is singular");
  }

  // After a fresh factorisation, re-solve the basic weights against the
  // tracked moments; kept only if they stay nonnegative.
  void refine() {
    if (!refactored_ || rank() == 0) return;
    const Eigen::MatrixXd b = basis_columns();
    const Eigen::VectorXd r = moments_ - cols_ * w_;
    const Eigen::VectorXd d = rank() == rows_ ? Eigen::VectorXd(Eigen::PartialPivLU<Eigen::MatrixXd>(b).solve(r))
                                              : Eigen::VectorXd(Eigen::HouseholderQR<Eigen::MatrixXd>(b).solve(r));
    Eigen::VectorXd next = w_;
    for (Index i = 0; i < rank(); ++i) next(basis_[static_cast<std::size_t>(i)]) += d(i);
    if (!next.allFinite() || next.minCoeff() < 0.0) return;
    if ((cols_ * next - moments_).cwiseAbs().maxCoeff() < r.cwiseAbs().maxCoeff()) w_ = next;
  }

  // Rank grows by one: append y to the basis (P stays the pseudo-inverse).
  void grow_basis(Index ypos, const Eigen::VectorXd& t, const Eigen::VectorXd& e) {
    const Eigen::RowVectorXd f = e.transpose() / e.squaredNorm();
    Eigen::MatrixXd next(rank() + 1, rows_);
    next.topRows(rank()) = p_ - t * f;
    next.row(rank()) = f;
    p_ = std::move(next);
    basis_.push_back(ypos);
    if (++updates_ >= kRefactorInterval || rank() == rows_) refactor();
  }

  void pivot(Index entering, Index position, const Eigen::VectorXd& t) {
    const Eigen::RowVectorXd row = p_.row(position) / t(position);
    p_.noalias() -= t * row;
    p_.row(position) = row;
    basis_[static_cast<std::size_t>(position)] = entering;
    if (++updates_ >= kRefactorInterval) refactor();
  }

  std::vector<Index> non_basic() const {
    std::vector<char> in(static_cast<std::size_t>(size()), 0);
    for (Index b : basis_) in[static_cast<std::size_t>(b)] = 1;
    std::vector<Index> out;
    for (Index k = 0; k < size(); ++k) {
      if (!in[static_cast<std::size_t>(k)]) out.push_back(k);
    }
    return out;
  }

  double zero_level() const { return ztol_ * w_.maxCoeff(); }

  void remove_along_null_space(Index ypos, const Eigen::VectorXd& ty) {
    const std::vector<Index> nb = non_basic();
    const Index m = static_cast<Index>(nb.size());
    stats_.max_excess = std::max(stats_.max_excess, m);

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(size(), m);
    Index ycol = -1;
    for (Index j = 0; j < m; ++j) {
      const Index node = nb[static_cast<std::size_t>(j)];
      const Eigen::VectorXd t = node == ypos ? ty : coords(cols_.col(node));
      for (Index i = 0; i < rank(); ++i) c(basis_[static_cast<std::size_t>(i)], j) = -t(i);
      c(node, j) = 1.0;
      if (node == ypos) ycol = j;
    }

    // Greedy vertex: a single 1-removal along the direction of y.
    const RemovalInterval ri = removal_interval(w_, c.col(ycol));
    const bool new_max = !fixed_[static_cast<std::size_t>(ri.k_max)];
    const bool new_min = !fixed_[static_cast<std::size_t>(ri.k_min)];
    bool take_max = std::abs(ri.alpha_max) <= std::abs(ri.alpha_min);
    if (new_max != new_min) take_max = new_max;
    std::vector<Index> root = nb;
    root[static_cast<std::size_t>(ycol)] = take_max ? ri.k_max : ri.k_min;
    std::sort(root.begin(), root.end());

    const VertexSearch search = enumerate_vertices(c, w_, root, options_.removal_cap, OnCap::truncate);
    if (search.stats.truncated) ++stats_.cap_fallbacks;
    stats_.vertices += search.vertices.size();

    std::vector<std::size_t> best;
    std::size_t best_score = 0;
    for (std::size_t v = 0; v < search.vertices.size(); ++v) {
      std::size_t score = 0;
      for (Index z : search.vertices[v].zero_set) score += fixed_[static_cast<std::size_t>(z)] ? 0 : 1;
      if (best.empty() || score > best_score) {
        best.assign(1, v);
        best_score = score;
      } else if (score == best_score) {
        best.push_back(v);
      }
    }
    const std::size_t pick = best.size() > 1 ? best[static_cast<std::size_t>(rng_.below(best.size()))] : best[0];
    apply_vertex(c, search.vertices[pick]);
  }

  void apply_vertex(const Eigen::MatrixXd& c, const SimplexVertex& vx) {
    Eigen::VectorXd v = w_ - c * vx.alpha;
    for (Index t : vx.tight) v(t) = 0.0;
    const double tol = ztol_ * v.maxCoeff();
    for (Index k = 0; k < v.size(); ++k) {
      if (v(k) <= tol) v(k) = 0.0;
    }
    w_ = v / v.sum();

    // Exchange basis columns so that the tight set becomes the non-basic set.
    std::vector<char> tight(static_cast<std::size_t>(size()), 0);
    for (Index t : vx.tight) tight[static_cast<std::size_t>(t)] = 1;
    std::vector<Index> leaving;
    for (Index p = 0; p < rank(); ++p) {
      if (tight[static_cast<std::size_t>(basis_[static_cast<std::size_t>(p)])]) leaving.push_back(p);
    }
    for (Index j : non_basic()) {
      if (tight[static_cast<std::size_t>(j)]) continue;
      const Eigen::VectorXd t = coords(cols_.col(j));
      auto best = leaving.begin();
      for (auto it = leaving.begin(); it != leaving.end(); ++it) {
        if (std::abs(t(*it)) > std::abs(t(*best))) best = it;
      }
      pivot(j, *best, t);
      leaving.erase(best);
    }
    drop_zero_new_nodes();
  }

  // Non-fixed nodes at zero weight leave the rule. A basic one is first
  // swapped for a parked fixed node where possible; otherwise the rank drops.
  void drop_zero_new_nodes() {
    std::vector<char> drop(static_cast<std::size_t>(size()), 0);
    bool any = false;
    for (Index k = 0; k < size(); ++k) {
      if (!fixed_[static_cast<std::size_t>(k)] && w_(k) == 0.0) {
        drop[static_cast<std::size_t>(k)] = 1;
        any = true;
      }
    }
    if (!any) return;

    for (Index p = 0; p < rank(); ++p) {
      if (!drop[static_cast<std::size_t>(basis_[static_cast<std::size_t>(p)])]) continue;
      Index best = -1;
      double best_abs = 0.0;
      Eigen::VectorXd best_t;
      for (Index j : non_basic()) {
        if (drop[static_cast<std::size_t>(j)]) continue;
        Eigen::VectorXd t = coords(cols_.col(j));
        const double scale = t.cwiseAbs().maxCoeff();
        if (std::abs(t(p)) > 1e-8 * scale && std::abs(t(p)) > best_abs) {
          best = j;
          best_abs = std::abs(t(p));
          best_t = std::move(t);
        }
      }
      if (best >= 0) {
        pivot(best, p, best_t);
      } else {
        basis_.erase(basis_.begin() + p);
        --p;
        refactor();
      }
    }

    std::vector<Index> remap(static_cast<std::size_t>(size()), -1);
    Index next = 0;
    for (Index k = 0; k < size(); ++k) {
      if (drop[static_cast<std::size_t>(k)]) continue;
      remap[static_cast<std::size_t>(k)] = next;
      if (next != k) {
        nodes_.col(next) = nodes_.col(k);
        cols_.col(next) = cols_.col(k);
        w_(next) = w_(k);
        fixed_[static_cast<std::size_t>(next)] = fixed_[static_cast<std::size_t>(k)];
        src_[static_cast<std::size_t>(next)] = src_[static_cast<std::size_t>(k)];
      }
      ++next;
    }
    nodes_.conservativeResize(Eigen::NoChange, next);
    cols_.conservativeResize(Eigen::NoChange, next);
    w_.conservativeResize(next);
    fixed_.resize(static_cast<std::size_t>(next));
    src_.resize(static_cast<std::size_t>(next));
    for (Index& b : basis_) b = remap[static_cast<std::size_t>(b)];
  }

  // Reduce the starting weights to a vertex and pick a basis.
  void establish_vertex() {
    for (;;) {
      std::vector<Index> support;
      for (Index k = 0; k < size(); ++k) {
        if (w_(k) > zero_level()) support.push_back(k);
      }
      Eigen::MatrixXd vs(rows_, static_cast<Index>(support.size()));
      for (std::size_t j = 0; j < support.size(); ++j) vs.col(static_cast<Index>(j)) = cols_.col(support[j]);
      if (numerical_rank(vs) == vs.cols()) break;

      const Eigen::VectorXd c = null_vector(vs);
      Eigen::VectorXd ws(vs.cols());
      for (std::size_t j = 0; j < support.size(); ++j) ws(static_cast<Index>(j)) = w_(support[j]);
      const RemovalInterval ri = removal_interval(ws, c);
      const bool new_max = !fixed_[static_cast<std::size_t>(support[static_cast<std::size_t>(ri.k_max)])];
      const bool new_min = !fixed_[static_cast<std::size_t>(support[static_cast<std::size_t>(ri.k_min)])];
      bool take_max = std::abs(ri.alpha_max) <= std::abs(ri.alpha_min);
      if (new_max != new_min) take_max = new_max;
      ws -= (take_max ? ri.alpha_max : ri.alpha_min) * c;
      ws(take_max ? ri.k_max : ri.k_min) = 0.0;
      for (std::size_t j = 0; j < support.size(); ++j) w_(support[j]) = std::max(ws(static_cast<Index>(j)), 0.0);
      w_ /= w_.sum();
    }
    for (Index k = 0; k < size(); ++k) {
      if (w_(k) <= zero_level()) w_(k) = 0.0;
    }

    basis_.clear();
    std::vector<Index> zero;
    for (Index k = 0; k < size(); ++k) {
      if (w_(k) > 0.0) {
        basis_.push_back(k);
      } else {
        zero.push_back(k);
      }
    }
    if (!zero.empty()) {
      // Extend by zero-weight columns that add new directions.
      const Eigen::MatrixXd b = basis_columns();
      Eigen::MatrixXd z(rows_, static_cast<Index>(zero.size()));
      for (std::size_t j = 0; j < zero.size(); ++j) z.col(static_cast<Index>(j)) = cols_.col(zero[j]);
      if (b.cols() > 0) {
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows_, b.cols());
        z -= q * (q.transpose() * z);
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zq(z);
      const double floor = span_tol_ * cols_.colwise().norm().maxCoeff();
      const Index room = rows_ - rank();
      for (Index i = 0; i < std::min(room, std::min(z.rows(), z.cols())); ++i) {
        if (std::abs(zq.matrixR()(i, i)) <= floor) break;
        basis_.push_back(zero[static_cast<std::size_t>(zq.colsPermutation().indices()(i))]);
      }
    }
    drop_zero_new_nodes();
    refactor();
  }

  void finish() {
    if (!options_.check_invariants) return;
    if (!(w_.minCoeff() >= -1e-12) || std::abs(w_.sum() - 1.0) > 1e-12) {
      throw Error("extend_rule: invariant violated after sample " + std::to_string(k_) + " (min weight " +
                  std::to_string(w_.minCoeff()) + ", weight sum " + std::to_string(w_.sum()) + ")");
    }
    check_residual(true);
  }

  double span_tol_;
  BasisSpec spec_;
  Index rows_;
  Eigen::MatrixXd nodes_;
  Eigen::MatrixXd cols_;
  Eigen::VectorXd w_;
  Eigen::VectorXd moments_;
  std::vector<char> fixed_;
  std::vector<Index> src_;
  Index k_;
  std::vector<Index> basis_;
  Eigen::MatrixXd p_;
  int updates_ = 0;
  bool refactored_ = false;
  double ztol_ = 0.0;
  const ExtensionOptions& options_;
  Rng& rng_;
  ExtensionStats& stats_;
};

bool same_bits(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a(i)) != std::bit_cast<std::uint64_t>(b(i))) return false;
  }
  return true;
}

}  // namespace

ExtensionStart initialize_extension(const ExtensionRequest& req) {
  const QuadratureRule& base = req.base;
  if (req.samples.dim() != base.spec.dim()) {
    throw DimensionMismatch("initialize_extension: samples have dimension " + std::to_string(req.samples.dim()) +
                            ", base rule " + std::to_string(base.spec.dim()));
  }
  if (req.target_size < base.spec.size()) {
    throw std::invalid_argument("initialize_extension: target basis size " + std::to_string(req.target_size) +
                                " is below the base size " + std::to_string(base.spec.size()));
  }
  const Index n = base.size();
  const Index count = req.samples.count();

  ExtensionStart start;
  QuadratureRule& r = start.rule;
  r.spec = base.spec.resized(req.target_size);

  // Without base nodes every mode starts like the fixed rule: y_0 at weight 1.
  if (n == 0) {
    if (count < 1) throw InsufficientSamples("initialize_extension: empty sample set");
    r.nodes = req.samples.points.leftCols(1);
    r.weights = Eigen::VectorXd::Ones(1);
    r.source_indices = {0};
    r.fixed_mask = {false};
    r.K = 0;
    for (Index k = 1; k < count; ++k) start.stream.push_back(k);
    return start;
  }

  r.nodes = base.nodes;
  r.fixed_mask.assign(static_cast<std::size_t>(n), true);

  switch (req.mode) {
    case ExtensionMode::continue_samples: {
      if (req.target_size != base.spec.size()) {
        throw ModeMismatch("continue_samples keeps the basis; use increase_degree to enlarge it");
      }
      if (base.K >= count) throw ModeMismatch("continue_samples: the stream is not longer than the base stream");
      for (Index k = 0; k < n; ++k) {
        const Index s = base.source_indices[static_cast<std::size_t>(k)];
        if (s < 0 || s > base.K || !same_bits(req.samples.point(s), base.nodes.col(k))) {
          throw ModeMismatch("continue_samples: node " + std::to_string(k) + " is not sample " + std::to_string(s) +
                             " of the given stream");
        }
      }
      r.weights = base.weights;
      r.source_indices = base.source_indices;
      r.K = base.K;
      for (Index k = base.K + 1; k < count; ++k) start.stream.push_back(k);
      break;
    }
    case ExtensionMode::increase_degree: {
      r.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
      r.K = n - 1;
      std::unordered_map<NodeKey, std::vector<Index>, NodeKeyHash> pending;
      for (Index k = 0; k < n; ++k) pending[node_key(base.nodes.col(k))].push_back(k);
      r.source_indices.assign(static_cast<std::size_t>(n), -1);
      std::vector<char> used(static_cast<std::size_t>(count), 0);
      for (Index s = 0; s < count && !pending.empty(); ++s) {
        auto it = pending.find(node_key(req.samples.point(s)));
        if (it == pending.end()) continue;
        r.source_indices[static_cast<std::size_t>(it->second.front())] = s;
        used[static_cast<std::size_t>(s)] = 1;
        it->second.erase(it->second.begin());
        if (it->second.empty()) pending.erase(it);
      }
      for (Index s = 0; s < count; ++s) {
        if (!used[static_cast<std::size_t>(s)]) start.stream.push_back(s);
      }
      break;
    }
    case ExtensionMode::resampled: {
      if (count < 1) throw InsufficientSamples("resampled: empty sample set");
      r.nodes.conservativeResize(Eigen::NoChange, n + 1);
      r.nodes.col(n) = req.samples.point(0);
      r.weights = Eigen::VectorXd::Zero(n + 1);
      r.weights(n) = 1.0;
      r.source_indices.assign(static_cast<std::size_t>(n), -1);
      r.source_indices.push_back(0);
      r.fixed_mask.push_back(false);
      r.K = 0;
      for (Index k = 1; k < count; ++k) start.stream.push_back(k);
      break;
    }
  }
  return start;
}

QuadratureRule extend_rule(const ExtensionRequest& req, std::uint64_t selection_seed, const ExtensionOptions& options,
                           ExtensionStats* stats) {
  ExtensionStart start = initialize_extension(req);
  const Index total = start.rule.K + 1 + static_cast<Index>(start.stream.size());
  if (total < req.target_size) {
    throw InsufficientSamples("extend_rule: " + std::to_string(total) + " samples for a basis of size " +
                              std::to_string(req.target_size));
  }
  ExtensionStats local;
  ExtensionStats& st = stats ? *stats : local;
  QuadratureRule out;
  Index retries = 0;
  for (const double span_tol : kSpanLadder) {
    st = {};
    Rng rng(selection_seed);
    Index s = -1;
    try {
      Engine engine(start.rule, span_tol, options, rng, st);
      for (Index k : start.stream) {
        s = k;
        engine.add(req.samples.point(s), s);
      }
      engine.check_residual(true);
      out = engine.result();
      break;
    } catch (const NullSpaceFailure& e) {
      if (span_tol == kSpanLadder[std::size(kSpanLadder) - 1]) {
        throw NullSpaceFailure("extend_rule: at sample " + std::to_string(s) + ": " + e.what());
      }
      ++retries;
    } catch (const CapExceeded& e) {
      throw CapExceeded("extend_rule: at sample " + std::to_string(s) + ": " + e.what());
    }
  }
  st.span_retries = retries;
  st.zero_weight_fixed = 0;
  for (Index k = 0; k < out.size(); ++k) {
    if (out.fixed_mask[static_cast<std::size_t>(k)] && out.weights(k) == 0.0) ++st.zero_weight_fixed;
  }
  return out;
}

bool node_count_within_bound(Index base_nodes, Index target_size, Index result_nodes) {
  const Index n = base_nodes - 1;
  const Index m = result_nodes - base_nodes;
  const Index dplus = target_size - 1;
  return dplus <= n + m && n + m <= n + dplus + 1;
}

std::size_t NodeKeyHash::operator()(const NodeKey& k) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ k.bits.size();
  for (std::uint64_t b : k.bits) {
    std::uint64_t s = h ^ b;
    h = splitmix64(s);
  }
  return static_cast<std::size_t>(h);
}

NodeKey node_key(const Eigen::Ref<const Eigen::VectorXd>& x) {
  NodeKey key;
  key.bits.reserve(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) key.bits.push_back(std::bit_cast<std::uint64_t>(x(i)));
  return key;
}

std::optional<double> EvaluationCache::find(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (auto it = values_.find(node_key(x)); it != values_.end()) return it->second;
  return std::nullopt;
}

double apply_cached(const QuadratureRule& rule, const EvaluationCache& values) {
  double sum = 0.0;
  for (Index k = 0; k < rule.size(); ++k) {
    const auto v = values.find(rule.nodes.col(k));
    if (!v) throw MissingEvaluation("no evaluation cached for node " + std::to_string(k));
    sum += rule.weights(k) * *v;
  }
  return sum;
}

double nested_error_estimate(const QuadratureRule& small, const QuadratureRule& large, const EvaluationCache& values) {
  std::unordered_map<NodeKey, char, NodeKeyHash> present;
  for (Index k = 0; k < large.size(); ++k) present.emplace(node_key(large.nodes.col(k)), 1);
  for (Index k = 0; k < small.size(); ++k) {
    if (!present.count(node_key(small.nodes.col(k)))) {
      throw std::invalid_argument("nested_error_estimate: node " + std::to_string(k) +
                                  " of the smaller rule is not a node of the larger one");
    }
  }
  return std::abs(apply_cached(small, values) - apply_cached(large, values));
}

}  // namespace iqr
