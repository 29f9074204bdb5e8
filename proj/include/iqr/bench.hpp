#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "iqr/basis.hpp"
#include "iqr/sampling.hpp"

namespace iqr {

enum class GenzFamily { oscillatory, product_peak, corner_peak, gaussian, c0, discontinuous };

inline constexpr std::array<GenzFamily, 6> kGenzFamilies = {
    GenzFamily::oscillatory, GenzFamily::product_peak, GenzFamily::corner_peak,
    GenzFamily::gaussian,    GenzFamily::c0,           GenzFamily::discontinuous};

std::string_view family_name(GenzFamily family);
/// Throws InvalidSpec.
GenzFamily parse_family(std::string_view name);

struct GenzFunction {
  GenzFamily family = GenzFamily::oscillatory;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

/// Genz test integrands:
///   oscillatory    cos(2 pi b_1 + sum a_i x_i)
///   product peak   prod (a_i^-2 + (x_i - b_i)^2)^-1
///   corner peak    (1 + sum a_i x_i)^-(d+1)
///   gaussian       exp(-sum a_i^2 (x_i - b_i)^2)
///   c0             exp(-sum a_i |x_i - b_i|)
///   discontinuous  0 if x_1 > b_1 or x_2 > b_2, else exp(sum a_i x_i)
/// For d = 1 the discontinuous family only tests x_1.
template <typename Derived>
typename Derived::Scalar genz_eval(const GenzFunction& f, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::cos;
  using std::exp;
  using std::pow;
  const Index d = x.size();
  if (f.a.size() != d || f.b.size() != d) throw DimensionMismatch("genz_eval: parameter length differs from x");
  const auto a = f.a.template cast<Scalar>();
  const auto b = f.b.template cast<Scalar>();
  switch (f.family) {
    case GenzFamily::oscillatory: return cos(Scalar(2 * std::numbers::pi) * b(0) + a.dot(x));
    case GenzFamily::product_peak: {
      Scalar p(1);
      for (Index i = 0; i < d; ++i) p /= Scalar(1) / (a(i) * a(i)) + (x(i) - b(i)) * (x(i) - b(i));
      return p;
    }
    case GenzFamily::corner_peak: return pow(Scalar(1) + a.dot(x), -Scalar(d + 1));
    case GenzFamily::gaussian: return exp(-(a.array().square() * (x - b).array().square()).sum());
    case GenzFamily::c0: return exp(-(a.array() * (x - b).array().abs()).sum());
    case GenzFamily::discontinuous:
      if (x(0) > b(0) || (d > 1 && x(1) > b(1))) return Scalar(0);
      return exp(a.dot(x));
  }
  return Scalar(0);
}

struct GenzParams {
  Eigen::VectorXd a;  // uniform on [0,1]^d, scaled to norm 5/2
  Eigen::VectorXd b;  // uniform on [0,1]^d
};

inline constexpr double kGenzNorm = 2.5;

GenzParams draw_genz_params(Index d, std::uint64_t seed);

struct ExperimentConfig {
  Index d = 2;
  Index K_max = 10'000;  // samples y_0, ..., y_{K_max}
  /// Rule sizes N, ascending: the rule reproduces N+1 moments and the Monte
  /// Carlo estimate averages N+1 samples.
  std::vector<Index> schedule = {4, 8, 16, 32, 64, 128, 256};
  Index repetitions = 20;
  DistributionSpec distribution = DistributionSpec::uniform({0.0, 0.0}, {1.0, 1.0});
  std::uint64_t seed = 0;
  bool include_nonnested = false;
  std::size_t removal_cap = 10'000;
  BasisFamily basis = BasisFamily::product_legendre;
  /// Families to run; empty means all that apply to the distribution.
  std::vector<GenzFamily> families;

  /// Throws InvalidSpec.
  void validate() const;
  /// The requested families, with the corner peak dropped under the
  /// Rosenbrock distribution, whose corner peak integral diverges.
  std::vector<GenzFamily> active_families() const;
};

struct RepetitionRecord {
  std::uint64_t sample_seed = 0;
  std::uint64_t genz_seed = 0;
  std::uint64_t selection_seed = 0;
  bool ok = true;
  std::string diagnostic;
  Index evaluations = 0;     // distinct nodes evaluated along the nested chain
  Index sum_rule_nodes = 0;  // nodes summed over the rules of the chain
  Index final_nodes = 0;
};

struct ErrorRow {
  GenzFamily family;
  Index N;
  double nested = 0.0;       // mean absolute error, NaN if no repetition succeeded
  double regenerated = 0.0;  // NaN unless include_nonnested
  double monte_carlo = 0.0;
  double mean_nodes = 0.0;   // nested rule node count averaged over repetitions
  Index successes = 0;
};

struct FamilySlopes {
  GenzFamily family;
  double nested;
  double regenerated;
  double monte_carlo;
  Index successes;  // repetitions that completed for this family
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ErrorRow> rows;  // family-major, then ascending N
  std::vector<FamilySlopes> slopes;
  std::vector<RepetitionRecord> repetitions;

  const ErrorRow& row(GenzFamily family, Index N) const;
  const FamilySlopes& slope(GenzFamily family) const;
};

/// Least-squares slope of log2(error) against log2(N) over the upper half of
/// the points. Zero or non-finite errors are skipped; NaN with fewer than
/// two usable points.
double fit_slope(const std::vector<Index>& n, const std::vector<double>& error);

using LogSink = std::function<void(const std::string&)>;

/// Per repetition: fresh Genz parameters and one set of K_max+1 samples; a
/// nested chain of rules over the schedule (evaluations cached along the
/// chain); errors against the mean over all samples. A failing repetition is
/// logged and skipped.
ExperimentReport run_convergence(const ExperimentConfig& config, const LogSink& log = {});

/// family,N,method,mean_abs_error
std::string report_csv(const ExperimentReport& report);

}  // namespace iqr
