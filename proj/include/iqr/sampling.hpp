#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iqr/random.hpp"
#include "iqr/rule.hpp"

namespace iqr {

enum class DistributionKind { uniform, beta, normal, rosenbrock, indicator_region, file };
enum class SampleFormat { csv, binary_f64 };

/// Random-walk Metropolis settings.
struct MetropolisSettings {
  double step = 0.25;  // proposal standard deviation per coordinate
  Index burn_in = 10'000;
  Index thinning = 10;
  Index window = 10'000;          // steps per acceptance check
  double min_acceptance = 1e-4;   // below this over a window the run is aborted
};

/// Membership shape for indicator regions. A point lies in the region when
/// it is inside an odd number of shapes, so a shape nested in another cuts a
/// hole. Polygons are two-dimensional and use the even-odd rule.
struct RegionShape {
  enum class Type { box, polygon };
  Type type = Type::box;
  std::vector<double> lo, hi;                    // box
  std::vector<std::array<double, 2>> vertices;  // polygon
};

struct DistributionSpec {
  DistributionKind kind = DistributionKind::uniform;
  Index d = 1;
  std::vector<double> lo, hi;     // uniform bounds, beta box
  std::vector<double> a, b;       // beta shapes
  std::vector<double> mean, sd;   // normal
  double rosenbrock_a = 1.0;
  double rosenbrock_b = 10.0;
  MetropolisSettings mh;
  std::shared_ptr<const DistributionSpec> base;  // indicator_region proposal
  std::vector<RegionShape> region;
  std::string path;  // file
  SampleFormat format = SampleFormat::csv;
  double min_acceptance = 1e-4;  // indicator_region, over window draws
  Index window = 10'000;
  std::uint64_t seed = 0;

  static DistributionSpec uniform(std::vector<double> lo, std::vector<double> hi, std::uint64_t seed = 0);
  static DistributionSpec beta(std::vector<double> a, std::vector<double> b, std::vector<double> lo,
                               std::vector<double> hi, std::uint64_t seed = 0);
  static DistributionSpec normal(std::vector<double> mean, std::vector<double> sd, std::uint64_t seed = 0);
  static DistributionSpec rosenbrock(Index d, std::uint64_t seed = 0);
  static DistributionSpec indicator(DistributionSpec base, std::vector<RegionShape> region, std::uint64_t seed = 0);
  static DistributionSpec file(std::string path, SampleFormat format);

  /// Throws InvalidSpec.
  void validate() const;
};

/// Draws `count` samples. Deterministic in spec.seed.
/// Throws InvalidSpec, AcceptanceTooLow.
SampleSet generate(const DistributionSpec& spec, Index count);

bool region_contains(const std::vector<RegionShape>& region, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Rosenbrock-type density exp(-f(x)) pi(x), pi the standard normal density,
/// f(x) = sum_i [b (x_{i+1} - x_i^2)^2 + (a - x_i)^2].
double rosenbrock_f(const Eigen::Ref<const Eigen::VectorXd>& x, double a, double b);
double rosenbrock_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, double a, double b);

/// Random-walk Metropolis chain on the Rosenbrock density.
class MetropolisChain {
 public:
  struct Transition {
    Eigen::VectorXd from;
    Eigen::VectorXd proposal;
    double log_ratio;  // log p(proposal) - log p(from)
    double u;          // uniform draw compared against the ratio
    bool accepted;
  };

  MetropolisChain(Index d, double a, double b, MetropolisSettings settings, std::uint64_t seed,
                  Eigen::VectorXd start = {});

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// min(1, p(y) q(y->x) / (p(x) q(x->y))) for the symmetric proposal.
  double acceptance_probability(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y) const;
  /// Log density of proposing y from x.
  double log_proposal(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const;

  Transition step();
  const Eigen::VectorXd& state() const { return x_; }
  Index steps() const { return steps_; }
  Index accepted() const { return accepted_; }
  double acceptance_rate() const { return steps_ ? static_cast<double>(accepted_) / static_cast<double>(steps_) : 0.0; }

 private:
  double a_, b_;
  MetropolisSettings settings_;
  Rng rng_;
  Eigen::VectorXd x_;
  double logp_;
  Index steps_ = 0;
  Index accepted_ = 0;
};

/// Throws IoError, ParseError, DimensionInconsistent.
SampleSet read_samples(const std::string& path, SampleFormat format);
/// Throws IoError.
void write_samples(const SampleSet& samples, const std::string& path, SampleFormat format);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);
SampleSet parse_csv(const std::string& text);
std::string to_csv(const SampleSet& samples);

/// "csv", "bin" or "binary_f64". Throws InvalidSpec.
SampleFormat parse_format(const std::string& name);

}  // namespace iqr
