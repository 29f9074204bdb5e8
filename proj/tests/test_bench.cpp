#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "iqr/bench.hpp"
#include "iqr/nested.hpp"
#include "iqr/random.hpp"

using namespace iqr;

namespace {

GenzFunction make(GenzFamily family, std::vector<double> a, std::vector<double> b) {
  return {family, Eigen::Map<Eigen::VectorXd>(a.data(), static_cast<Index>(a.size())),
          Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()))};
}

/// Genz integrands written out term by term.
double genz_direct(const GenzFunction& f, const Eigen::VectorXd& x) {
  const Index d = x.size();
  double s = 0, p = 1;
  switch (f.family) {
    case GenzFamily::oscillatory:
      for (Index i = 0; i < d; ++i) s += f.a(i) * x(i);
      return std::cos(2 * std::numbers::pi * f.b(0) + s);
    case GenzFamily::product_peak:
      for (Index i = 0; i < d; ++i) p *= 1 / (std::pow(f.a(i), -2) + std::pow(x(i) - f.b(i), 2));
      return p;
    case GenzFamily::corner_peak:
      for (Index i = 0; i < d; ++i) s += f.a(i) * x(i);
      return std::pow(1 + s, -static_cast<double>(d + 1));
    case GenzFamily::gaussian:
      for (Index i = 0; i < d; ++i) s += std::pow(f.a(i), 2) * std::pow(x(i) - f.b(i), 2);
      return std::exp(-s);
    case GenzFamily::c0:
      for (Index i = 0; i < d; ++i) s += f.a(i) * std::abs(x(i) - f.b(i));
      return std::exp(-s);
    case GenzFamily::discontinuous:
      if (x(0) > f.b(0) || x(1) > f.b(1)) return 0;
      for (Index i = 0; i < d; ++i) s += f.a(i) * x(i);
      return std::exp(s);
  }
  return NAN;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.d = 2;
  c.K_max = 600;
  c.schedule = {4, 8, 16};
  c.repetitions = 2;
  c.seed = 17;
  c.families = {GenzFamily::oscillatory, GenzFamily::gaussian, GenzFamily::c0};
  return c;
}

}  // namespace

TEST_CASE("Genz integrand values") {
  const Eigen::Vector2d mid(0.5, 0.5), one(1.0, 1.0);
  CHECK(genz_eval(make(GenzFamily::oscillatory, {0, 0}, {0, 0}), mid) == 1.0);
  CHECK(genz_eval(make(GenzFamily::oscillatory, {0, 0}, {0.5, 0}), mid) == doctest::Approx(-1.0));
  CHECK(genz_eval(make(GenzFamily::corner_peak, {1, 1}, {0, 0}), one) == doctest::Approx(1.0 / 27));
  CHECK(genz_eval(make(GenzFamily::product_peak, {1, 1}, {0.5, 0.5}), mid) == 1.0);
  CHECK(genz_eval(make(GenzFamily::gaussian, {3, 3}, {0.5, 0.5}), mid) == 1.0);
  CHECK(genz_eval(make(GenzFamily::c0, {2, 1}, {0, 0}), one) == doctest::Approx(std::exp(-3.0)));
  CHECK(genz_eval(make(GenzFamily::discontinuous, {1, 1}, {0.4, 0.9}), mid) == 0.0);
  CHECK(genz_eval(make(GenzFamily::discontinuous, {1, 1}, {0.6, 0.9}), mid) == doctest::Approx(std::exp(1.0)));
  CHECK(genz_eval(make(GenzFamily::discontinuous, {1}, {0.6}), Eigen::VectorXd::Constant(1, 0.5)) ==
        doctest::Approx(std::exp(0.5)));

  Rng rng(5);
  for (GenzFamily fam : kGenzFamilies) {
    for (int t = 0; t < 50; ++t) {
      const GenzParams p = draw_genz_params(2, rng());
      const GenzFunction f{fam, p.a, p.b};
      const Eigen::Vector2d x(rng.uniform(), rng.uniform());
      CHECK(genz_eval(f, x) == doctest::Approx(genz_direct(f, x)).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(genz_eval(make(GenzFamily::c0, {1}, {0}), mid), DimensionMismatch);
}

TEST_CASE("family names") {
  for (GenzFamily f : kGenzFamilies) CHECK(parse_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_family("saddle"), InvalidSpec);
}

TEST_CASE("Genz parameters") {
  for (Index d : {1, 2, 5}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const GenzParams p = draw_genz_params(d, seed);
      CHECK(std::abs(p.a.norm() - kGenzNorm) <= 1e-12);
      CHECK(p.a.minCoeff() >= 0.0);
      CHECK(p.b.minCoeff() >= 0.0);
      CHECK(p.b.maxCoeff() <= 1.0);
      const GenzParams q = draw_genz_params(d, seed);
      CHECK((p.a.array() == q.a.array()).all());
      CHECK((p.b.array() == q.b.array()).all());
    }
  }
}

TEST_CASE("fit_slope") {
  const std::vector<Index> n = {4, 8, 16, 32, 64, 128, 256};
  std::vector<double> e;
  for (Index k : n) e.push_back(3.0 * std::pow(static_cast<double>(k), -2.0));
  CHECK(fit_slope(n, e) == doctest::Approx(-2.0));

  // only the upper half counts
  std::vector<double> kinked = e;
  kinked[0] = kinked[1] = kinked[2] = 1.0;
  CHECK(fit_slope(n, kinked) == doctest::Approx(-2.0));

  std::vector<double> zeros = e;
  zeros[6] = 0.0;
  CHECK(fit_slope(n, zeros) == doctest::Approx(-2.0));
  CHECK(std::isnan(fit_slope({4, 8}, {1.0, 0.0})));
}

TEST_CASE("config validation and active families") {
  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.schedule = {8, 4};
  CHECK_THROWS_AS(c.validate(), InvalidSpec);
  c = small_config();
  c.K_max = 10;
  CHECK_THROWS_AS(c.validate(), InvalidSpec);

  ExperimentConfig r;
  r.distribution = DistributionSpec::rosenbrock(2);
  const auto fams = r.active_families();
  CHECK(fams.size() == 5);
  CHECK(std::find(fams.begin(), fams.end(), GenzFamily::corner_peak) == fams.end());
  ExperimentConfig u;
  CHECK(u.active_families().size() == 6);
}

TEST_CASE("convergence run matches an independent recomputation") {
  const ExperimentConfig c = small_config();
  std::vector<std::string> lines;
  const ExperimentReport rep = run_convergence(c, [&](const std::string& s) { lines.push_back(s); });
  REQUIRE(rep.repetitions.size() == 2);
  CHECK(rep.rows.size() == 9);
  CHECK(rep.slopes.size() == 3);

  // recompute every error row from the recorded seeds
  std::vector<std::vector<double>> nested(3, std::vector<double>(3, 0.0)), mc = nested;
  for (const RepetitionRecord& rec : rep.repetitions) {
    REQUIRE(rec.ok);
    DistributionSpec dist = c.distribution;
    dist.seed = rec.sample_seed;
    const SampleSet s = generate(dist, c.K_max + 1);
    const BasisSpec full = BasisSpec::legendre(2, 17, bounding_box(s.points));
    std::vector<QuadratureRule> chain = {construct_fixed_rule(s, full.resized(5))};
    chain.push_back(extend_rule({chain.back(), 9, s, ExtensionMode::increase_degree}, rec.selection_seed + 1));
    chain.push_back(extend_rule({chain.back(), 17, s, ExtensionMode::increase_degree}, rec.selection_seed + 2));
    CHECK(rec.final_nodes == chain.back().size());
    CHECK(rec.sum_rule_nodes == chain[0].size() + chain[1].size() + chain[2].size());
    CHECK(rec.evaluations == chain.back().size());
    CHECK(rec.evaluations < rec.sum_rule_nodes);

    Rng genz_rng(rec.genz_seed);
    for (std::size_t f = 0; f < 3; ++f) {
      const GenzParams p = draw_genz_params(2, genz_rng());
      const GenzFunction u{c.families[f], p.a, p.b};
      double ref = 0;
      for (Index k = 0; k < s.count(); ++k) ref += genz_direct(u, s.points.col(k));
      ref /= static_cast<double>(s.count());
      for (std::size_t st = 0; st < 3; ++st) {
        double q = 0;
        for (Index k = 0; k < chain[st].size(); ++k) q += chain[st].weights(k) * genz_direct(u, chain[st].nodes.col(k));
        nested[f][st] += std::abs(q - ref) / 2;
        const Index n = c.schedule[st] + 1;
        double m = 0;
        for (Index k = 0; k < n; ++k) m += genz_direct(u, s.points.col(k));
        mc[f][st] += std::abs(m / static_cast<double>(n) - ref) / 2;
      }
    }
  }
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t st = 0; st < 3; ++st) {
      const ErrorRow& row = rep.row(c.families[f], c.schedule[st]);
      CHECK(row.successes == 2);
      CHECK(row.nested == doctest::Approx(nested[f][st]).epsilon(1e-9).scale(1e-12));
      CHECK(row.monte_carlo == doctest::Approx(mc[f][st]).epsilon(1e-9).scale(1e-12));
      CHECK(std::isnan(row.regenerated));
    }
  }
}

TEST_CASE("a constant integrand has no error") {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  c.families = {GenzFamily::oscillatory};
  ExperimentReport rep = run_convergence(c);
  const RepetitionRecord& rec = rep.repetitions[0];
  DistributionSpec dist = c.distribution;
  dist.seed = rec.sample_seed;
  const SampleSet s = generate(dist, c.K_max + 1);
  const QuadratureRule q = construct_fixed_rule(s, BasisSpec::legendre(2, 5, bounding_box(s.points)));
  CHECK(std::abs(apply_rule(q, Eigen::VectorXd::Constant(q.size(), 2.0)) - 2.0) < 1e-14);
}

TEST_CASE("runs are reproducible and include the non-nested rules on request") {
  ExperimentConfig c = small_config();
  c.include_nonnested = true;
  const ExperimentReport a = run_convergence(c), b = run_convergence(c);
  CHECK(report_csv(a) == report_csv(b));
  for (const ErrorRow& r : a.rows) CHECK(std::isfinite(r.regenerated));

  const std::string csv = report_csv(a);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "family,N,method,mean_abs_error");
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 9 * 3);
  CHECK(csv.find("gaussian,16,nested,") != std::string::npos);
  CHECK(csv.find("c0,4,regenerated,") != std::string::npos);
}

TEST_CASE("a failing repetition is logged and skipped") {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  // the file holds three-dimensional samples while the run expects two
  const std::string path = (std::filesystem::temp_directory_path() / "iqr_test_bench_3d.bin").string();
  write_samples(generate(DistributionSpec::uniform({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 1), c.K_max + 1), path,
                SampleFormat::binary_f64);
  c.distribution = DistributionSpec::file(path, SampleFormat::binary_f64);
  std::vector<std::string> lines;
  const ExperimentReport rep = run_convergence(c, [&](const std::string& s) { lines.push_back(s); });
  CHECK_FALSE(rep.repetitions[0].ok);
  CHECK_FALSE(rep.repetitions[0].diagnostic.empty());
  CHECK_FALSE(lines.empty());
  for (const ErrorRow& r : rep.rows) {
    CHECK(r.successes == 0);
    CHECK(std::isnan(r.nested));
  }
  std::filesystem::remove(path);
}
