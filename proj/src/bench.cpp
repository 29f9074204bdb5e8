#include "iqr/bench.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "iqr/nested.hpp"
#include "iqr/rule.hpp"

namespace iqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FamilyErrors {
  std::vector<double> nested, regenerated, monte_carlo;
};

}  // namespace

std::string_view family_name(GenzFamily family) {
  switch (family) {
    case GenzFamily::oscillatory: return "oscillatory";
    case GenzFamily::product_peak: return "product_peak";
    case GenzFamily::corner_peak: return "corner_peak";
    case GenzFamily::gaussian: return "gaussian";
    case GenzFamily::c0: return "c0";
    case GenzFamily::discontinuous: return "discontinuous";
  }
  return "unknown";
}

GenzFamily parse_family(std::string_view name) {
  for (GenzFamily f : kGenzFamilies) {
    if (family_name(f) == name) return f;
  }
  throw InvalidSpec("unknown Genz family '" + std::string(name) + "'");
}

GenzParams draw_genz_params(Index d, std::uint64_t seed) {
  if (d < 1) throw InvalidSpec("draw_genz_params: d must be at least 1");
  Rng rng(seed);
  GenzParams p;
  p.a.resize(d);
  p.b.resize(d);
  for (Index i = 0; i < d; ++i) p.a(i) = rng.uniform();
  for (Index i = 0; i < d; ++i) p.b(i) = rng.uniform();
  double norm = p.a.norm();
  while (norm == 0.0) {
    for (Index i = 0; i < d; ++i) p.a(i) = rng.uniform();
    norm = p.a.norm();
  }
  p.a *= kGenzNorm / norm;
  return p;
}

void ExperimentConfig::validate() const {
  if (d < 1) throw InvalidSpec("experiment: d must be at least 1");
  if (repetitions < 1) throw InvalidSpec("experiment: repetitions must be at least 1");
  if (schedule.empty()) throw InvalidSpec("experiment: empty schedule");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) throw InvalidSpec("experiment: schedule entries must be at least 1");
    if (i && schedule[i] <= schedule[i - 1]) throw InvalidSpec("experiment: schedule must be strictly ascending");
  }
  if (K_max < schedule.back()) {
    throw InvalidSpec("experiment: K_max " + std::to_string(K_max) + " is below the largest rule size " +
                      std::to_string(schedule.back()));
  }
  if (removal_cap < 1) throw InvalidSpec("experiment: removal_cap must be positive");
  distribution.validate();
  if (distribution.kind != DistributionKind::file && distribution.d != d) {
    throw InvalidSpec("experiment: distribution dimension " + std::to_string(distribution.d) + " differs from d " +
                      std::to_string(d));
  }
  if (active_families().empty()) throw InvalidSpec("experiment: no Genz family to run");
}

std::vector<GenzFamily> ExperimentConfig::active_families() const {
  std::vector<GenzFamily> out;
  for (GenzFamily f : families.empty() ? std::vector<GenzFamily>(kGenzFamilies.begin(), kGenzFamilies.end())
                                       : families) {
    if (f == GenzFamily::corner_peak && distribution.kind == DistributionKind::rosenbrock) continue;
    out.push_back(f);
  }
  return out;
}

const ErrorRow& ExperimentReport::row(GenzFamily family, Index N) const {
  for (const ErrorRow& r : rows) {
    if (r.family == family && r.N == N) return r;
  }
  throw std::out_of_range("ExperimentReport: no row for " + std::string(family_name(family)) + " N=" +
                          std::to_string(N));
}

const FamilySlopes& ExperimentReport::slope(GenzFamily family) const {
  for (const FamilySlopes& s : slopes) {
    if (s.family == family) return s;
  }
  throw std::out_of_range("ExperimentReport: no slopes for " + std::string(family_name(family)));
}

double fit_slope(const std::vector<Index>& n, const std::vector<double>& error) {
  if (n.size() != error.size()) throw DimensionMismatch("fit_slope: length mismatch");
  const std::size_t first = n.size() / 2;
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < n.size(); ++i) {
    if (!(error[i] > 0.0) || !std::isfinite(error[i])) continue;
    xs.push_back(std::log2(static_cast<double>(n[i])));
    ys.push_back(std::log2(error[i]));
  }
  if (xs.size() < 2) return kNaN;
  const auto m = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

ExperimentReport run_convergence(const ExperimentConfig& config, const LogSink& log) {
  config.validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  const std::vector<GenzFamily> families = config.active_families();
  if (config.distribution.kind == DistributionKind::rosenbrock &&
      (config.families.empty() ||
       std::find(config.families.begin(), config.families.end(), GenzFamily::corner_peak) != config.families.end())) {
    say("corner_peak skipped: its integral diverges under the rosenbrock distribution");
  }

  const std::size_t nf = families.size();
  const std::size_t ns = config.schedule.size();
  // sums[f][s], accumulated in repetition order.
  std::vector<std::vector<double>> sum_nested(nf, std::vector<double>(ns, 0.0));
  std::vector<std::vector<double>> sum_regen(nf, std::vector<double>(ns, 0.0));
  std::vector<std::vector<double>> sum_mc(nf, std::vector<double>(ns, 0.0));
  std::vector<double> sum_nodes(ns, 0.0);
  std::vector<Index> successes(nf, 0);
  Index chain_successes = 0;

  ExperimentReport report;
  report.config = config;

  for (Index r = 0; r < config.repetitions; ++r) {
    Rng seeds = Rng::stream(config.seed, static_cast<std::uint64_t>(r));
    RepetitionRecord rec;
    rec.sample_seed = seeds();
    rec.genz_seed = seeds();
    rec.selection_seed = seeds();

    try {
      DistributionSpec dist = config.distribution;
      dist.seed = rec.sample_seed;
      const SampleSet samples = generate(dist, config.K_max + 1);
      if (samples.dim() != config.d) {
        throw DimensionMismatch("samples have dimension " + std::to_string(samples.dim()) + ", config says " +
                                std::to_string(config.d));
      }

      const BasisSpec full = config.basis == BasisFamily::monomial
                                 ? BasisSpec::monomial(config.d, config.schedule.back() + 1)
                                 : BasisSpec::legendre(config.d, config.schedule.back() + 1,
                                                       bounding_box(samples.points));

      std::vector<QuadratureRule> chain;
      chain.reserve(ns);
      chain.push_back(construct_fixed_rule(samples, full.resized(config.schedule[0] + 1)));
      for (std::size_t s = 1; s < ns; ++s) {
        ExtensionRequest req{chain.back(), config.schedule[s] + 1, samples, ExtensionMode::increase_degree};
        ExtensionOptions opt;
        opt.removal_cap = config.removal_cap;
        chain.push_back(extend_rule(req, rec.selection_seed + s, opt));
      }
      std::vector<QuadratureRule> regenerated;
      if (config.include_nonnested) {
        for (std::size_t s = 0; s < ns; ++s) {
          regenerated.push_back(construct_fixed_rule(samples, full.resized(config.schedule[s] + 1)));
        }
      }

      for (const QuadratureRule& q : chain) rec.sum_rule_nodes += q.size();
      rec.final_nodes = chain.back().size();

      Rng genz_rng(rec.genz_seed);
      std::vector<FamilyErrors> errs(nf);
      for (std::size_t f = 0; f < nf; ++f) {
        const GenzParams p = draw_genz_params(config.d, genz_rng());
        const GenzFunction u{families[f], p.a, p.b};

        Eigen::VectorXd values(samples.count());
        for (Index k = 0; k < samples.count(); ++k) values(k) = genz_eval(u, samples.point(k));
        // Sequential sums keep the reference and Monte Carlo estimates
        // reproducible bit for bit.
        double total = 0.0;
        std::vector<double> prefix(static_cast<std::size_t>(samples.count()));
        for (Index k = 0; k < samples.count(); ++k) {
          total += values(k);
          prefix[static_cast<std::size_t>(k)] = total;
        }
        const double reference = total / static_cast<double>(samples.count());

        EvaluationCache cache;
        auto eval = [&](const Eigen::Ref<const Eigen::VectorXd>& x) { return genz_eval(u, x); };
        auto apply = [&](const QuadratureRule& q) {
          double sum = 0.0;
          for (Index k = 0; k < q.size(); ++k) sum += q.weights(k) * cache.evaluate(q.nodes.col(k), eval);
          return sum;
        };

        for (std::size_t s = 0; s < ns; ++s) {
          const Index n = config.schedule[s] + 1;
          errs[f].nested.push_back(std::abs(apply(chain[s]) - reference));
          const double mc = prefix[static_cast<std::size_t>(n - 1)] / static_cast<double>(n);
          errs[f].monte_carlo.push_back(std::abs(mc - reference));
          if (config.include_nonnested) {
            const QuadratureRule& q = regenerated[s];
            double sum = 0.0;
            for (Index k = 0; k < q.size(); ++k) sum += q.weights(k) * genz_eval(u, q.nodes.col(k));
            errs[f].regenerated.push_back(std::abs(sum - reference));
          }
        }
        if (f == 0) rec.evaluations = static_cast<Index>(cache.size());
      }

      for (std::size_t f = 0; f < nf; ++f) {
        bool finite = true;
        for (std::size_t s = 0; s < ns; ++s) {
          finite = finite && std::isfinite(errs[f].nested[s]) && std::isfinite(errs[f].monte_carlo[s]);
          if (config.include_nonnested) finite = finite && std::isfinite(errs[f].regenerated[s]);
        }
        if (!finite) {
          say("repetition " + std::to_string(r) + ": " + std::string(family_name(families[f])) +
              " produced a non-finite error; skipped");
          continue;
        }
        ++successes[f];
        for (std::size_t s = 0; s < ns; ++s) {
          sum_nested[f][s] += errs[f].nested[s];
          sum_mc[f][s] += errs[f].monte_carlo[s];
          if (config.include_nonnested) sum_regen[f][s] += errs[f].regenerated[s];
        }
      }
      for (std::size_t s = 0; s < ns; ++s) sum_nodes[s] += static_cast<double>(chain[s].size());
      ++chain_successes;
      say("repetition " + std::to_string(r) + ": final rule " + std::to_string(rec.final_nodes) + " nodes, " +
          std::to_string(rec.evaluations) + " evaluations per family");
    } catch (const Error& e) {
      rec.ok = false;
      rec.diagnostic = e.what();
      say("repetition " + std::to_string(r) + " failed: " + rec.diagnostic);
    }
    report.repetitions.push_back(std::move(rec));
  }

  for (std::size_t f = 0; f < nf; ++f) {
    const auto count = static_cast<double>(successes[f]);
    std::vector<double> nested(ns), regen(ns), mc(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      ErrorRow row{families[f], config.schedule[s], kNaN, kNaN, kNaN, kNaN, successes[f]};
      if (successes[f] > 0) {
        row.nested = sum_nested[f][s] / count;
        row.monte_carlo = sum_mc[f][s] / count;
        if (config.include_nonnested) row.regenerated = sum_regen[f][s] / count;
      }
      if (chain_successes > 0) row.mean_nodes = sum_nodes[s] / static_cast<double>(chain_successes);
      nested[s] = row.nested;
      regen[s] = row.regenerated;
      mc[s] = row.monte_carlo;
      report.rows.push_back(row);
    }
    report.slopes.push_back({families[f], fit_slope(config.schedule, nested), fit_slope(config.schedule, regen),
                             fit_slope(config.schedule, mc), successes[f]});
  }
  return report;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "family,N,method,mean_abs_error\n";
  auto put = [&](const ErrorRow& r, const char* method, double v) {
    out << family_name(r.family) << ',' << r.N << ',' << method << ',' << (std::isfinite(v) ? format_double(v) : "nan")
        << '\n';
  };
  for (const ErrorRow& r : report.rows) {
    put(r, "nested", r.nested);
    if (report.config.include_nonnested) put(r, "regenerated", r.regenerated);
    put(r, "monte_carlo", r.monte_carlo);
  }
  return out.str();
}

}  // namespace iqr
