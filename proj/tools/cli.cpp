#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "iqr/bench.hpp"
#include "iqr/nested.hpp"
#include "iqr/removal.hpp"
#include "iqr/rule.hpp"
#include "iqr/sampling.hpp"
#include "iqr/serialize.hpp"

namespace iqr::cli {

namespace {

enum class Level { error, warn, info, debug };

class Log {
 public:
  Log(std::ostream& err, Level level) : err_(err), level_(level) {}
  void error(const std::string& m) const { put(Level::error, "error", m); }
  void warn(const std::string& m) const { put(Level::warn, "warn", m); }
  void info(const std::string& m) const { put(Level::info, "info", m); }
  void debug(const std::string& m) const { put(Level::debug, "debug", m); }

 private:
  void put(Level l, const char* tag, const std::string& m) const {
    if (l <= level_) err_ << tag << ": " << m << '\n';
  }
  std::ostream& err_;
  Level level_;
};

Level parse_level(const std::string& s) {
  if (s == "error") return Level::error;
  if (s == "warn") return Level::warn;
  if (s == "info") return Level::info;
  return Level::debug;
}

/// Inline JSON when the argument starts with '{', a file path otherwise.
Json load_json(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return parse_json(arg);
  return parse_json(read_text(arg));
}

SampleFormat format_for(const std::string& path, const std::string& requested) {
  if (!requested.empty()) return parse_format(requested);
  const std::string ext = std::filesystem::path(path).extension().string();
  return ext == ".bin" ? SampleFormat::binary_f64 : SampleFormat::csv;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string level = "info";
};

int gen_samples(const Globals& g, const Log& log, std::ostream& out, const std::string& dist_arg, Index count,
                const std::string& path, const std::string& format) {
  DistributionSpec spec = distribution_from_json(load_json(dist_arg));
  if (g.seed) spec.seed = *g.seed;
  if (count < 1) throw InvalidSpec("--count must be at least 1");
  const SampleFormat fmt = format_for(path, format);
  const SampleSet s = generate(spec, count);
  write_samples(s, path, fmt);
  const std::string sidecar = path + ".json";
  write_text(sidecar, dump(to_json(s.provenance, s.dim(), s.count())));
  log.info("wrote " + std::to_string(s.count()) + " samples of dimension " + std::to_string(s.dim()));
  out << path << '\n' << sidecar << '\n';
  return kOk;
}

void report_rule(std::ostream& out, const QuadratureRule& rule, double residual) {
  out << "nodes " << rule.size() << '\n';
  out << "N " << rule.size() - 1 << '\n';
  out << "min_weight " << format_double(rule.weights.minCoeff()) << '\n';
  out << "moment_residual " << format_double(residual) << '\n';
}

int build(const Log& log, std::ostream& out, const std::string& samples_path, const std::string& format, Index size,
          const std::string& basis, const std::string& path) {
  if (size < 1) throw InvalidSpec("--degree-size must be at least 1");
  const SampleSet samples = read_samples(samples_path, format_for(samples_path, format));
  BasisSpec spec;
  if (basis == "monomial") {
    spec = BasisSpec::monomial(samples.dim(), size);
  } else if (basis == "legendre") {
    spec = BasisSpec::legendre(samples.dim(), size, bounding_box(samples.points));
  } else {
    throw InvalidSpec("unknown basis '" + basis + "'");
  }
  const QuadratureRule rule = construct_fixed_rule(samples, spec);
  const double residual = moment_residual(rule, sample_moments(samples, spec).values);
  write_text(path, dump(to_json(rule)));
  log.info("rule with " + std::to_string(rule.size()) + " nodes from " + std::to_string(samples.count()) +
           " samples");
  report_rule(out, rule, residual);
  out << path << '\n';
  return residual <= kMomentTolerance && rule.weights.minCoeff() >= 0.0 ? kOk : kFailure;
}

ExtensionMode parse_mode(const std::string& s) {
  if (s == "continue") return ExtensionMode::continue_samples;
  if (s == "degree") return ExtensionMode::increase_degree;
  if (s == "resampled") return ExtensionMode::resampled;
  throw InvalidSpec("unknown mode '" + s + "' (continue, degree or resampled)");
}

int extend(const Globals& g, const Log& log, std::ostream& out, const std::string& rule_path,
           const std::string& samples_path, const std::string& format, Index size, const std::string& mode,
           std::size_t cap, const std::string& path) {
  ExtensionRequest req;
  req.base = rule_from_json(parse_json(read_text(rule_path)));
  req.samples = read_samples(samples_path, format_for(samples_path, format));
  req.target_size = size;
  req.mode = parse_mode(mode);
  const Index base_nodes = req.base.size();
  if (req.mode == ExtensionMode::increase_degree) {
    log.debug("degree mode: base weights reset to 1/(N+1) = " +
              format_double(1.0 / static_cast<double>(base_nodes)) + " on " + std::to_string(base_nodes) + " nodes");
  }
  ExtensionOptions opt;
  opt.removal_cap = cap;
  ExtensionStats stats;
  const QuadratureRule rule = extend_rule(req, g.seed.value_or(0), opt, &stats);
  const double residual = moment_residual(rule, sample_moments(req.samples, rule.spec).values);
  write_text(path, dump(to_json(rule)));

  bool nested = true;
  for (Index k = 0; k < base_nodes; ++k) {
    nested = nested && (rule.nodes.col(k).array() == req.base.nodes.col(k).array()).all();
  }
  const bool bound = node_count_within_bound(base_nodes, size, rule.size());
  log.debug("samples added " + std::to_string(stats.iterations) + ", removals visited " +
            std::to_string(stats.vertices) + ", cap fallbacks " + std::to_string(stats.cap_fallbacks));
  report_rule(out, rule, residual);
  out << "M " << rule.size() - base_nodes << '\n';
  out << "bound " << (bound ? "ok" : "violated") << '\n';
  out << path << '\n';
  if (!bound) log.error("node count " + std::to_string(rule.size()) + " outside the nested bound");
  if (!nested) log.error("base nodes are not a prefix of the extended rule");
  return bound && nested && residual <= kMomentTolerance ? kOk : kFailure;
}

int bench(const Globals& g, const Log& log, std::ostream& out, const std::string& config_path,
          const std::string& csv_path, const std::string& json_path) {
  ExperimentConfig config = config_from_json(load_json(config_path));
  if (g.seed) config.seed = *g.seed;
  const ExperimentReport report = run_convergence(config, [&](const std::string& m) { log.info(m); });
  write_text(csv_path, report_csv(report));
  out << csv_path << '\n';
  if (!json_path.empty()) {
    write_text(json_path, dump(to_json(report)));
    out << json_path << '\n';
  }
  int code = kOk;
  for (const FamilySlopes& s : report.slopes) {
    log.info(std::string(family_name(s.family)) + " slopes: nested " + format_double(s.nested) + ", monte carlo " +
             format_double(s.monte_carlo));
    if (s.successes == 0) {
      log.error(std::string(family_name(s.family)) + " failed in every repetition");
      code = kFamilyFailed;
    }
  }
  return code;
}

int enumerate(const Log& log, std::ostream& out, const std::string& rule_path, Index m, std::size_t cap,
              const std::string& path) {
  const QuadratureRule rule = rule_from_json(parse_json(read_text(rule_path)));
  const RemovalSet set = enumerate_removals(rule, m, cap);
  Json removals = Json::array();
  for (const Removal& r : set.removals) {
    removals.push_back({{"indices", r.indices}, {"zero_set", r.zero_set}, {"degenerate", r.degenerate}});
  }
  const Json j = {{"M", m},
                  {"count", set.removals.size()},
                  {"vertices", set.stats.vertices},
                  {"degenerate_vertices", set.stats.degenerate_vertices},
                  {"removals", removals}};
  write_text(path, dump(j));
  log.info(std::to_string(set.removals.size()) + " removals of size " + std::to_string(m));
  out << "removals " << set.removals.size() << '\n' << path << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Implicit quadrature rules from samples", "iqr"};
  app.require_subcommand(1, 1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed for sampling, selection and benchmarks");
  app.add_option("--log-level", g.level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  std::string dist, samples, out_path, format, basis = "legendre", rule, mode, config, json_out;
  Index count = 0, size = 0, m = 1;
  std::size_t cap = 10'000;
  std::size_t enum_cap = kDefaultRemovalCap;

  auto* gen = app.add_subcommand("gen-samples", "Draw samples from a distribution");
  gen->add_option("--dist", dist, "Distribution JSON, inline or a file path")->required();
  gen->add_option("--count", count, "Number of samples")->required();
  gen->add_option("--out", out_path, "Output path")->required();
  gen->add_option("--format", format, "csv or bin (default from the extension)");

  auto* bld = app.add_subcommand("build", "Construct a fixed rule");
  bld->add_option("--samples", samples, "Sample file")->required();
  bld->add_option("--sample-format", format, "csv or bin (default from the extension)");
  bld->add_option("--degree-size", size, "Number of basis functions D+1")->required();
  bld->add_option("--basis", basis, "legendre or monomial")->check(CLI::IsMember({"legendre", "monomial"}));
  bld->add_option("--out", out_path, "Rule JSON")->required();

  auto* ext = app.add_subcommand("extend", "Extend a rule to a nested rule");
  ext->add_option("--rule", rule, "Base rule JSON")->required();
  ext->add_option("--samples", samples, "Sample file")->required();
  ext->add_option("--sample-format", format, "csv or bin (default from the extension)");
  ext->add_option("--degree-size", size, "Number of basis functions of the extended rule")->required();
  ext->add_option("--mode", mode, "continue, degree or resampled")->required();
  ext->add_option("--removal-cap", cap, "Removal search budget per sample");
  ext->add_option("--out", out_path, "Rule JSON")->required();

  auto* bg = app.add_subcommand("bench-genz", "Genz convergence experiment");
  bg->add_option("--config", config, "Experiment JSON, inline or a file path")->required();
  bg->add_option("--out", out_path, "Report CSV")->required();
  bg->add_option("--json", json_out, "Report JSON");

  auto* en = app.add_subcommand("enumerate", "List every M-removal of a rule");
  en->add_option("--rule", rule, "Rule JSON")->required();
  en->add_option("--m", m, "Removal size M")->required();
  en->add_option("--cap", enum_cap, "Vertex budget");
  en->add_option("--out", out_path, "Removals JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kSpecError;
  }
  if (*seed_opt) g.seed = seed;
  const Log log(err, parse_level(g.level));

  try {
    if (*gen) return gen_samples(g, log, out, dist, count, out_path, format);
    if (*bld) return build(log, out, samples, format, size, basis, out_path);
    if (*ext) return extend(g, log, out, rule, samples, format, size, mode, cap, out_path);
    if (*bg) return bench(g, log, out, config, out_path, json_out);
    if (*en) return enumerate(log, out, rule, m, enum_cap, out_path);
  } catch (const InvalidSpec& e) {
    log.error(e.what());
    return kSpecError;
  } catch (const ModeMismatch& e) {
    log.error(e.what());
    return kSpecError;
  } catch (const IoError& e) {
    log.error(e.what());
    return kIoError;
  } catch (const ParseError& e) {
    log.error(e.what());
    return kIoError;
  } catch (const DimensionInconsistent& e) {
    log.error(e.what());
    return kIoError;
  } catch (const InsufficientSamples& e) {
    log.error(e.what());
    return kInsufficientSamples;
  } catch (const NullSpaceFailure& e) {
    log.error(e.what());
    return kNullSpaceFailure;
  } catch (const CapExceeded& e) {
    log.error(e.what());
    return kCapExceeded;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kFailure;
  }
  return kFailure;
}

}  // namespace iqr::cli
