#include "iqr/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace iqr {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw InvalidSpec(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw InvalidSpec(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key);
}

/// Non-finite values become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

const char* kind_name(DistributionKind k) {
  switch (k) {
    case DistributionKind::uniform: return "uniform";
    case DistributionKind::beta: return "beta";
    case DistributionKind::normal: return "normal";
    case DistributionKind::rosenbrock: return "rosenbrock";
    case DistributionKind::indicator_region: return "indicator_region";
    case DistributionKind::file: return "file";
  }
  return "unknown";
}

DistributionKind parse_kind(const std::string& s) {
  for (auto k : {DistributionKind::uniform, DistributionKind::beta, DistributionKind::normal,
                 DistributionKind::rosenbrock, DistributionKind::indicator_region, DistributionKind::file}) {
    if (s == kind_name(k)) return k;
  }
  throw InvalidSpec("unknown distribution kind '" + s + "'");
}

const char* format_name(SampleFormat f) { return f == SampleFormat::csv ? "csv" : "bin"; }

const char* basis_name(BasisFamily f) { return f == BasisFamily::monomial ? "monomial" : "legendre"; }

BasisFamily parse_basis(const std::string& s) {
  if (s == "monomial") return BasisFamily::monomial;
  if (s == "legendre" || s == "product_legendre") return BasisFamily::product_legendre;
  throw InvalidSpec("unknown basis family '" + s + "'");
}

}  // namespace

Json to_json(const BasisSpec& spec) {
  Json domain = Json::array();
  for (const Interval& iv : spec.domain()) domain.push_back({iv.lo, iv.hi});
  return {{"d", spec.dim()}, {"size", spec.size()}, {"family", basis_name(spec.family())}, {"domain", domain}};
}

BasisSpec basis_from_json(const Json& j) {
  const auto d = get<Index>(j, "d");
  const auto size = get<Index>(j, "size");
  const BasisFamily family = parse_basis(get<std::string>(j, "family"));
  std::vector<Interval> domain;
  if (j.contains("domain")) {
    for (const auto& p : get<std::vector<std::array<double, 2>>>(j, "domain")) domain.push_back({p[0], p[1]});
  } else {
    domain.assign(static_cast<std::size_t>(std::max<Index>(d, 0)), Interval{});
  }
  try {
    return BasisSpec(d, size, family, std::move(domain));
  } catch (const InvalidSpec&) {
    throw;
  } catch (const std::exception& e) {
    throw InvalidSpec(std::string("basis: ") + e.what());
  }
}

Json to_json(const QuadratureRule& rule) {
  Json nodes = Json::array();
  for (Index k = 0; k < rule.size(); ++k) {
    Json x = Json::array();
    for (Index i = 0; i < rule.dim(); ++i) x.push_back(rule.nodes(i, k));
    nodes.push_back(std::move(x));
  }
  std::vector<double> w(rule.weights.data(), rule.weights.data() + rule.weights.size());
  Json fixed = Json::array();
  for (bool b : rule.fixed_mask) fixed.push_back(b);
  return {{"spec", to_json(rule.spec)},       {"K", rule.K},
          {"nodes", nodes},                   {"weights", w},
          {"source_indices", rule.source_indices}, {"fixed_mask", fixed}};
}

QuadratureRule rule_from_json(const Json& j) {
  QuadratureRule r;
  r.spec = basis_from_json(field(j, "spec"));
  r.K = get<Index>(j, "K");
  const auto nodes = get<std::vector<std::vector<double>>>(j, "nodes");
  const auto w = get<std::vector<double>>(j, "weights");
  const auto n = static_cast<Index>(w.size());
  if (static_cast<Index>(nodes.size()) != n) throw InvalidSpec("rule: node and weight counts differ");
  r.nodes.resize(r.spec.dim(), n);
  for (Index k = 0; k < n; ++k) {
    const auto& x = nodes[static_cast<std::size_t>(k)];
    if (static_cast<Index>(x.size()) != r.spec.dim()) {
      throw InvalidSpec("rule: node " + std::to_string(k) + " has dimension " + std::to_string(x.size()));
    }
    for (Index i = 0; i < r.spec.dim(); ++i) r.nodes(i, k) = x[static_cast<std::size_t>(i)];
  }
  r.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), n);
  r.source_indices = get_or<std::vector<Index>>(j, "source_indices", std::vector<Index>(static_cast<std::size_t>(n), -1));
  r.fixed_mask = get_or<std::vector<bool>>(j, "fixed_mask", std::vector<bool>(static_cast<std::size_t>(n), false));
  if (static_cast<Index>(r.source_indices.size()) != n || static_cast<Index>(r.fixed_mask.size()) != n) {
    throw InvalidSpec("rule: source_indices or fixed_mask length differs from the node count");
  }
  return r;
}

Json to_json(const DistributionSpec& s) {
  Json j;
  j["kind"] = kind_name(s.kind);
  switch (s.kind) {
    case DistributionKind::uniform:
      j["lo"] = s.lo;
      j["hi"] = s.hi;
      break;
    case DistributionKind::beta:
      j["a"] = s.a;
      j["b"] = s.b;
      j["lo"] = s.lo;
      j["hi"] = s.hi;
      break;
    case DistributionKind::normal:
      j["mean"] = s.mean;
      j["sd"] = s.sd;
      break;
    case DistributionKind::rosenbrock:
      j["d"] = s.d;
      j["a"] = s.rosenbrock_a;
      j["b"] = s.rosenbrock_b;
      j["mh"] = {{"step", s.mh.step},
                 {"burn_in", s.mh.burn_in},
                 {"thinning", s.mh.thinning},
                 {"window", s.mh.window},
                 {"min_acceptance", s.mh.min_acceptance}};
      break;
    case DistributionKind::indicator_region: {
      j["base"] = s.base ? to_json(*s.base) : Json(nullptr);
      Json region = Json::array();
      for (const RegionShape& r : s.region) {
        if (r.type == RegionShape::Type::box) {
          region.push_back({{"type", "box"}, {"lo", r.lo}, {"hi", r.hi}});
        } else {
          region.push_back({{"type", "polygon"}, {"vertices", r.vertices}});
        }
      }
      j["region"] = region;
      j["window"] = s.window;
      j["min_acceptance"] = s.min_acceptance;
      break;
    }
    case DistributionKind::file:
      j["path"] = s.path;
      j["format"] = format_name(s.format);
      break;
  }
  j["seed"] = s.seed;
  return j;
}

DistributionSpec distribution_from_json(const Json& j) {
  const DistributionKind kind = parse_kind(get<std::string>(j, "kind"));
  const auto seed = get_or<std::uint64_t>(j, "seed", 0);
  DistributionSpec s;
  switch (kind) {
    case DistributionKind::uniform:
      s = DistributionSpec::uniform(get<std::vector<double>>(j, "lo"), get<std::vector<double>>(j, "hi"), seed);
      break;
    case DistributionKind::beta: {
      auto a = get<std::vector<double>>(j, "a");
      const auto d = static_cast<std::size_t>(a.size());
      s = DistributionSpec::beta(std::move(a), get<std::vector<double>>(j, "b"),
                                 get_or<std::vector<double>>(j, "lo", std::vector<double>(d, 0.0)),
                                 get_or<std::vector<double>>(j, "hi", std::vector<double>(d, 1.0)), seed);
      break;
    }
    case DistributionKind::normal:
      s = DistributionSpec::normal(get<std::vector<double>>(j, "mean"), get<std::vector<double>>(j, "sd"), seed);
      break;
    case DistributionKind::rosenbrock: {
      s = DistributionSpec::rosenbrock(get<Index>(j, "d"), seed);
      s.rosenbrock_a = get_or<double>(j, "a", s.rosenbrock_a);
      s.rosenbrock_b = get_or<double>(j, "b", s.rosenbrock_b);
      if (j.contains("mh")) {
        const Json& mh = j["mh"];
        s.mh.step = get_or<double>(mh, "step", s.mh.step);
        s.mh.burn_in = get_or<Index>(mh, "burn_in", s.mh.burn_in);
        s.mh.thinning = get_or<Index>(mh, "thinning", s.mh.thinning);
        s.mh.window = get_or<Index>(mh, "window", s.mh.window);
        s.mh.min_acceptance = get_or<double>(mh, "min_acceptance", s.mh.min_acceptance);
      }
      break;
    }
    case DistributionKind::indicator_region: {
      std::vector<RegionShape> region;
      const Json& shapes = field(j, "region");
      if (!shapes.is_array()) throw InvalidSpec("region must be an array of shapes");
      for (const Json& r : shapes) {
        RegionShape shape;
        const auto type = get<std::string>(r, "type");
        if (type == "box") {
          shape.type = RegionShape::Type::box;
          shape.lo = get<std::vector<double>>(r, "lo");
          shape.hi = get<std::vector<double>>(r, "hi");
        } else if (type == "polygon") {
          shape.type = RegionShape::Type::polygon;
          shape.vertices = get<std::vector<std::array<double, 2>>>(r, "vertices");
        } else {
          throw InvalidSpec("unknown region shape '" + type + "'");
        }
        region.push_back(std::move(shape));
      }
      s = DistributionSpec::indicator(distribution_from_json(field(j, "base")), std::move(region), seed);
      s.window = get_or<Index>(j, "window", s.window);
      s.min_acceptance = get_or<double>(j, "min_acceptance", s.min_acceptance);
      break;
    }
    case DistributionKind::file: {
      s = DistributionSpec::file(get<std::string>(j, "path"),
                                 parse_format(get_or<std::string>(j, "format", "csv")));
      s.seed = seed;
      break;
    }
  }
  if (j.contains("d") && kind != DistributionKind::rosenbrock && kind != DistributionKind::file) {
    if (get<Index>(j, "d") != s.d) throw InvalidSpec("field 'd' does not match the parameter lengths");
  }
  s.validate();
  return s;
}

Json to_json(const SampleProvenance& p, Index d, Index count) {
  Json j;
  j["source"] = p.source == SampleSource::file ? "file" : "generator";
  if (p.source == SampleSource::generator) {
    j["distribution"] = parse_json(p.description);
  } else {
    j["path"] = p.description;
  }
  j["seed"] = p.seed;
  j["prng"] = "xoshiro256**, seeded through splitmix64";
  j["d"] = d;
  j["count"] = count;
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json families = Json::array();
  for (GenzFamily f : c.families) families.push_back(std::string(family_name(f)));
  return {{"d", c.d},
          {"K_max", c.K_max},
          {"schedule", c.schedule},
          {"repetitions", c.repetitions},
          {"distribution", to_json(c.distribution)},
          {"seed", c.seed},
          {"include_nonnested", c.include_nonnested},
          {"removal_cap", c.removal_cap},
          {"basis", basis_name(c.basis)},
          {"families", families}};
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  c.distribution = distribution_from_json(field(j, "distribution"));
  c.d = get_or<Index>(j, "d", c.distribution.d);
  c.K_max = get_or<Index>(j, "K_max", c.K_max);
  c.schedule = get_or<std::vector<Index>>(j, "schedule", c.schedule);
  c.repetitions = get_or<Index>(j, "repetitions", c.repetitions);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.include_nonnested = get_or<bool>(j, "include_nonnested", c.include_nonnested);
  c.removal_cap = get_or<std::size_t>(j, "removal_cap", c.removal_cap);
  c.basis = parse_basis(get_or<std::string>(j, "basis", "legendre"));
  for (const auto& name : get_or<std::vector<std::string>>(j, "families", {})) c.families.push_back(parse_family(name));
  c.validate();
  return c;
}

Json to_json(const ExperimentReport& report) {
  Json reps = Json::array();
  for (const RepetitionRecord& r : report.repetitions) {
    Json e = {{"sample_seed", r.sample_seed},
              {"genz_seed", r.genz_seed},
              {"selection_seed", r.selection_seed},
              {"ok", r.ok}};
    if (r.ok) {
      e["evaluations"] = r.evaluations;
      e["sum_rule_nodes"] = r.sum_rule_nodes;
      e["final_nodes"] = r.final_nodes;
    } else {
      e["diagnostic"] = r.diagnostic;
    }
    reps.push_back(std::move(e));
  }
  Json rows = Json::array();
  for (const ErrorRow& r : report.rows) {
    Json e = {{"family", std::string(family_name(r.family))}, {"N", r.N},
              {"nested", number(r.nested)},                   {"monte_carlo", number(r.monte_carlo)},
              {"mean_nodes", number(r.mean_nodes)},           {"successes", r.successes}};
    if (report.config.include_nonnested) e["regenerated"] = number(r.regenerated);
    rows.push_back(std::move(e));
  }
  Json slopes = Json::array();
  for (const FamilySlopes& s : report.slopes) {
    Json e = {{"family", std::string(family_name(s.family))},
              {"nested", number(s.nested)},
              {"monte_carlo", number(s.monte_carlo)},
              {"successes", s.successes}};
    if (report.config.include_nonnested) e["regenerated"] = number(s.regenerated);
    slopes.push_back(std::move(e));
  }
  return {{"config", to_json(report.config)}, {"repetitions", reps}, {"errors", rows}, {"slopes", slopes}};
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidSpec(std::string("malformed JSON: ") + e.what());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read from " + path + " failed");
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace iqr
