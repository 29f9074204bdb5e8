#include "iqr/sampling.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string_view>

#include "iqr/serialize.hpp"

namespace iqr {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidSpec(what);
}

void require_length(const std::vector<double>& v, Index d, const char* name) {
  require(static_cast<Index>(v.size()) == d,
          std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(d));
}

void require_box(const std::vector<double>& lo, const std::vector<double>& hi, Index d) {
  require_length(lo, d, "lo");
  require_length(hi, d, "hi");
  for (Index i = 0; i < d; ++i) {
    const auto k = static_cast<std::size_t>(i);
    require(std::isfinite(lo[k]) && std::isfinite(hi[k]) && lo[k] < hi[k],
            "coordinate " + std::to_string(i) + ": need finite lo < hi");
  }
}

/// One draw from a directly sampled distribution.
Eigen::VectorXd draw(const DistributionSpec& s, Rng& rng) {
  Eigen::VectorXd x(s.d);
  for (Index i = 0; i < s.d; ++i) {
    const auto k = static_cast<std::size_t>(i);
    switch (s.kind) {
      case DistributionKind::uniform: x(i) = rng.uniform(s.lo[k], s.hi[k]); break;
      case DistributionKind::beta: x(i) = s.lo[k] + (s.hi[k] - s.lo[k]) * rng.beta(s.a[k], s.b[k]); break;
      case DistributionKind::normal: x(i) = rng.normal(s.mean[k], s.sd[k]); break;
      default: throw InvalidSpec("distribution cannot be drawn from directly");
    }
  }
  return x;
}

bool in_polygon(const std::vector<std::array<double, 2>>& poly, double px, double py) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = poly[i][0], yi = poly[i][1];
    const double xj = poly[j][0], yj = poly[j][1];
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

std::string describe(const DistributionSpec& spec) { return to_json(spec).dump(); }

}  // namespace

DistributionSpec DistributionSpec::uniform(std::vector<double> lo, std::vector<double> hi, std::uint64_t seed) {
  DistributionSpec s;
  s.kind = DistributionKind::uniform;
  s.d = static_cast<Index>(lo.size());
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  s.seed = seed;
  return s;
}

DistributionSpec DistributionSpec::beta(std::vector<double> a, std::vector<double> b, std::vector<double> lo,
                                        std::vector<double> hi, std::uint64_t seed) {
  DistributionSpec s;
  s.kind = DistributionKind::beta;
  s.d = static_cast<Index>(a.size());
  s.a = std::move(a);
  s.b = std::move(b);
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  s.seed = seed;
  return s;
}

DistributionSpec DistributionSpec::normal(std::vector<double> mean, std::vector<double> sd, std::uint64_t seed) {
  DistributionSpec s;
  s.kind = DistributionKind::normal;
  s.d = static_cast<Index>(mean.size());
  s.mean = std::move(mean);
  s.sd = std::move(sd);
  s.seed = seed;
  return s;
}

DistributionSpec DistributionSpec::rosenbrock(Index d, std::uint64_t seed) {
  DistributionSpec s;
  s.kind = DistributionKind::rosenbrock;
  s.d = d;
  s.seed = seed;
  return s;
}

DistributionSpec DistributionSpec::indicator(DistributionSpec base, std::vector<RegionShape> region,
                                             std::uint64_t seed) {
  DistributionSpec s;
  s.kind = DistributionKind::indicator_region;
  s.d = base.d;
  s.base = std::make_shared<const DistributionSpec>(std::move(base));
  s.region = std::move(region);
  s.seed = seed;
  return s;
}

DistributionSpec DistributionSpec::file(std::string path, SampleFormat format) {
  DistributionSpec s;
  s.kind = DistributionKind::file;
  s.path = std::move(path);
  s.format = format;
  return s;
}

void DistributionSpec::validate() const {
  if (kind != DistributionKind::file) require(d >= 1, "d must be at least 1");
  switch (kind) {
    case DistributionKind::uniform: require_box(lo, hi, d); break;
    case DistributionKind::beta:
      require_box(lo, hi, d);
      require_length(a, d, "a");
      require_length(b, d, "b");
      for (Index i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        require(a[k] > 0.0 && b[k] > 0.0 && std::isfinite(a[k]) && std::isfinite(b[k]),
                "beta shapes must be positive and finite");
      }
      break;
    case DistributionKind::normal:
      require_length(mean, d, "mean");
      require_length(sd, d, "sd");
      for (Index i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        require(std::isfinite(mean[k]) && sd[k] > 0.0 && std::isfinite(sd[k]), "normal needs finite mean, sd > 0");
      }
      break;
    case DistributionKind::rosenbrock:
      require(d >= 2, "rosenbrock needs d >= 2");
      require(std::isfinite(rosenbrock_a) && std::isfinite(rosenbrock_b) && rosenbrock_b >= 0.0,
              "rosenbrock needs finite a and b >= 0");
      require(mh.step > 0.0 && mh.burn_in >= 0 && mh.thinning >= 1 && mh.window >= 1,
              "metropolis settings need step > 0, burn_in >= 0, thinning >= 1, window >= 1");
      break;
    case DistributionKind::indicator_region:
      require(base != nullptr, "indicator_region needs a base distribution");
      require(base->kind == DistributionKind::uniform || base->kind == DistributionKind::beta ||
                  base->kind == DistributionKind::normal,
              "indicator_region base must be uniform, beta or normal");
      base->validate();
      require(base->d == d, "indicator_region base has a different dimension");
      require(!region.empty(), "indicator_region needs at least one shape");
      require(window >= 1, "indicator_region window must be positive");
      for (const RegionShape& s : region) {
        if (s.type == RegionShape::Type::box) {
          require_box(s.lo, s.hi, d);
        } else {
          require(d == 2, "polygons need d = 2");
          require(s.vertices.size() >= 3, "polygons need at least three vertices");
        }
      }
      break;
    case DistributionKind::file: require(!path.empty(), "file distribution needs a path"); break;
  }
}

bool region_contains(const std::vector<RegionShape>& region, const Eigen::Ref<const Eigen::VectorXd>& x) {
  bool inside = false;
  for (const RegionShape& s : region) {
    bool hit = true;
    if (s.type == RegionShape::Type::box) {
      for (Index i = 0; i < x.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (x(i) < s.lo[k] || x(i) > s.hi[k]) {
          hit = false;
          break;
        }
      }
    } else {
      hit = in_polygon(s.vertices, x(0), x(1));
    }
    if (hit) inside = !inside;
  }
  return inside;
}

double rosenbrock_f(const Eigen::Ref<const Eigen::VectorXd>& x, double a, double b) {
  double f = 0.0;
  for (Index i = 0; i + 1 < x.size(); ++i) {
    const double u = x(i + 1) - x(i) * x(i);
    const double v = a - x(i);
    f += b * u * u + v * v;
  }
  return f;
}

double rosenbrock_log_density(const Eigen::Ref<const Eigen::VectorXd>& x, double a, double b) {
  return -rosenbrock_f(x, a, b) - 0.5 * x.squaredNorm();
}

MetropolisChain::MetropolisChain(Index d, double a, double b, MetropolisSettings settings, std::uint64_t seed,
                                 Eigen::VectorXd start)
    : a_(a), b_(b), settings_(settings), rng_(seed), x_(start.size() ? std::move(start) : Eigen::VectorXd::Zero(d)) {
  if (x_.size() != d) throw DimensionMismatch("MetropolisChain: start point has the wrong dimension");
  logp_ = log_density(x_);
}

double MetropolisChain::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return rosenbrock_log_density(x, a_, b_);
}

double MetropolisChain::log_proposal(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const double s = settings_.step;
  const auto d = static_cast<double>(x.size());
  return -0.5 * (y - x).squaredNorm() / (s * s) - d * std::log(s * std::sqrt(2.0 * std::numbers::pi));
}

double MetropolisChain::acceptance_probability(const Eigen::Ref<const Eigen::VectorXd>& x,
                                               const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const double lr = log_density(y) + log_proposal(y, x) - log_density(x) - log_proposal(x, y);
  return lr >= 0.0 ? 1.0 : std::exp(lr);
}

MetropolisChain::Transition MetropolisChain::step() {
  Transition t;
  t.from = x_;
  t.proposal.resize(x_.size());
  for (Index i = 0; i < x_.size(); ++i) t.proposal(i) = x_(i) + settings_.step * rng_.normal();
  const double lp = log_density(t.proposal);
  t.log_ratio = lp - logp_;
  t.u = rng_.uniform();
  t.accepted = t.log_ratio >= 0.0 || t.u < std::exp(t.log_ratio);
  ++steps_;
  if (t.accepted) {
    ++accepted_;
    x_ = t.proposal;
    logp_ = lp;
  }
  return t;
}

SampleSet generate(const DistributionSpec& spec, Index count) {
  if (count < 1) throw InvalidSpec("generate: count must be at least 1");
  spec.validate();
  if (spec.kind == DistributionKind::file) {
    SampleSet s = read_samples(spec.path, spec.format);
    if (s.count() < count) {
      throw InvalidSpec("file holds " + std::to_string(s.count()) + " samples, " + std::to_string(count) +
                        " requested");
    }
    s.points.conservativeResize(Eigen::NoChange, count);
    return s;
  }

  SampleSet out;
  out.points.resize(spec.d, count);
  out.provenance = {SampleSource::generator, describe(spec), spec.seed};
  Rng rng(spec.seed);

  switch (spec.kind) {
    case DistributionKind::uniform:
    case DistributionKind::beta:
    case DistributionKind::normal:
      for (Index k = 0; k < count; ++k) out.points.col(k) = draw(spec, rng);
      break;
    case DistributionKind::rosenbrock: {
      MetropolisChain chain(spec.d, spec.rosenbrock_a, spec.rosenbrock_b, spec.mh, rng());
      Index window_steps = 0;
      Index window_accepted = 0;
      auto advance = [&] {
        window_accepted += chain.step().accepted ? 1 : 0;
        if (++window_steps == spec.mh.window) {
          const double rate = static_cast<double>(window_accepted) / static_cast<double>(window_steps);
          if (rate < spec.mh.min_acceptance) {
            throw AcceptanceTooLow("metropolis acceptance rate " + std::to_string(rate) + " over " +
                                   std::to_string(window_steps) + " steps");
          }
          window_steps = 0;
          window_accepted = 0;
        }
      };
      for (Index k = 0; k < spec.mh.burn_in; ++k) advance();
      for (Index k = 0; k < count; ++k) {
        for (Index t = 0; t < spec.mh.thinning; ++t) advance();
        out.points.col(k) = chain.state();
      }
      break;
    }
    case DistributionKind::indicator_region: {
      Index drawn = 0;
      Index window_drawn = 0;
      Index window_hits = 0;
      for (Index k = 0; k < count;) {
        const Eigen::VectorXd x = draw(*spec.base, rng);
        ++drawn;
        ++window_drawn;
        if (region_contains(spec.region, x)) {
          out.points.col(k++) = x;
          ++window_hits;
        }
        if (window_drawn == spec.window) {
          const double rate = static_cast<double>(window_hits) / static_cast<double>(window_drawn);
          if (rate < spec.min_acceptance) {
            throw AcceptanceTooLow("indicator region acceptance rate " + std::to_string(rate) + " over " +
                                   std::to_string(window_drawn) + " draws");
          }
          window_drawn = 0;
          window_hits = 0;
        }
      }
      break;
    }
    case DistributionKind::file: break;
  }
  return out;
}

std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const SampleSet& samples) {
  std::string out;
  for (Index k = 0; k < samples.count(); ++k) {
    for (Index i = 0; i < samples.dim(); ++i) {
      if (i) out += ',';
      out += format_double(samples.points(i, k));
    }
    out += '\n';
  }
  return out;
}

SampleSet parse_csv(const std::string& text) {
  std::vector<double> values;
  Index d = -1;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw ParseError(line_no, "empty row");
    }
    Index fields = 0;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      std::string_view field = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ParseError(line_no, "field " + std::to_string(fields + 1) + " is not a number: '" +
                                      std::string(field) + "'");
      }
      values.push_back(v);
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (d < 0) {
      d = fields;
    } else if (fields != d) {
      throw DimensionInconsistent("line " + std::to_string(line_no) + ": " + std::to_string(fields) +
                                  " columns, earlier rows have " + std::to_string(d));
    }
  }
  if (d < 0) throw ParseError(1, "no samples");
  SampleSet s;
  const Index count = static_cast<Index>(values.size()) / d;
  s.points = Eigen::Map<const Eigen::MatrixXd>(values.data(), d, count);
  return s;
}

SampleSet read_samples(const std::string& path, SampleFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  SampleSet s;
  if (format == SampleFormat::csv) {
    s = parse_csv(data);
  } else {
    auto u32 = [&](std::size_t at) {
      std::uint32_t v = 0;
      for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data[at + static_cast<std::size_t>(i)]);
      return v;
    };
    if (data.size() < 16 || data.compare(0, 8, "IQSAMPLE") != 0) throw ParseError(1, path + ": missing IQSAMPLE header");
    const std::uint32_t d = u32(8);
    const std::uint32_t count = u32(12);
    if (d == 0) throw ParseError(1, path + ": zero dimension");
    const std::size_t expect = 16 + 8ULL * d * count;
    if (data.size() != expect) {
      throw DimensionInconsistent(path + ": " + std::to_string(data.size()) + " bytes, header implies " +
                                  std::to_string(expect));
    }
    s.points.resize(d, count);
    std::size_t at = 16;
    for (std::uint32_t k = 0; k < count; ++k) {
      for (std::uint32_t i = 0; i < d; ++i) {
        std::uint64_t bits = 0;
        for (int b = 7; b >= 0; --b) bits = (bits << 8) | static_cast<unsigned char>(data[at + static_cast<std::size_t>(b)]);
        at += 8;
        s.points(i, k) = std::bit_cast<double>(bits);
      }
    }
  }
  s.provenance = {SampleSource::file, path, 0};
  return s;
}

void write_samples(const SampleSet& samples, const std::string& path, SampleFormat format) {
  std::string data;
  if (format == SampleFormat::csv) {
    data = to_csv(samples);
  } else {
    data = "IQSAMPLE";
    auto put32 = [&](std::uint32_t v) {
      for (int i = 0; i < 4; ++i) data.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put32(static_cast<std::uint32_t>(samples.dim()));
    put32(static_cast<std::uint32_t>(samples.count()));
    data.reserve(data.size() + 8 * static_cast<std::size_t>(samples.points.size()));
    for (Index k = 0; k < samples.count(); ++k) {
      for (Index i = 0; i < samples.dim(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(samples.points(i, k));
        for (int b = 0; b < 8; ++b) data.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write to " + path + " failed");
}

SampleFormat parse_format(const std::string& name) {
  if (name == "csv") return SampleFormat::csv;
  if (name == "bin" || name == "binary" || name == "binary_f64") return SampleFormat::binary_f64;
  throw InvalidSpec("unknown sample format '" + name + "' (csv or bin)");
}

}  // namespace iqr
