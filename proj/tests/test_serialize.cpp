#include <doctest.h>

#include <filesystem>

#include "iqr/serialize.hpp"

using namespace iqr;

TEST_CASE("rule JSON round trip is bit exact") {
  const SampleSet s = generate(DistributionSpec::normal({0.0, 0.0}, {1.0, 1.0}, 1), 400);
  const QuadratureRule r = construct_fixed_rule(s, BasisSpec::legendre(2, 15, bounding_box(s.points)));
  const Json j = to_json(r);
  for (const char* key : {"spec", "K", "nodes", "weights", "source_indices", "fixed_mask"}) CHECK(j.contains(key));

  const QuadratureRule back = rule_from_json(parse_json(j.dump(2)));
  CHECK(back.spec == r.spec);
  CHECK(back.K == r.K);
  CHECK((back.nodes.array() == r.nodes.array()).all());
  CHECK((back.weights.array() == r.weights.array()).all());
  CHECK(back.source_indices == r.source_indices);
  CHECK(back.fixed_mask == r.fixed_mask);
}

TEST_CASE("basis JSON") {
  const BasisSpec b = BasisSpec::legendre(2, 6, {{0.125, 1.0}, {-3.0, 7.0}});
  const Json j = to_json(b);
  CHECK(j["d"] == 2);
  CHECK(j["size"] == 6);
  CHECK(j["family"] == "legendre");
  CHECK(j["domain"][1][0] == -3.0);
  CHECK(basis_from_json(j) == b);
  CHECK_THROWS_AS(basis_from_json(parse_json(R"({"d":2,"size":3,"family":"chebyshev"})")), InvalidSpec);
  CHECK_THROWS_AS(basis_from_json(parse_json(R"({"d":0,"size":3,"family":"monomial"})")), InvalidSpec);
}

TEST_CASE("distribution JSON round trip") {
  std::vector<DistributionSpec> specs = {
      DistributionSpec::uniform({0.0, -1.0}, {1.0, 2.0}, 5),
      DistributionSpec::beta({2.0}, {3.0}, {0.0}, {4.0}, 6),
      DistributionSpec::normal({0.0}, {2.0}, 7),
      DistributionSpec::rosenbrock(3, 8),
      DistributionSpec::indicator(DistributionSpec::uniform({0.0, 0.0}, {1.0, 1.0}),
                                  {RegionShape{RegionShape::Type::box, {0.0, 0.0}, {0.5, 0.5}, {}},
                                   RegionShape{RegionShape::Type::polygon, {}, {}, {{{0, 0}}, {{1, 0}}, {{0, 1}}}}},
                                  9),
      DistributionSpec::file("samples.bin", SampleFormat::binary_f64)};
  for (const auto& s : specs) {
    const Json j = to_json(s);
    const DistributionSpec back = distribution_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.kind == s.kind);
    CHECK(back.seed == s.seed);
  }
}

TEST_CASE("distribution JSON errors") {
  CHECK_THROWS_AS(distribution_from_json(parse_json(R"({"kind":"cauchy"})")), InvalidSpec);
  CHECK_THROWS_AS(distribution_from_json(parse_json(R"({"kind":"uniform","lo":[0]})")), InvalidSpec);
  CHECK_THROWS_AS(distribution_from_json(parse_json(R"({"kind":"uniform","lo":"x","hi":[1]})")), InvalidSpec);
  CHECK_THROWS_AS(distribution_from_json(parse_json(R"({"kind":"beta","a":[-1],"b":[1]})")), InvalidSpec);
  CHECK_THROWS_AS(distribution_from_json(parse_json(R"({"kind":"uniform","d":3,"lo":[0],"hi":[1]})")), InvalidSpec);
  CHECK_THROWS_AS(parse_json("{not json"), InvalidSpec);
}

TEST_CASE("experiment config JSON") {
  const Json j = parse_json(R"({"distribution":{"kind":"rosenbrock","d":2},"repetitions":3,"K_max":500,
                                "schedule":[4,8],"seed":11,"families":["oscillatory","c0"]})");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.d == 2);
  CHECK(c.repetitions == 3);
  CHECK(c.schedule == std::vector<Index>{4, 8});
  CHECK(c.families.size() == 2);
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  CHECK_THROWS_AS(config_from_json(parse_json(R"({"distribution":{"kind":"rosenbrock","d":2},"schedule":[8,4]})")),
                  InvalidSpec);
  CHECK_THROWS_AS(config_from_json(parse_json(R"({"distribution":{"kind":"rosenbrock","d":2},"K_max":10,
                                                  "schedule":[4,16]})")),
                  InvalidSpec);
  CHECK_THROWS_AS(config_from_json(parse_json(R"({"distribution":{"kind":"rosenbrock","d":2},"repetitions":0})")),
                  InvalidSpec);
}

TEST_CASE("text files") {
  const std::string p = (std::filesystem::temp_directory_path() / "iqr_test_serialize.txt").string();
  write_text(p, "hello\n");
  CHECK(read_text(p) == "hello\n");
  std::filesystem::remove(p);
  CHECK_THROWS_AS(read_text(p), IoError);
}
