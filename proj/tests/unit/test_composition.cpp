// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "modid/composition.hpp"
#include "modid/error.hpp"
#include "modid/io.hpp"

using namespace modid;

namespace {

const HillFunction kActivating{HillKind::activating, 0.797, 0.494, 4.0, 0.443};
const HillFunction kRepressing{HillKind::repressing, 0.261, 0.415, 2.0, 0.192};
const HillFunction kPairActivating{HillKind::activating, 0.326, 0.952, 4.0, 0.176};

std::filesystem::path temp_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / "modid_tests" / name;
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("hill values") {
  CHECK(eval_hill(kActivating, 0.0) == doctest::Approx(0.443).epsilon(1e-15));
  // 40-digit reference evaluations
  CHECK(std::abs(eval_hill(kActivating, 1.0) - 1.195203591300769557) < 1e-14);
  CHECK(std::abs(eval_hill(kRepressing, 1.0) - 0.2303464991789118983) < 1e-14);
  CHECK(std::abs(eval_hill(kPairActivating, 1.0) - 0.3549844830695571228) < 1e-14);
  CHECK(std::abs(eval_hill(kPairActivating, 0.25) - 0.1775430122467848146) < 1e-14);
  CHECK(std::abs(eval_hill(kPairActivating, 0.75) - 0.2666565783385351985) < 1e-14);
  CHECK(std::abs(eval_hill(kRepressing, 0.25) - 0.3835037810203429545) < 1e-14);
  CHECK(std::abs(eval_hill(kRepressing, 0.75) - 0.2531803395828371159) < 1e-14);
}

TEST_CASE("hill errors") {
  HillFunction bad = kActivating;
  bad.half_point = 0.0;
  CHECK_THROWS_AS(eval_hill(bad, 0.5), InvalidParameter);
  bad = kActivating;
  bad.coefficient = -1.0;
  CHECK_THROWS_AS(eval_hill(bad, 0.5), InvalidParameter);
  CHECK_THROWS_AS(eval_hill(kActivating, 1.5), DomainError);
  CHECK_THROWS_AS(eval_hill(kActivating, -0.1), DomainError);
}

TEST_CASE("hill bounds and monotonicity on a grid") {
  for (const auto& h : {kActivating, kRepressing, kPairActivating}) {
    double prev = eval_hill(h, 0.0);
    for (int k = 0; k <= 1000; ++k) {
      const double v = eval_hill(h, k / 1000.0);
      CHECK(v >= h.basal);
      CHECK(v <= h.basal + h.amplitude);
      CHECK(v > 0.0);
      if (h.kind == HillKind::activating) CHECK(v >= prev);
      else CHECK(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("composition map values") {
  const ResourceCompositionMap one({1.0});
  const double y1[] = {1.0};
  CHECK(eval_map(one, y1)[0] == 0.5);

  const ResourceCompositionMap two({0.703, 0.204});
  const double y[] = {eval_hill(kPairActivating, 1.0), eval_hill(kRepressing, 1.0)};
  const auto g = eval_map(two, y);
  CHECK(std::abs(g[0] - 0.1574145048524548607) < 1e-14);
  CHECK(std::abs(g[1] - 0.02964093073223820602) < 1e-14);

  const double zero_first[] = {0.0, 0.7};
  CHECK(eval_map(two, zero_first)[0] == 0.0);
}

TEST_CASE("composition map errors") {
  CHECK_THROWS_AS(ResourceCompositionMap({}), InvalidParameter);
  CHECK_THROWS_AS(ResourceCompositionMap({1.0, 0.0}), InvalidParameter);
  const ResourceCompositionMap two({1.0, 1.0});
  const double neg[] = {-0.1, 1.0};
  CHECK_THROWS_AS(eval_map(two, neg), DomainError);
  const double short_y[] = {1.0};
  CHECK_THROWS_AS(eval_map(two, short_y), ShapeError);
}

TEST_CASE("single-module map is strictly increasing and matches the scalar form") {
  const ResourceCompositionMap map({2.5});
  double prev = -1.0;
  for (int k = 0; k <= 2000; ++k) {
    const double y[] = {k * 0.01};
    const double g = eval_map(map, y)[0];
    CHECK(g > prev);
    CHECK(g == eval_single_module(2.5, y[0]));
    prev = g;
  }
}

TEST_CASE("outputs stay below theta for nonnegative module outputs") {
  const ResourceCompositionMap map({0.703, 0.204});
  for (int a = 0; a <= 50; ++a)
    for (int b = 0; b <= 50; ++b) {
      const double y[] = {a * 0.4, b * 0.4};
      const auto g = eval_map(map, y);
      CHECK(g[0] >= 0.0);
      CHECK(g[0] < 0.703);
      CHECK(g[1] < 0.204);
    }
}

TEST_CASE("uni-modular sampling") {
  const auto set = UniModularInputSet::unit(2);
  const Matrix pts = sample_unimodular(set, 100, 11);
  REQUIRE(pts.rows() == 200);
  for (std::size_t k = 0; k < 100; ++k) {
    CHECK(pts(k, 1) == 1.0);
    CHECK(pts(k, 0) >= 0.0);
    CHECK(pts(k, 0) <= 1.0);
    CHECK(pts(100 + k, 0) == 1.0);
  }
  for (std::size_t k = 0; k < pts.rows(); ++k) CHECK(set.contains(pts.row(k)));
  CHECK(sample_unimodular(set, 100, 11) == pts);
  CHECK_FALSE(sample_unimodular(set, 100, 12) == pts);

  const UniModularInputSet narrow({Interval{0.5, std::nextafter(0.5, 1.0)}}, {0.5});
  const Matrix one = sample_unimodular(narrow, 1, 3);
  CHECK(narrow.intervals()[0].contains(one(0, 0)));
}

TEST_CASE("input set membership and validation") {
  const UniModularInputSet set({Interval{0.0, 1.0}, Interval{0.2, 0.8}}, {1.0, 0.5});
  const double on_first[] = {0.3, 0.5};
  const double on_second[] = {1.0, 0.25};
  const double off[] = {0.3, 0.4};
  CHECK(set.contains(on_first));
  CHECK(set.contains(on_second));
  CHECK_FALSE(set.contains(off));
  CHECK_THROWS_AS(UniModularInputSet({Interval{1.0, 0.0}}, {0.5}), InvalidParameter);
  CHECK_THROWS_AS(UniModularInputSet({Interval{0.0, 1.0}}, {1.0, 1.0}), ShapeError);
}

TEST_CASE("grid lattice includes end points with the last axis fastest") {
  const Interval unit[] = {{0.0, 1.0}, {0.0, 1.0}};
  const Matrix g = grid_inputs(unit, 3);
  REQUIRE(g.rows() == 9);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(1, 1) == 0.5);
  CHECK(g(2, 1) == 1.0);
  CHECK(g(3, 0) == 0.5);
  CHECK(g(8, 0) == 1.0);
  CHECK(g(8, 1) == 1.0);
}

TEST_CASE("dataset generation") {
  const auto truth = two_module_truth();
  const Matrix u = sample_unimodular(truth.input_set, 100, 0);
  const Dataset d = generate_dataset(truth.modules, truth.map(), u, Provenance::unimodular);
  CHECK(d.size() == 200);
  CHECK(d.outputs.cols() == 2);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto y = truth.module_outputs(d.inputs.row(k));
    const auto g = eval_map(truth.map(), y);
    CHECK(d.outputs(k, 0) == doctest::Approx(g[0]).epsilon(1e-15));
    CHECK(d.outputs(k, 1) == doctest::Approx(g[1]).epsilon(1e-15));
  }

  const auto single = single_module_truth();
  const Dataset s = generate_dataset(single.modules, single.map(), sample_uniform({0, 1}, 100, 0));
  CHECK(s.size() == 100);

  const Dataset empty = generate_dataset(truth.modules, truth.map(), Matrix(0, 2));
  CHECK(empty.size() == 0);

  CHECK_THROWS_AS(generate_dataset(truth.modules, truth.map(), Matrix(4, 3, 0.5)), ShapeError);
}

TEST_CASE("dataset csv round trip keeps every bit") {
  const auto truth = two_module_truth();
  const Dataset d = generate_dataset(truth.modules, truth.map(), sample_unimodular(truth.input_set, 7, 5));
  const auto path = temp_dir("composition") / "data.csv";
  write_dataset_csv(path, d);
  const Dataset back = read_dataset_csv(path);
  CHECK(back.inputs == d.inputs);
  CHECK(back.outputs == d.outputs);
  const auto table = read_csv(path);
  CHECK(table.header == std::vector<std::string>{"u_1", "u_2", "Y_1", "Y_2"});
}

TEST_CASE("ground truth json round trip") {
  const auto truth = two_module_truth();
  const auto path = temp_dir("composition") / "truth.json";
  save_truth(path, truth);
  const auto back = load_truth(path);
  CHECK(back.modules == truth.modules);
  CHECK(back.theta == truth.theta);
  CHECK(back.input_set.anchor()[0] == 1.0);
  CHECK(back.seed == truth.seed);
  GroundTruth partial;
  CHECK_THROWS_AS(from_json(json::parse(R"({"theta": [1]})"), partial), ConfigError);
}
