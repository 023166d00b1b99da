// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "modid/closed_form.hpp"
#include "modid/error.hpp"

using namespace modid;

namespace {

double max_rel(const RecoveredSystem& a, const RecoveredSystem& b) {
  double e = 0.0;
  for (int i = 0; i < 2; ++i) e = std::max(e, std::abs(a.theta[i] - b.theta[i]) / std::abs(b.theta[i]));
  for (int k = 0; k < 3; ++k) {
    e = std::max(e, std::abs(a.f1_at[k] - b.f1_at[k]) / std::abs(b.f1_at[k]));
    e = std::max(e, std::abs(a.f2_at[k] - b.f2_at[k]) / std::abs(b.f2_at[k]));
  }
  return e;
}

}  // namespace

TEST_CASE("probe map on hand-checkable inputs") {
  RecoveredSystem ones;
  ones.theta = {1.0, 1.0};
  ones.f1_at = {1.0, 1.0, 1.0};
  ones.f2_at = {1.0, 1.0, 1.0};
  for (double g : forward_F(ones)) CHECK(g == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  RecoveredSystem x = ones;
  x.theta = {2.0, 0.0};
  const auto g = forward_F(x);
  for (int k = 0; k < 2; ++k) {
    CHECK(g[4 * k + 1] == 0.0);
    CHECK(g[4 * k + 3] == 0.0);
    CHECK(g[4 * k] == doctest::Approx(2.0 / 3.0));
  }

  RecoveredSystem sing = ones;
  sing.f1_at = {-1.5, 1.0, 1.0};
  sing.f2_at = {1.0, 1.0, 0.5};
  CHECK_THROWS_AS(forward_F(sing), SingularityError);
}

TEST_CASE("probe map agrees with the composition map") {
  const auto truth = two_module_truth();
  const auto m = measure_probes(truth, {0.25, 0.75}, {0.1, 0.6});
  for (int k = 0; k < 2; ++k) {
    const double u1[] = {m.probes1[k], 1.0};
    const auto a = eval_map(truth.map(), truth.module_outputs(u1));
    CHECK(std::abs(m.g[4 * k + 0] - a[0]) <= 1e-14);
    CHECK(std::abs(m.g[4 * k + 1] - a[1]) <= 1e-14);
    const double u2[] = {1.0, m.probes2[k]};
    const auto b = eval_map(truth.map(), truth.module_outputs(u2));
    CHECK(std::abs(m.g[4 * k + 2] - b[0]) <= 1e-14);
    CHECK(std::abs(m.g[4 * k + 3] - b[1]) <= 1e-14);
  }
}

TEST_CASE("recovery of the two-module system") {
  const auto truth = two_module_truth();
  const auto x = recover(measure_probes(truth, {0.25, 0.75}, {0.25, 0.75}));
  CHECK(std::abs(x.theta[0] - 0.703) <= 1e-9 * 0.703);
  CHECK(std::abs(x.theta[1] - 0.204) <= 1e-9 * 0.204);
  // 40-digit reference values of the module functions
  CHECK(std::abs(x.f1_at[0] - 0.1775430122467848146) <= 1e-9);
  CHECK(std::abs(x.f1_at[1] - 0.2666565783385351985) <= 1e-9);
  CHECK(std::abs(x.f1_at[2] - 0.3549844830695571228) <= 1e-9);
  CHECK(std::abs(x.f2_at[0] - 0.3835037810203429545) <= 1e-9);
  CHECK(std::abs(x.f2_at[1] - 0.2531803395828371159) <= 1e-9);
  CHECK(std::abs(x.f2_at[2] - 0.2303464991789118983) <= 1e-9);

  // two different probe pairs agree on the shared unknowns
  const auto y = recover(measure_probes(truth, {0.1, 0.9}, {0.4, 0.55}));
  CHECK(y.theta[0] == doctest::Approx(x.theta[0]).epsilon(1e-9));
  CHECK(y.theta[1] == doctest::Approx(x.theta[1]).epsilon(1e-9));
  CHECK(y.f1_at[2] == doctest::Approx(x.f1_at[2]).epsilon(1e-9));
  CHECK(y.f2_at[2] == doctest::Approx(x.f2_at[2]).epsilon(1e-9));
}

TEST_CASE("recovery round trip on random systems") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> th(0.1, 2.0), fv(0.05, 3.0);
  for (int t = 0; t < 1000; ++t) {
    RecoveredSystem x;
    x.theta = {th(rng), th(rng)};
    for (auto* f : {&x.f1_at, &x.f2_at}) do {
        for (double& v : *f) v = fv(rng);
      } while (std::abs((*f)[0] - (*f)[1]) < 0.05);
    ProbeMeasurements m;
    m.g = forward_F(x);
    CHECK(max_rel(recover(m), x) <= 1e-9);
  }
  const auto r = injectivity_probe(1000, 5);
  CHECK(r.trials == 1000);
  CHECK(r.violations == 0);
  CHECK(r.max_roundtrip_error <= 1e-9);
  CHECK(r.min_image_distance > 0.0);
}

TEST_CASE("degenerate probes name the module") {
  auto truth = two_module_truth();
  truth.modules[0].amplitude = 0.0;  // module 1 is constant
  try {
    (void)recover(measure_probes(truth, {0.25, 0.75}, {0.25, 0.75}));
    FAIL("expected DegenerateProbe");
  } catch (const DegenerateProbe& e) {
    CHECK(e.module() == 1);
  }
  try {
    (void)recover(measure_probes(two_module_truth(), {0.25, 0.75}, {0.5, 0.5}));
    FAIL("expected DegenerateProbe");
  } catch (const DegenerateProbe& e) {
    CHECK(e.module() == 2);
  }
  ProbeMeasurements bad = measure_probes(two_module_truth(), {0.25, 0.75}, {0.25, 0.75});
  bad.g[3] = NAN;
  CHECK_THROWS_AS(recover(bad), DomainError);
}

TEST_CASE("counterexample pair") {
  const ScalarFunction half = [](double) { return 0.5; };
  const auto fhat = counterexample_pair(5.0, 2.0, half);
  CHECK(fhat(0.3) == doctest::Approx(5.0));
  CHECK(2.0 * fhat(0.3) / (1.0 + fhat(0.3)) == doctest::Approx(5.0 / 3.0));
  CHECK(5.0 * 0.5 / 1.5 == doctest::Approx(5.0 / 3.0));

  const auto f = [](double u) { return eval_hill(two_module_truth().modules[0], u); };
  const auto same = counterexample_pair(0.703, 0.703, f);
  for (int k = 0; k <= 100; ++k) CHECK(same(k / 100.0) == doctest::Approx(f(k / 100.0)).epsilon(1e-15));

  const auto zero = counterexample_pair(3.0, 1.0, [](double) { return 0.0; });
  CHECK(zero(0.7) == 0.0);

  // equal composed outputs at 1000 points, for both theta_hat > theta and theta_hat < theta
  for (double theta_hat : {2.0, 0.4}) {
    const auto g = counterexample_pair(0.703, theta_hat, f);
    double gap = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double u = k / 999.0;
      const double G = 0.703 * f(u) / (1.0 + f(u));
      const double Ghat = theta_hat * g(u) / (1.0 + g(u));
      gap = std::max(gap, std::abs(G - Ghat));
    }
    CHECK(gap <= 1e-12);
  }
}

TEST_CASE("counterexample errors") {
  const ScalarFunction big = [](double) { return 10.0; };
  CHECK_THROWS_AS(counterexample_pair(5.0, 2.0, big), InvalidPair);
  CHECK_THROWS_AS(counterexample_pair(0.0, 2.0, big), InvalidParameter);
  CHECK_THROWS_AS(counterexample_pair(1.0, -2.0, big), InvalidParameter);
}

TEST_CASE("the theta-normalized denominator does not preserve outputs") {
  // c = (theta_hat - theta) / theta instead of / theta_hat
  const double theta = 5.0, theta_hat = 2.0, f = 0.1;
  const double c = (theta_hat - theta) / theta;
  const double fhat = (theta / theta_hat) * f / (1.0 + c * f);
  const double G = theta * f / (1.0 + f);
  const double Ghat = theta_hat * fhat / (1.0 + fhat);
  CHECK(std::abs(G - Ghat) > 1e-3);
}
