// SPDX-License-Identifier: Apache-2.0

#include "modid/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "modid/error.hpp"
#include "modid/seed.hpp"

namespace modid {

namespace {

double checked_div(double num, double den, const char* what) {
  if (std::abs(den) < kDegenerateThreshold)
    throw SingularityError(std::string("zero denominator in ") + what);
  return num / den;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

std::array<double, 8> forward_F(const RecoveredSystem& x) {
  const auto [t1, t2] = x.theta;
  const double a1 = x.f1_at[2], a2 = x.f2_at[2];
  std::array<double, 8> g{};
  for (int k = 0; k < 2; ++k) {
    const double f1 = x.f1_at[k], f2 = x.f2_at[k];
    const double s1 = 1.0 + f1 + a2;  // module 1 probed, module 2 at 1
    const double s2 = 1.0 + a1 + f2;  // module 2 probed, module 1 at 1
    if (s1 == 0.0 || s2 == 0.0) throw SingularityError("probe map denominator is zero");
    g[4 * k + 0] = t1 * f1 / s1;
    g[4 * k + 1] = t2 * a2 / s1;
    g[4 * k + 2] = t1 * a1 / s2;
    g[4 * k + 3] = t2 * f2 / s2;
  }
  return g;
}

RecoveredSystem true_system(const GroundTruth& truth, std::array<double, 2> probes1,
                            std::array<double, 2> probes2) {
  if (truth.n_modules() != 2) throw ShapeError("probe recovery needs a two-module system");
  RecoveredSystem x;
  x.theta = {truth.theta[0], truth.theta[1]};
  for (int k = 0; k < 2; ++k) {
    x.f1_at[k] = eval_hill(truth.modules[0], probes1[k]);
    x.f2_at[k] = eval_hill(truth.modules[1], probes2[k]);
  }
  x.f1_at[2] = eval_hill(truth.modules[0], 1.0);
  x.f2_at[2] = eval_hill(truth.modules[1], 1.0);
  return x;
}

ProbeMeasurements measure_probes(const GroundTruth& truth, std::array<double, 2> probes1,
                                 std::array<double, 2> probes2) {
  ProbeMeasurements m;
  m.probes1 = probes1;
  m.probes2 = probes2;
  m.g = forward_F(true_system(truth, probes1, probes2));
  return m;
}

RecoveredSystem recover(const ProbeMeasurements& m) {
  for (double v : m.g)
    if (!std::isfinite(v)) throw DomainError("probe measurements must be finite");
  if (m.probes1[0] == m.probes1[1]) throw DegenerateProbe(1, "module 1 probes coincide");
  if (m.probes2[0] == m.probes2[1]) throw DegenerateProbe(2, "module 2 probes coincide");

  const double g11_1 = m.g[0], g21_1 = m.g[1], g12_1 = m.g[2], g22_1 = m.g[3];
  const double g11_2 = m.g[4], g21_2 = m.g[5], g12_2 = m.g[6], g22_2 = m.g[7];

  const double r1_1 = checked_div(g11_1, g21_1, "G11/G21");
  const double r1_2 = checked_div(g11_2, g21_2, "G11/G21");
  const double r2_1 = checked_div(g22_1, g12_1, "G22/G12");
  const double r2_2 = checked_div(g22_2, g12_2, "G22/G12");

  const double d1 = 1.0 / g21_1 - 1.0 / g21_2;
  if (std::abs(d1) < kDegenerateThreshold)
    throw DegenerateProbe(1, "module 1 responds identically at both probes");
  const double d2 = 1.0 / g12_1 - 1.0 / g12_2;
  if (std::abs(d2) < kDegenerateThreshold)
    throw DegenerateProbe(2, "module 2 responds identically at both probes");

  RecoveredSystem x;
  const double t1 = (r1_1 - r1_2) / d1;
  const double t2 = (r2_1 - r2_2) / d2;
  x.theta = {t1, t2};

  // theta2 / G21 = 1/f2(1) + 1 + (theta2/theta1) G11/G21, and symmetrically
  const double inv_a2 = t2 / g21_1 - 1.0 - checked_div(t2, t1, "theta2/theta1") * r1_1;
  const double inv_a1 = t1 / g12_1 - 1.0 - checked_div(t1, t2, "theta1/theta2") * r2_1;
  const double a2 = checked_div(1.0, inv_a2, "1/f2(1)");
  const double a1 = checked_div(1.0, inv_a1, "1/f1(1)");

  x.f1_at = {(t2 / t1) * a2 * r1_1, (t2 / t1) * a2 * r1_2, a1};
  x.f2_at = {(t1 / t2) * a1 * r2_1, (t1 / t2) * a1 * r2_2, a2};
  return x;
}

ScalarFunction counterexample_pair(double theta, double theta_hat, ScalarFunction f,
                                   std::size_t check_points) {
  if (!(theta > 0.0) || !(theta_hat > 0.0))
    throw InvalidParameter("counterexample gains must be positive");
  if (!f) throw InvalidParameter("counterexample needs a module function");
  const double c = (theta_hat - theta) / theta_hat;
  const std::size_t n = std::max<std::size_t>(check_points, 2);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n - 1);
    const double den = 1.0 + c * f(u);
    if (!(den > 0.0))
      throw InvalidPair("construction denominator is not positive at u = " + std::to_string(u));
  }
  const double ratio = theta / theta_hat;
  return [ratio, c, f = std::move(f)](double u) {
    const double v = f(u);
    return ratio * v / (1.0 + c * v);
  };
}

InjectivityReport injectivity_probe(std::size_t trials, std::uint64_t seed,
                                    double roundtrip_tol) {
  if (trials == 0) throw InvalidParameter("injectivity probe needs at least one trial");

  const auto draw = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> theta(0.1, 2.0), fv(0.05, 3.0);
    RecoveredSystem x;
    x.theta = {theta(rng), theta(rng)};
    for (auto* f : {&x.f1_at, &x.f2_at}) {
      do {
        for (double& v : *f) v = fv(rng);
      } while (std::abs((*f)[0] - (*f)[1]) < 0.05);
    }
    return x;
  };
  const auto flat = [](const RecoveredSystem& x) {
    return std::array<double, 8>{x.f1_at[0], x.f1_at[1], x.f1_at[2], x.f2_at[0],
                                 x.f2_at[1], x.f2_at[2], x.theta[0],  x.theta[1]};
  };

  std::vector<double> roundtrip(trials), distance(trials);
  std::vector<char> bad(trials, 0);
  const auto n = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>(t);
    std::mt19937_64 rng(derive_seed(seed, i));
    const RecoveredSystem x = draw(rng);
    const RecoveredSystem xp = draw(rng);
    const auto gx = forward_F(x), gxp = forward_F(xp);
    double dist = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      dist = std::max(dist, std::abs(gx[k] - gxp[k]));
      scale = std::max({scale, std::abs(gx[k]), std::abs(gxp[k])});
    }
    distance[i] = dist / scale;

    double err = 0.0;
    try {
      ProbeMeasurements m;
      m.g = gx;
      const auto got = flat(recover(m)), want = flat(x);
      for (std::size_t k = 0; k < 8; ++k) err = std::max(err, rel_err(got[k], want[k]));
    } catch (const Error&) {
      err = INFINITY;
    }
    roundtrip[i] = err;
    const auto fx = flat(x), fxp = flat(xp);
    bad[i] = (err > roundtrip_tol) || (fx != fxp && distance[i] <= 1e-12);
  }

  InjectivityReport r;
  r.trials = trials;
  r.min_image_distance = INFINITY;
  for (std::size_t i = 0; i < trials; ++i) {
    r.violations += bad[i] ? 1 : 0;
    r.max_roundtrip_error = std::max(r.max_roundtrip_error, roundtrip[i]);
    r.min_image_distance = std::min(r.min_image_distance, distance[i]);
  }
  return r;
}

}  // namespace modid
