// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "modid/error.hpp"
#include "modid/rre.hpp"
#include "modid/rre_io.hpp"
#include "modid/trainer.hpp"

using namespace modid;

namespace {

Matrix inputs_on_anchor(std::size_t n_modules, std::size_t points) {
  Matrix u(n_modules * points, n_modules, 1.0);
  for (std::size_t i = 0; i < n_modules; ++i)
    for (std::size_t k = 0; k < points; ++k)
      u(i * points + k, i) = static_cast<double>(k) / static_cast<double>(points - 1);
  return u;
}

}  // namespace

TEST_CASE("fluxes from the empty state") {
  const auto p = default_rre_parameters(2);
  const RreState zero(2);
  const double u[] = {0.5, 0.5};
  const auto dx = rre_rhs(zero, p, u);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(dx[3 * s] == 0.0);
    CHECK(dx[3 * s + 1] > 0.0);
    CHECK(dx[3 * s + 2] == 0.0);
  }
  CHECK(dx[1] == doctest::Approx(eval_hill(p.modules[0].regulator, 0.5) * p.modules[0].dna));
  CHECK(dx[7] == doctest::Approx(p.host.a0 * p.host.dna));

  // no free ribosomes: mRNA never binds, so no complex and no protein is made
  RreParameters none = p;
  none.ribosomes = 0.0;
  RreState s(2);
  for (std::size_t i = 0; i < 3; ++i) s.mrna(i) = 4.0;
  const auto d0 = rre_rhs(s, none, u);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d0[3 * i] == 0.0);
    CHECK(d0[3 * i + 2] == 0.0);
  }
  CHECK_THROWS_AS(steady_state(none, u), InvalidParameter);
}

TEST_CASE("state validation") {
  const auto p = default_rre_parameters(1);
  const double u[] = {0.5};
  RreState neg(1);
  neg.protein(0) = -1.0;
  CHECK_THROWS_AS(rre_rhs(neg, p, u), StateError);
  RreState over(1);
  over.complex(0) = 60.0;
  over.complex(over.host()) = 60.0;
  CHECK(over.bound() == 120.0);
  CHECK_THROWS_AS(rre_rhs(over, p, u), StateError);
  CHECK_THROWS_AS(RreState(std::vector<double>(4)), ShapeError);
  const double wrong[] = {0.5, 0.5};
  CHECK_THROWS_AS(rre_rhs(RreState(1), p, wrong), ShapeError);
}

TEST_CASE("default parameters reduce to the composition truths") {
  for (std::size_t n : {1, 2}) {
    const auto p = default_rre_parameters(n);
    const auto truth = n == 1 ? single_module_truth() : two_module_truth();
    const auto r = qssa_reduce(p);
    CHECK(p.separation_factor() >= 1e3);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.theta[i] == doctest::Approx(truth.theta[i]).epsilon(1e-12));
      CHECK(r.f_scale[i] == doctest::Approx(1.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("integrator and Newton steady states agree") {
  const auto p = default_rre_parameters(2);
  for (double a : {0.0, 0.3, 1.0}) {
    const double u[] = {a, 1.0 - a / 2};
    const auto si = steady_state(p, u, SteadyStateMethod::integrate);
    const auto sn = steady_state(p, u, SteadyStateMethod::newton);
    CHECK(steady_state_residual(si, p, u) < 1e-10);
    CHECK(steady_state_residual(sn, p, u) < 1e-10);
    double scale = 0.0;
    for (double v : si.values()) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < si.values().size(); ++k) {
      CHECK(std::abs(si.values()[k] - sn.values()[k]) <= 1e-8 * scale);
      CHECK(si.values()[k] >= 0.0);
    }
    CHECK(si.bound() <= p.ribosomes);
  }
}

TEST_CASE("steady states match the reduced closed form") {
  for (std::size_t n : {1, 2}) {
    const auto p = default_rre_parameters(n);
    const auto r = qssa_reduce(p);
    const Matrix u = inputs_on_anchor(n, 20);
    const Dataset d = rre_dataset(p, u);
    for (std::size_t k = 0; k < u.rows(); ++k) {
      const auto y = r.protein(p, u.row(k));
      for (std::size_t i = 0; i < n; ++i) CHECK(d.outputs(k, i) == doctest::Approx(y[i]).epsilon(0.01));
    }
  }
}

TEST_CASE("a silent module has no protein") {
  auto p = default_rre_parameters(2);
  p.modules[0].regulator.amplitude = 0.0;
  p.modules[0].regulator.basal = 0.0;
  const double u[] = {0.7, 0.2};
  const auto s = steady_state(p, u, SteadyStateMethod::newton);
  // zero up to solver roundoff
  CHECK(s.protein(0) <= 1e-15);
  CHECK(s.mrna(0) <= 1e-12);
  CHECK(s.complex(0) <= 1e-12);
  CHECK(s.protein(1) > 0.0);
}

TEST_CASE("reduced parameters") {
  auto p = default_rre_parameters(1);
  p.host.dna = 0.0;
  const auto r = qssa_reduce(p);
  CHECK(r.host_load == 0.0);
  const auto& m = p.modules[0];
  CHECK(r.f_scale[0] == doctest::Approx(m.dna * m.bind / (m.delta * (m.unbind + m.k0))));

  auto q = default_rre_parameters(2);
  const auto base = qssa_reduce(q);
  q.ribosomes *= 2.0;
  const auto doubled = qssa_reduce(q);
  for (std::size_t i = 0; i < 2; ++i) CHECK(doubled.theta[i] == doctest::Approx(2.0 * base.theta[i]));

  auto z = default_rre_parameters(1);
  z.modules[0].bind = 0.0;
  CHECK_THROWS_AS(qssa_reduce(z), InvalidParameter);
  z = default_rre_parameters(1);
  z.host.bind = 0.0;
  CHECK_THROWS_AS(qssa_reduce(z), InvalidParameter);
  CHECK_THROWS_AS(default_rre_parameters(3), InvalidParameter);

  const auto g = reduced_ground_truth(default_rre_parameters(2));
  const auto rr = qssa_reduce(default_rre_parameters(2));
  const double u[] = {0.4, 1.0};
  const auto want = rr.module_outputs(default_rre_parameters(2), u);
  const auto got = g.module_outputs(u);
  for (std::size_t i = 0; i < 2; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("reduced dynamics are stable") {
  const auto p = default_rre_parameters(2);
  for (double a : {0.0, 0.5, 1.0}) {
    const double u1[] = {a, 1.0};
    const double u2[] = {1.0, a};
    CHECK(reduced_spectral_abscissa(p, u1) < 0.0);
    CHECK(reduced_spectral_abscissa(p, u2) < 0.0);
  }
}

TEST_CASE("separation sweep") {
  const auto p = default_rre_parameters(1);
  const Matrix u = inputs_on_anchor(1, 5);
  const double factors[] = {0.1, 1.0, 1e6};
  const auto rows = separation_sweep(p, factors, u);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2].separation > rows[1].separation);
  CHECK(rows[2].discrepancy < 1e-4);
  for (const auto& r : rows) CHECK(r.discrepancy < 1e-4);

  const auto again = separation_sweep(p, factors, u);
  for (std::size_t j = 0; j < 3; ++j) CHECK(again[j].discrepancy == rows[j].discrepancy);

  const double bad[] = {0.0};
  CHECK_THROWS_AS(separation_sweep(p, bad, u), InvalidParameter);
}

TEST_CASE("rre datasets are deterministic") {
  const auto p = default_rre_parameters(2);
  const Matrix u = inputs_on_anchor(2, 6);
  CHECK(rre_dataset(p, u).outputs == rre_dataset(p, u).outputs);
}

TEST_CASE("parameter json round trip") {
  const auto p = default_rre_parameters(2);
  json j;
  to_json(j, p);
  const auto back = rre_parameters_from_json(j);
  REQUIRE(back.n_modules() == 2);
  CHECK(back.modules[1].regulator == p.modules[1].regulator);
  CHECK(back.modules[0].k0 == p.modules[0].k0);
  CHECK(back.ribosomes == p.ribosomes);
  CHECK_THROWS_AS(rre_parameters_from_json(json::parse(R"({"modules": []})")), ConfigError);
}

TEST_CASE("training on steady-state data identifies the module") {
  const auto p = default_rre_parameters(1);
  const auto truth = reduced_ground_truth(p);
  const Dataset d = rre_dataset(p, sample_uniform({0, 1}, 100, 4), Provenance::unimodular);
  ModularArchitecture arch;
  arch.theta_init = truth.theta[0];
  arch.learn_theta = false;
  TrainOptions o;
  o.epochs = 1000;
  o.learning_rate = 0.1;
  o.log_stride = 0;
  const auto r = train_modular(make_modular_model(1, arch, 4), d, truth, o);
  const auto m = compute_metrics(r.model, d, truth);
  CHECK(m.E_f[0] < 0.05);
  CHECK(m.E_G[0] < 0.05);
}
