// SPDX-License-Identifier: Apache-2.0

#include "modid/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "modid/kernels.hpp"
#include "modid/mlp.hpp"
#include "modid/seed.hpp"

namespace modid {

namespace {

// Smallest |pre-activation| over every hidden unit and sample.
double min_hidden_preactivation(const MlpFunction& net, const Matrix& x) {
  double smallest = INFINITY;
  Matrix a = x;
  for (std::size_t l = 0; l + 1 < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.biases(l);
    Matrix z(net.fan_out(l), a.cols());
    for (std::size_t o = 0; o < z.rows(); ++o)
      for (std::size_t s = 0; s < a.cols(); ++s) {
        double v = b[o];
        for (std::size_t i = 0; i < a.rows(); ++i) v += w[o * a.rows() + i] * a(i, s);
        smallest = std::min(smallest, std::abs(v));
        z(o, s) = std::max(v, 0.0);
      }
    a = std::move(z);
  }
  return smallest;
}

double weighted_output(const MlpFunction& net, const Matrix& x, const Matrix& upstream) {
  const Matrix out = kernels::serial::forward_batch(net, x);
  double total = 0.0;
  for (std::size_t k = 0; k < out.data().size(); ++k) total += out.data()[k] * upstream.data()[k];
  return total;
}

}  // namespace

GradCheckReport grad_check(std::size_t instances, std::uint64_t seed, double kink_margin,
                           double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t t = 0; t < instances; ++t) {
    std::mt19937_64 rng(derive_seed(seed, t));
    const auto pick = [&](int lo, int hi) {
      return static_cast<std::size_t>(std::uniform_int_distribution<int>(lo, hi)(rng));
    };
    for (;;) {
      std::vector<std::size_t> sizes{pick(1, 3)};
      const std::size_t depth = pick(1, 3);
      for (std::size_t l = 0; l < depth; ++l) sizes.push_back(pick(2, 8));
      sizes.push_back(pick(1, 3));
      const auto transform = pick(0, 1) ? OutputTransform::softplus : OutputTransform::identity;
      MlpFunction net = init_kaiming(sizes, rng(), transform);
      for (std::size_t l = 0; l < net.num_layers(); ++l)
        for (double& b : net.biases(l)) b = 0.1 * normal(rng);

      const std::size_t batch = pick(1, 40);
      Matrix x(sizes.front(), batch), up(sizes.back(), batch);
      for (double& v : x.data()) v = normal(rng);
      for (double& v : up.data()) v = normal(rng);

      if (min_hidden_preactivation(net, x) < kink_margin) {
        ++report.resampled;
        continue;
      }

      ForwardTape tape;
      forward_batch(net, x, &tape);
      const auto g = backward(net, tape, up);

      std::vector<double> fd(g.size());
      auto params = net.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        const double h = 1e-6 * std::max(1.0, std::abs(saved));
        params[p] = saved + h;
        const double plus = weighted_output(net, x, up);
        params[p] = saved - h;
        const double minus = weighted_output(net, x, up);
        params[p] = saved;
        fd[p] = (plus - minus) / (2.0 * h);
      }
      double diff = 0.0, scale = 0.0;
      for (std::size_t p = 0; p < g.size(); ++p) {
        diff = std::max(diff, std::abs(g[p] - fd[p]));
        scale = std::max(scale, std::abs(fd[p]));
      }
      report.max_relative_error = std::max(report.max_relative_error, diff / std::max(scale, 1e-300));
      report.parameters_checked += g.size();
      ++report.instances;
      break;
    }
  }
  return report;
}

}  // namespace modid
