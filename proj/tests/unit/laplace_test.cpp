/*
 * Copyright 2026 The ustack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include "doctest.h"
#include "ustack/errors.hpp"
#include "ustack/laplace/head.hpp"
#include "ustack/laplace/laplace.hpp"
#include "ustack/numeric/activations.hpp"
#include "ustack/numeric/gradcheck.hpp"
#include "ustack/numeric/random.hpp"
#include "ustack/numeric/sgd.hpp"

using namespace ustack;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t key, double lo = -1.0, double hi = 1.0) {
  KeyedRng rng(key);
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("loss weight constants") {
  CHECK(LossWeights::dynamic_defaults().w1 == 0.25);
  CHECK(LossWeights::dynamic_defaults().w2 == 0.6);
  CHECK(LossWeights::static_defaults().w1 == 0.0);
  CHECK(LossWeights::static_defaults().w2 == 1.0);
  CHECK(kScaleEpsilon == 1e-6);
  CHECK_THROWS_AS(LossWeights({0.0, 0.0}).validate(), ValidationError);
}

TEST_CASE("head forward examples") {
  HeadConfig cfg;
  cfg.d_h = 8;
  LaplaceHead head("head", cfg);  // zero weights and biases
  const VertexParamSet v = head.head_forward(std::vector<double>(8, 0.3));
  REQUIRE(v.size() == kDynamicVertexCount);
  const double b0 = std::log(2.0) + 1e-6;
  for (const LaplaceVertex& p : v.vertices) {
    CHECK(p.mu_x == 0.0);
    CHECK(p.mu_y == 0.0);
    CHECK(p.b_x == doctest::Approx(b0).epsilon(1e-15));
    CHECK(p.b_y == doctest::Approx(b0).epsilon(1e-15));
  }

  // Scale logits driven through the output bias: b_x column gets -40.
  Matrix& bias = head.mlp().layers().back().bias().value;
  bias(0, 1) = -40.0;
  const VertexParamSet low = head.head_forward(std::vector<double>(8, 0.0));
  CHECK(low.vertices[0].b_x >= 1e-6);
  CHECK(std::abs(low.vertices[0].b_x - (1e-6 + std::exp(-40.0))) < 1e-20);
  CHECK_THROWS_AS(head.head_forward(std::vector<double>(7, 0.0)), ShapeError);
}

TEST_CASE("laplace nll examples") {
  CHECK(laplace_nll(0.4, 0.4, 1.0).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(laplace_nll(1.0, 0.0, 0.5).value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(laplace_nll(1.0, 0.0, 1.0).d_b == 0.0);
  CHECK(laplace_nll(2.0, 2.0, 1.0).d_mu == 0.0);
  CHECK_THROWS_AS(laplace_nll(0.0, 0.0, 1e-7), ContractError);
}

TEST_CASE("nll is minimized at b = |x - mu| (line search over ln b)") {
  KeyedRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = rng.uniform(-5.0, 5.0);
    const double mu = rng.uniform(-5.0, 5.0);
    const double r = std::abs(x - mu);
    if (r < 1e-3) continue;
    // Golden-section search on ln b.
    const auto f = [&](double lb) { return laplace_nll(x, mu, std::exp(lb)).value; };
    double lo = std::log(1e-4), hi = std::log(100.0);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double a = hi - g * (hi - lo);
      const double b = lo + g * (hi - lo);
      if (f(a) < f(b)) hi = b;
      else lo = a;
    }
    const double b_hat = std::exp(0.5 * (lo + hi));
    CHECK(std::abs(b_hat - r) < 1e-6 * std::max(1.0, r));
    // Convexity in ln b: midpoint value below the chord.
    const double l1 = std::log(r) - 1.3, l2 = std::log(r) + 0.7;
    CHECK(f(0.5 * (l1 + l2)) < 0.5 * (f(l1) + f(l2)));
  }
}

TEST_CASE("combined loss examples") {
  // One vertex: |mu - t| = 1 on both axes and NLL = 2 on both axes.
  VertexParamSet pred{{{1.0, 0.5, 1.0, 0.5}}};
  VertexSet target{{{0.0, 0.0}}, ElementKind::kDynamic};
  const CombinedLossResult r = combined_loss(pred, target, LossWeights::dynamic_defaults());
  CHECK(r.l1 == doctest::Approx(1.0));
  CHECK(r.nll == doctest::Approx(2.0));
  CHECK(r.value == doctest::Approx(1.45).epsilon(1e-15));

  const CombinedLossResult s = combined_loss(pred, target, LossWeights::static_defaults());
  CHECK(s.value == s.nll);

  VertexParamSet exact{{{3.0, 1.0, -2.0, 1.0}, {0.5, 1.0, 0.5, 1.0}}};
  VertexSet t2{{{3.0, -2.0}, {0.5, 0.5}}, ElementKind::kStatic};
  CHECK(combined_loss(exact, t2, LossWeights::dynamic_defaults()).value ==
        doctest::Approx(0.6 * std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(combined_loss(pred, t2, LossWeights::dynamic_defaults()), ShapeError);
}

TEST_CASE("sampling and coverage radius examples") {
  CHECK(laplace_sample(1.5, 2.0, 0.0) == 1.5);
  for (double u : {-0.49, -0.1, 0.2, 0.4999}) CHECK(laplace_sample(-0.7, 0.0, u) == -0.7);
  CHECK(coverage_radius(1.0, 0.9) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  CHECK(coverage_radius(0.5, 0.5) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(coverage_radius(3.0, 1e-12) < 1e-10);
}

TEST_CASE("empirical coverage of the model's own samples") {
  KeyedRng rng(31);
  for (double p : {0.5, 0.9}) {
    std::size_t inside = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = rng.uniform(-3.0, 3.0);
      const double b = rng.uniform(0.05, 2.0);
      const double x = laplace_sample(mu, b, rng.centered_open());
      if (std::abs(x - mu) <= coverage_radius(b, p)) ++inside;
    }
    CHECK(std::abs(static_cast<double>(inside) / n - p) <= 0.03);
  }
}

TEST_CASE("training a scale alone recovers the true Laplace scale") {
  for (double b_true : {0.1, 0.3, 1.0}) {
    KeyedRng rng(derive_key(17, {static_cast<std::uint64_t>(b_true * 1000)}));
    std::vector<double> residuals(10000);
    for (double& r : residuals) r = laplace_sample(0.0, b_true, rng.centered_open());
    ParamTensor logit("logit", 1, 1);
    Sgd opt(ParamList{&logit}, 0.05, 0.9);
    for (int step = 0; step < 1500; ++step) {
      const double b = softplus(logit.value(0, 0), kScaleEpsilon);
      double d_b = 0.0;
      for (double r : residuals) d_b += laplace_nll(r, 0.0, b).d_b;
      logit.grad(0, 0) = d_b / residuals.size() * sigmoid(logit.value(0, 0));
      opt.step();
    }
    const double b_hat = softplus(logit.value(0, 0), kScaleEpsilon);
    CHECK(std::abs(b_hat - b_true) / b_true < 0.05);
  }
}

TEST_CASE("combined loss gradient through the head matches finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    HeadConfig cfg;
    cfg.d_h = 6;
    cfg.hidden_sizes = {7};
    LaplaceHead head("head", cfg);
    head.init(seed);
    ParamList params;
    head.collect(params);
    zero_grads(params);
    const Matrix q = random_matrix(3, 6, seed + 1);
    const Matrix ref = random_matrix(3, 10, seed + 2, -3.0, 3.0);
    const Matrix tgt = random_matrix(3, 10, seed + 3, -3.0, 3.0);
    const LossWeights w = LossWeights::dynamic_defaults();
    HeadResult r = head.forward(q, &ref);
    const MatrixLossResult l = combined_loss(r.params, tgt, w);
    (void)head.backward(r, l.d_params);
    const auto loss = [&] { return combined_loss(head.forward(q, &ref).params, tgt, w).value; };
    CHECK(check_param_gradients("head", loss, params, 1e-6).passed(1e-5));
  }
}

TEST_CASE("predicted scales respect the floor for extreme logits") {
  HeadConfig cfg;
  cfg.d_h = 4;
  cfg.hidden_sizes = {};
  LaplaceHead head("head", cfg);
  head.mlp().layers().back().bias().value.fill(-1e6);
  const HeadResult r = head.forward(Matrix(2, 4, 0.0));
  for (std::size_t row = 0; row < 2; ++row) {
    for (std::size_t v = 0; v < cfg.k; ++v) {
      CHECK(r.params(row, 4 * v + 1) >= kScaleEpsilon);
      CHECK(r.params(row, 4 * v + 3) >= kScaleEpsilon);
    }
  }
}
