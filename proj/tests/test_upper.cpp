#include "bilevel/upper.hpp"

#include "bilevel/types.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cmath>

using namespace bilevel;

TEST_SUITE("upper") {

TEST_CASE("inertial proximal step arithmetic") {
  Vec theta(2), prev(2), grad(2);
  theta << 1.0, -0.5;
  prev << 0.8, -0.3;
  grad << 2.0, 1.0;
  const double rate = 0.1, beta = 0.5;
  const Vec step = ipiano_step(theta, prev, grad, rate, beta, SimpleFunction::zero());
  CHECK(step(0) == doctest::Approx(1.0 - 0.2 + 0.5 * 0.2).epsilon(1e-15));
  CHECK(step(1) == doctest::Approx(-0.5 - 0.1 + 0.5 * (-0.2)).epsilon(1e-15));

  // The simple-function prox projects the step.
  const Vec clipped = ipiano_step(theta, prev, grad, rate, beta, SimpleFunction::nonnegative());
  CHECK(clipped(1) == 0.0);
  CHECK(clipped(0) == step(0));
}

TEST_CASE("adaptive step normalizes the first update to the sign direction") {
  AdamConfig cfg;
  cfg.rate = 0.01;
  AdamState st = AdamState::init(2);
  Vec theta(2), grad(2);
  theta << 0.3, -0.2;
  grad << 50.0, -0.003;
  const Vec next = adam_step(st, theta, grad, cfg);
  // Bias correction makes the first step rate * g/(|g| + eps) regardless of
  // gradient magnitude.
  for (int i = 0; i < 2; ++i) {
    const double expect =
        theta(i) - cfg.rate * grad(i) / (std::abs(grad(i)) + cfg.eps);
    CHECK(next(i) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(st.t == 1);
}

TEST_CASE("outer loop evaluates once per iteration and logs the run") {
  Vec a(2);
  a << 0.4, -0.7;
  int calls = 0;
  const auto evaluate = [&](const Vec& th) {
    ++calls;
    return std::make_pair(0.5 * (th - a).squaredNorm(), Vec(th - a));
  };

  OuterConfig cfg;
  cfg.method = OuterMethod::GradientDescent;
  cfg.iterations = 40;
  cfg.rate = 0.5;
  const OuterResult res = run_outer(evaluate, Vec::Zero(2), cfg);

  CHECK(calls == 40);
  REQUIRE(res.rows.size() == 40);
  CHECK(res.rows.front().iter == 0);
  CHECK(res.rows.back().iter == 39);
  CHECK((res.theta - a).lpNorm<Eigen::Infinity>() < 1e-10);
  for (size_t k = 1; k < res.rows.size(); ++k) {
    CHECK(res.rows[k].loss <= res.rows[k - 1].loss);
    CHECK(res.rows[k].seconds >= res.rows[k - 1].seconds);
  }
}

TEST_CASE("plain descent is the zero-inertia special case, bit for bit") {
  Vec a(2);
  a << 1.0, 2.0;
  const auto evaluate = [&](const Vec& th) {
    return std::make_pair(0.5 * (th - a).squaredNorm(), Vec(th - a));
  };
  OuterConfig cfg;
  cfg.method = OuterMethod::GradientDescent;
  cfg.iterations = 7;
  cfg.rate = 0.3;
  const OuterResult res = run_outer(evaluate, Vec::Zero(2), cfg);

  Vec theta = Vec::Zero(2);
  Vec prev = theta;
  for (int k = 0; k < 7; ++k) {
    const Vec g = theta - a;
    const Vec next = ipiano_step(theta, prev, g, 0.3, 0.0, SimpleFunction::zero());
    prev = theta;
    theta = next;
  }
  CHECK((res.theta - theta).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("inertia and the adaptive method both reach the quadratic minimum") {
  Vec a(2);
  a << -0.3, 0.9;
  const auto evaluate = [&](const Vec& th) {
    return std::make_pair(0.5 * (th - a).squaredNorm(), Vec(th - a));
  };

  OuterConfig ip;
  ip.method = OuterMethod::IPiano;
  ip.iterations = 120;
  ip.rate = 0.4;
  ip.beta = 0.6;
  const OuterResult r1 = run_outer(evaluate, Vec::Zero(2), ip);
  CHECK((r1.theta - a).lpNorm<Eigen::Infinity>() < 1e-8);

  OuterConfig ad;
  ad.method = OuterMethod::Adam;
  ad.iterations = 400;
  ad.rate = 0.05;
  // A large eps keeps the denominator smooth so the iteration contracts all
  // the way instead of hovering in the sign-step regime.
  ad.eps = 0.5;
  const OuterResult r2 = run_outer(evaluate, Vec::Zero(2), ad);
  CHECK((r2.theta - a).lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("zero iterations is a no-op") {
  const auto evaluate = [](const Vec& th) { return std::make_pair(0.0, Vec(Vec::Zero(2))); };
  OuterConfig cfg;
  cfg.iterations = 0;
  Vec start(2);
  start << 0.1, 0.2;
  const OuterResult res = run_outer(evaluate, start, cfg);
  CHECK(res.rows.empty());
  CHECK((res.theta - start).lpNorm<Eigen::Infinity>() == 0.0);
}

}  // TEST_SUITE
