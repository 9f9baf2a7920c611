#include "bilevel/toy.hpp"

#include "bilevel/types.hpp"

#include <doctest.h>

#include "testutil.hpp"

#include <cmath>

using namespace bilevel;
using toy::EstimatorKind;

TEST_SUITE("toy") {

TEST_CASE("analytic gradient agrees with finite differences of the closed-form loss") {
  toy::ToyConfig cfg;
  const double gt = cfg.ground_truth();
  CHECK(gt == doctest::Approx(0.5).epsilon(1e-15));

  const auto closed_loss = [&](double th) {
    const double x = toy::analytic_solution_map(th, cfg.lambda, cfg.b);
    return 0.5 * (x - gt) * (x - gt);
  };
  for (const double theta : {-0.8, -0.2, 0.1, 0.3, 0.9, 1.5}) {
    const Interval ref = toy::analytic_gradient(theta, cfg);
    REQUIRE(ref.is_point());
    const double fd = testutil::central_diff(closed_loss, theta, 1e-7);
    CHECK(testutil::rel_err(ref.lo, fd, 1e-10) < 1e-6);
  }
  // Reference value at the standard evaluation point.
  CHECK(toy::analytic_gradient(0.3, cfg).lo == doctest::Approx(-0.1721583069).epsilon(1e-9));
}

TEST_CASE("the kink reference is the ordered subgradient interval") {
  toy::ToyConfig cfg;
  const Interval ref = toy::analytic_gradient(0.0, cfg);
  CHECK_FALSE(ref.is_point());
  CHECK(ref.lo == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(ref.hi == 0.0);

  // The interval endpoint tracks the target: theta_star = 2 gives gt = 0.4.
  toy::ToyConfig flipped = cfg;
  flipped.theta_star = 2.0;
  const Interval ref2 = toy::analytic_gradient(0.0, flipped);
  CHECK(ref2.lo == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(ref2.hi == 0.0);
}

TEST_CASE("forward runs reach the closed-form solution map") {
  toy::ToyConfig cfg;
  const double theta = 0.3;
  const double xstar = toy::analytic_solution_map(theta, cfg.lambda, cfg.b);

  const IterateTrace breg = toy::run_forward(EstimatorKind::BregmanFB, cfg, theta);
  CHECK(breg.final_iterate()(0) == doctest::Approx(xstar).epsilon(1e-12));

  // The projected-gradient step 1/L_f minimizes the quadratic in one go.
  const IterateTrace proj = toy::run_forward(EstimatorKind::ProjGD, cfg, theta);
  CHECK(proj.iterates[1](0) == doctest::Approx(xstar).epsilon(1e-14));

  CHECK_THROWS_AS(toy::run_forward(EstimatorKind::SmoothedImplicit, cfg, theta), InvalidInput);
}

TEST_CASE("estimator zoo matches the analytic reference at a smooth point") {
  toy::ToyConfig cfg;
  const Interval ref = toy::analytic_gradient(cfg.theta_eval, cfg);

  const struct {
    EstimatorKind kind;
    double tol;
  } cases[] = {
      {EstimatorKind::SmoothedImplicit, 1e-4}, {EstimatorKind::ProjGD, 1e-12},
      {EstimatorKind::ProjGD2, 1e-12},         {EstimatorKind::BregmanFB, 1e-10},
      {EstimatorKind::BregmanFB2, 1e-10},      {EstimatorKind::BregmanFBImplicit, 1e-8},
  };
  for (const auto& c : cases) {
    const GradientReport rep = toy::run_estimator(c.kind, cfg);
    CHECK(ref.distance(rep.gradient(0)) < c.tol);
    CHECK(rep.estimator == toy::estimator_name(c.kind));
  }
}

TEST_CASE("every estimator lands inside the subgradient interval at the kink") {
  toy::ToyConfig cfg;
  cfg.theta_eval = 0.0;
  const Interval ref = toy::analytic_gradient(0.0, cfg);
  for (const EstimatorKind kind : toy::kAllEstimators) {
    const GradientReport rep = toy::run_estimator(kind, cfg);
    CHECK(ref.distance(rep.gradient(0)) == 0.0);
  }
}

TEST_CASE("estimator names round trip and unknown tags are rejected") {
  for (const EstimatorKind kind : toy::kAllEstimators)
    CHECK(toy::estimator_from_name(toy::estimator_name(kind)) == kind);
  CHECK_THROWS_AS(toy::estimator_from_name("nope"), InvalidInput);
}

TEST_CASE("configuration validation") {
  toy::ToyConfig bad;
  bad.x0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.n_forward = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  toy::ToyConfig good;
  CHECK_NOTHROW(good.validate());
}

TEST_CASE("sweeps cover the grid in order and record failures per row") {
  toy::ToyConfig base;
  const std::vector<EstimatorKind> kinds = {EstimatorKind::BregmanFB, EstimatorKind::ProjGD};
  const std::vector<double> thetas = {0.3, 1.0};
  const std::vector<int> ns = {5, 50};
  const auto rows = toy::sweep(base, kinds, thetas, ns);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].kind == "bregman-fb");
  CHECK(rows[0].theta == 0.3);
  CHECK(rows[0].n_forward == 5);
  CHECK(rows[1].n_forward == 50);
  CHECK(rows[2].theta == 1.0);
  CHECK(rows[4].kind == "proj-gd");
  for (const auto& row : rows) {
    CHECK_FALSE(row.failed);
    CHECK(std::isfinite(row.estimate));
    CHECK(row.n_back == row.n_forward);
    CHECK(row.abs_error >= 0.0);
  }
  // Error shrinks with n for the entropy parametrization.
  CHECK(rows[1].abs_error < rows[0].abs_error);

  // An infeasible start makes the interior-domain kinds fail row by row while
  // the sweep carries on.
  toy::ToyConfig bad = base;
  bad.x0 = -1.0;
  const auto failed = toy::sweep(bad, {EstimatorKind::BregmanFB}, {0.3}, {5, 10});
  REQUIRE(failed.size() == 2);
  for (const auto& row : failed) {
    CHECK(row.failed);
    CHECK_FALSE(row.message.empty());
    CHECK(std::isnan(row.estimate));
  }
}

TEST_CASE("threaded sweeps reproduce the serial rows bit for bit") {
  toy::ToyConfig base;
  const std::vector<EstimatorKind> kinds = {EstimatorKind::BregmanFB, EstimatorKind::ProjGD2,
                                            EstimatorKind::SmoothedImplicit};
  const std::vector<double> thetas = {0.0, 0.3};
  const std::vector<int> ns = {10, 40};
  const auto serial = toy::sweep(base, kinds, thetas, ns, 0);
  const auto threaded = toy::sweep(base, kinds, thetas, ns, 3);
  REQUIRE(serial.size() == threaded.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].kind == threaded[i].kind);
    CHECK(serial[i].estimate == threaded[i].estimate);
    CHECK(serial[i].abs_error == threaded[i].abs_error);
  }
}

}  // TEST_SUITE
