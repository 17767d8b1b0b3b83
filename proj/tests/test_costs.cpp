#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tvkf/costs.hpp"
#include "tvkf/errors.hpp"

using namespace tvkf;
using namespace tvkf::testing;

TEST_CASE("prox of the zero regularizer is the identity") {
  const Regularizer reg = Regularizer::zero();
  const Vector u{3.0, -1.0};
  CHECK(reg.prox(u, 0.1) == u);
  CHECK(reg.prox(u, 7.0) == u);
}

TEST_CASE("prox of the box clamps componentwise") {
  const Regularizer reg = Regularizer::box(100.0, 1000.0);
  const Vector out = reg.prox({50.0, 500.0, 2000.0}, 1.0);
  CHECK(out[0] == doctest::Approx(100.0));
  CHECK(out[1] == doctest::Approx(500.0));
  CHECK(out[2] == doctest::Approx(1000.0));
}

TEST_CASE("prox of l1 soft-thresholds") {
  const Regularizer reg = Regularizer::l1(1.0);
  const Vector out = reg.prox({2.0, -0.5}, 1.0);
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("box prox is a projection: idempotent") {
  Rng rng(5);
  const Regularizer reg = Regularizer::box(-1.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector u = random_vector(rng, 4, 5.0);
    const Vector once = reg.prox(u, 0.7);
    const Vector twice = reg.prox(once, 0.7);
    CHECK(once == twice);
  }
}

TEST_CASE("prox operators are firmly nonexpansive (sampled)") {
  Rng rng(6);
  for (const Regularizer& reg :
       {Regularizer::box(-1.0, 1.0), Regularizer::l1(0.5), Regularizer::zero()}) {
    for (int rep = 0; rep < 25; ++rep) {
      const Vector u = random_vector(rng, 3, 4.0);
      const Vector v = random_vector(rng, 3, 4.0);
      const double lhs = linalg::norm2(linalg::sub(reg.prox(u, 1.0), reg.prox(v, 1.0)));
      CHECK(lhs <= linalg::norm2(linalg::sub(u, v)) + 1e-14);
    }
  }
}

TEST_CASE("ride-hail gradient: quadratic term vanishes at x = c*y") {
  RideHailParams params;
  params.n_companies = 1;
  params.sigma_couple = 0.0;
  params.kappa = 1e-6;
  const SmoothCost cost = ride_hail_cost(params);
  const Vector g = cost.grad({5.0}, {5.0});
  const double logistic = params.kappa * std::exp(5.0) / (1.0 + params.kappa * std::exp(5.0));
  CHECK(g[0] == doctest::Approx(logistic).epsilon(1e-9));
}

TEST_CASE("ride-hail coupling gradient is the pairwise difference") {
  RideHailParams params;
  params.n_companies = 2;
  params.sigma_couple = 0.1;
  params.kappa = 1e-9;  // suppress the logistic part
  const SmoothCost cost = ride_hail_cost(params);
  const Vector g_with = cost.grad({1.0, 0.0}, {1.0, 0.0});
  params.sigma_couple = 0.0;
  const Vector g_without = ride_hail_cost(params).grad({1.0, 0.0}, {1.0, 0.0});
  CHECK(g_with[0] - g_without[0] == doctest::Approx(0.2));
  CHECK(g_with[1] - g_without[1] == doctest::Approx(-0.2));
}

TEST_CASE("ride-hail Hessian eigenvalues stay inside the reported [mu, lip]") {
  Rng rng(8);
  const SmoothCost cost = ride_hail_cost(RideHailParams{});
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = random_vector(rng, cost.dim_x, 3.0);
    const Vector y = random_vector(rng, cost.dim_y, 3.0);
    const Matrix h = linalg::symmetrize(cost.hess(x, y));
    CHECK(linalg::sym_eig_min(h) >= cost.mu - 1e-9);
    CHECK(linalg::sym_eig_max(h) <= cost.lip + 1e-9);
  }
}

TEST_CASE("ride-hail rejects invalid parameters") {
  RideHailParams bad_kappa;
  bad_kappa.kappa = 0.0;
  CHECK_THROWS_AS(ride_hail_cost(bad_kappa), InvalidParams);
  RideHailParams bad_c;
  bad_c.c = {1.0, -1.0, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(ride_hail_cost(bad_c), InvalidParams);
}

TEST_CASE("gradients match finite differences of the value") {
  Rng rng(9);
  const SmoothCost rh = ride_hail_cost(RideHailParams{});
  LinearParamCost lp = quadratic_tracking_cost(random_matrix(rng, 3, 3));
  for (const SmoothCost& cost : {rh, lp.cost}) {
    for (int rep = 0; rep < 5; ++rep) {
      const Vector x = random_vector(rng, cost.dim_x, 2.0);
      const Vector y = random_vector(rng, cost.dim_y, 2.0);
      const Vector fd = fd_gradient([&](const Vector& p) { return cost.value(p, y); }, x);
      CHECK(vector_rel_err(cost.grad(x, y), fd) <= 1e-5);
    }
  }
}

TEST_CASE("Hessians match finite differences of the gradient") {
  Rng rng(10);
  const SmoothCost cost = ride_hail_cost(RideHailParams{});
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = random_vector(rng, cost.dim_x, 2.0);
    const Vector y = random_vector(rng, cost.dim_y, 2.0);
    const Matrix fd = fd_jacobian([&](const Vector& p) { return cost.grad(p, y); }, x, 1e-5);
    CHECK(matrix_rel_err(cost.hess(x, y), fd) <= 1e-4);
  }
}

TEST_CASE("linear-param gradient difference is linear in the data difference") {
  Rng rng(12);
  const Matrix coupling = random_matrix(rng, 3, 2);
  LinearParamCost lp = linear_param_cost(coupling, diag_quadratic_cost({1.0, 2.0, 1.5}));
  const Vector x = random_vector(rng, 3);
  const Vector y1 = random_vector(rng, 2);
  const Vector y2 = random_vector(rng, 2);
  const Vector diff = linalg::sub(lp.cost.grad(x, y1), lp.cost.grad(x, y2));
  const Vector want = linalg::matvec(coupling, linalg::sub(y1, y2));
  CHECK(vector_rel_err(diff, want) <= 1e-14);
  // And it does not depend on x.
  const Vector x2 = random_vector(rng, 3);
  const Vector diff2 = linalg::sub(lp.cost.grad(x2, y1), lp.cost.grad(x2, y2));
  CHECK(vector_rel_err(diff2, want) <= 1e-14);
}

TEST_CASE("c0 is the coupling spectral norm") {
  LinearParamCost lp = quadratic_tracking_cost(Matrix::diagonal({3.0, 1.0}));
  CHECK(lp.c0 == doctest::Approx(3.0));
}

TEST_CASE("zero-noise streams reproduce the nominal exactly") {
  StreamSpec spec;
  spec.h = 0.5;
  spec.horizon = 20;
  spec.nominal = [](double t) { return Vector{std::sin(t), std::cos(t)}; };
  spec.noise_cov = constant_noise(2, 0.0);
  spec.seed = 1;
  const Stream s = generate_stream(spec);
  REQUIRE(s.y.size() == 20);
  for (std::size_t k = 0; k < s.y.size(); ++k) {
    CHECK(s.y[k] == s.nominal[k]);
    CHECK(s.t[k] == doctest::Approx(0.5 * k));
  }
}

TEST_CASE("streams are reproducible from the seed") {
  StreamSpec spec;
  spec.h = 1.0;
  spec.horizon = 50;
  spec.nominal = [](double t) { return Vector{t, 2.0 * t}; };
  spec.noise_cov = constant_noise(2, 2.5);
  spec.seed = 77;
  const Stream a = generate_stream(spec);
  const Stream b = generate_stream(spec);
  for (std::size_t k = 0; k < a.y.size(); ++k) CHECK(a.y[k] == b.y[k]);
  spec.seed = 78;
  const Stream c = generate_stream(spec);
  bool any_diff = false;
  for (std::size_t k = 0; k < a.y.size(); ++k)
    if (a.y[k] != c.y[k]) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("stream noise is centered (Monte-Carlo CLT check)") {
  const std::size_t draws = 100000;
  const double var = 0.8;
  StreamSpec spec;
  spec.h = 1.0;
  spec.horizon = draws;
  spec.nominal = [](double) { return Vector{0.0, 0.0}; };
  spec.noise_cov = constant_noise(2, var);
  spec.seed = 1234;
  const Stream s = generate_stream(spec);
  Vector mean(2, 0.0);
  for (const auto& y : s.y) mean = linalg::add(mean, y);
  mean = linalg::scale(1.0 / static_cast<double>(draws), mean);
  const double tol = 4.0 * std::sqrt(2.0 * var / static_cast<double>(draws));
  CHECK(std::abs(mean[0]) <= tol);
  CHECK(std::abs(mean[1]) <= tol);
}

TEST_CASE("non-PSD covariance is rejected") {
  StreamSpec spec;
  spec.h = 1.0;
  spec.horizon = 3;
  spec.nominal = [](double) { return Vector{0.0, 0.0}; };
  spec.noise_cov = [](std::size_t) { return Matrix::diagonal({1.0, -1.0}); };
  spec.seed = 2;
  CHECK_THROWS_AS(generate_stream(spec), CovNotPSD);
}

TEST_CASE("sinusoid nominal reports a derivative bound that holds empirically") {
  const NominalTrajectory nom = sinusoid_nominal(3, 10.0, {2.0, 0.5}, {40.0, 8.0});
  double worst = 0.0;
  const double dt = 1e-4;
  for (int i = 0; i < 2000; ++i) {
    const double t = 0.05 * i;
    const Vector d = linalg::scale(1.0 / dt, linalg::sub(nom.value(t + dt), nom.value(t)));
    worst = std::max(worst, linalg::norm2(d));
  }
  CHECK(worst <= nom.bound_c * (1.0 + 1e-6));
}
