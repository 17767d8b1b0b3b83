#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tvkf/costs.hpp"
#include "tvkf/errors.hpp"
#include "tvkf/operators.hpp"

using namespace tvkf;
using namespace tvkf::testing;

namespace {

// x-only quadratic 0.5||x||^2 exposed with dim_y = 0 so predictors can run
// on an empty data vector.
SmoothCost unit_quadratic(std::size_t n) { return diag_quadratic_cost(Vector(n, 1.0)); }

DataHistory history_of(std::initializer_list<Vector> ys) {
  DataHistory h;
  // push oldest first so that at(0) is the newest
  std::vector<Vector> list(ys);
  for (auto it = list.rbegin(); it != list.rend(); ++it) h.push(*it);
  return h;
}

}  // namespace

TEST_CASE("contraction factors on closed-form cases") {
  const ContractionFactors unit = contraction_factors(1.0, 1.0, {1.0, 1.0});
  CHECK(unit.rho_p == doctest::Approx(0.0));
  CHECK(unit.rho_c == doctest::Approx(0.0));

  const ContractionFactors f = contraction_factors(1.0, 2.0, {0.25, 0.5});
  CHECK(f.rho_p == doctest::Approx(std::sqrt(0.75)));
  CHECK(f.rho_c == doctest::Approx(0.5));

  CHECK_THROWS_AS(contraction_factors(1.0, 2.0, {0.5, 0.5}), StepTooLarge);
  CHECK_THROWS_AS(contraction_factors(1.0, 2.0, {0.25, 1.0}), StepTooLarge);
}

TEST_CASE("zeta and xi bookkeeping") {
  CHECK(zeta_xi(0, 0.7) == std::pair<double, double>{1.0, 0.0});
  CHECK(zeta_xi(2, 0.5) == std::pair<double, double>{0.25, 1.25});
  CHECK(zeta_xi(1, 0.0) == std::pair<double, double>{0.0, 1.0});
}

TEST_CASE("predictor coefficients sum to one") {
  for (auto kind :
       {PredictorKind::one_point, PredictorKind::two_point, PredictorKind::three_point}) {
    double s = 0.0;
    for (double c : predictor_coeffs(kind)) s += c;
    CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("constant streams make every predictor the plain gradient") {
  Rng rng(21);
  const SmoothCost cost = random_quadratic_tracking(rng, 3, 0.5, 2.0);
  const Vector y = random_vector(rng, 3);
  const Vector x = random_vector(rng, 3);
  const DataHistory h = history_of({y, y, y});
  for (auto kind :
       {PredictorKind::one_point, PredictorKind::two_point, PredictorKind::three_point}) {
    CHECK(vector_rel_err(predictor_gradient(kind, cost, h, x), cost.grad(x, y)) <= 1e-14);
    CHECK(matrix_rel_err(predictor_jacobian(kind, cost, h, x), cost.hess(x, y)) <= 1e-14);
  }
}

TEST_CASE("two-point extrapolation is exact on affine data") {
  Rng rng(22);
  LinearParamCost lp = quadratic_tracking_cost(random_matrix(rng, 3, 3));
  const Vector v = random_vector(rng, 3);
  const Vector x = random_vector(rng, 3);
  // y_k = k*v for k = 4 (newest) and 3; extrapolation target is k = 5.
  const DataHistory h = history_of({linalg::scale(4.0, v), linalg::scale(3.0, v)});
  const Vector got = predictor_gradient(PredictorKind::two_point, lp.cost, h, x);
  const Vector want = lp.cost.grad(x, linalg::scale(5.0, v));
  CHECK(vector_rel_err(got, want) <= 1e-13);
}

TEST_CASE("three-point extrapolation is exact on quadratic-in-k data") {
  Rng rng(23);
  LinearParamCost lp = quadratic_tracking_cost(random_matrix(rng, 2, 2));
  const Vector v = random_vector(rng, 2);
  const Vector x = random_vector(rng, 2);
  auto y_at = [&](double k) { return linalg::scale(k * k, v); };
  const DataHistory h = history_of({y_at(4.0), y_at(3.0), y_at(2.0)});
  const Vector got = predictor_gradient(PredictorKind::three_point, lp.cost, h, x);
  const Vector want = lp.cost.grad(x, y_at(5.0));
  CHECK(vector_rel_err(got, want) <= 1e-12);
}

TEST_CASE("short history degrades to the available predictor") {
  CHECK(effective_kind(PredictorKind::three_point, 1) == PredictorKind::one_point);
  CHECK(effective_kind(PredictorKind::three_point, 2) == PredictorKind::two_point);
  CHECK(effective_kind(PredictorKind::three_point, 3) == PredictorKind::three_point);
  CHECK(effective_kind(PredictorKind::one_point, 3) == PredictorKind::one_point);
  CHECK_THROWS_AS(effective_kind(PredictorKind::one_point, 0), EmptyHistory);
}

TEST_CASE("predictor jacobian matches finite differences of the predictor gradient") {
  Rng rng(24);
  const SmoothCost cost = ride_hail_cost(RideHailParams{});
  const DataHistory h =
      history_of({random_vector(rng, 5, 2.0), random_vector(rng, 5, 2.0)});
  const Vector x = random_vector(rng, 5, 2.0);
  const Matrix fd = fd_jacobian(
      [&](const Vector& p) { return predictor_gradient(PredictorKind::two_point, cost, h, p); },
      x, 1e-5);
  const Matrix got = predictor_jacobian(PredictorKind::two_point, cost, h, x);
  CHECK(matrix_rel_err(got, fd) <= 1e-5);
  CHECK(linalg::is_symmetric(got, 1e-9));
}

TEST_CASE("predict_phi single gradient step and P = 0") {
  const SmoothCost cost = unit_quadratic(1);
  DataHistory h;
  h.push(Vector{});
  const Regularizer none = Regularizer::zero();
  const StepSizes steps{0.5, 0.5};
  const PredictOutcome one =
      predict_phi({2.0}, cost, none, PredictorKind::one_point, h, steps, 1);
  CHECK(one.x[0] == doctest::Approx(1.0));
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0][0] == doctest::Approx(2.0));

  const PredictOutcome zero =
      predict_phi({2.0}, cost, none, PredictorKind::one_point, h, steps, 0);
  CHECK(zero.x[0] == doctest::Approx(2.0));
  CHECK(zero.points.empty());
}

TEST_CASE("predict_phi approaches the fixed point (iterate-to-convergence oracle)") {
  Rng rng(25);
  LinearParamCost lp = quadratic_tracking_cost(Matrix::identity(3));
  const Regularizer box = Regularizer::box(-0.5, 0.8);
  const StepSizes steps{0.4, 0.4};
  const Vector y = random_vector(rng, 3, 2.0);
  const DataHistory h = history_of({y, y});
  const Vector x0 = random_vector(rng, 3, 3.0);

  // Oracle: iterate the same map until successive iterates differ < 1e-12.
  Vector fixed = x0;
  for (int it = 0; it < 100000; ++it) {
    const Vector next =
        predict_phi(fixed, lp.cost, box, PredictorKind::two_point, h, steps, 1).x;
    const double move = linalg::norm2(linalg::sub(next, fixed));
    fixed = next;
    if (move < 1e-12) break;
  }
  const Vector deep =
      predict_phi(x0, lp.cost, box, PredictorKind::two_point, h, steps, 200).x;
  CHECK(linalg::norm2(linalg::sub(deep, fixed)) <= 1e-8);
}

TEST_CASE("correct_psi fixed point, single step, and C = 0") {
  // f = 0.5 (x - 1)^2 via tracking cost with A = I.
  LinearParamCost lp = quadratic_tracking_cost(Matrix::identity(1));
  const Regularizer none = Regularizer::zero();
  const Vector y{1.0};

  const CorrectOutcome at_min = correct_psi({1.0}, lp.cost, none, y, {0.5, 0.7}, 3);
  CHECK(linalg::norm2(at_min.residual) <= 1e-15);

  const CorrectOutcome one = correct_psi({0.0}, lp.cost, none, y, {0.5, 1.0}, 1);
  CHECK(one.corrected[0] == doctest::Approx(1.0));
  CHECK(one.residual[0] == doctest::Approx(1.0));

  const CorrectOutcome zero = correct_psi({0.3}, lp.cost, none, y, {0.5, 1.0}, 0);
  CHECK(zero.corrected[0] == doctest::Approx(0.3));
  CHECK(linalg::norm2(zero.residual) == 0.0);
}

TEST_CASE("residual norm is bounded by (1 + rho_c^C) distance to the optimum") {
  Rng rng(26);
  for (int rep = 0; rep < 20; ++rep) {
    const SmoothCost cost = random_quadratic_tracking(rng, 4, 0.6, 1.8);
    const StepSizes steps{0.2, 0.6};
    const ContractionFactors f = contraction_factors(cost.mu, cost.lip, steps);
    const Vector y = random_vector(rng, 4, 2.0);  // minimizer is y itself
    const Vector x = random_vector(rng, 4, 3.0);
    const std::size_t c_steps = 1 + rep % 4;
    const CorrectOutcome out = correct_psi(x, cost, Regularizer::zero(), y, steps, c_steps);
    const double dist = linalg::norm2(linalg::sub(x, y));
    CHECK(linalg::norm2(out.residual) <=
          (1.0 + std::pow(f.rho_c, static_cast<double>(c_steps))) * dist + 1e-12);
  }
}

TEST_CASE("prediction and correction maps contract at the certified rates") {
  Rng rng(27);
  for (int rep = 0; rep < 20; ++rep) {
    const SmoothCost cost = random_quadratic_tracking(rng, 3, 0.5, 2.0);
    const StepSizes steps{0.2, 0.8};
    const ContractionFactors f = contraction_factors(cost.mu, cost.lip, steps);
    const Regularizer reg = rep % 2 ? Regularizer::box(-1.0, 1.0) : Regularizer::zero();
    const DataHistory h = history_of({random_vector(rng, 3), random_vector(rng, 3)});
    const Vector u = random_vector(rng, 3, 3.0);
    const Vector v = random_vector(rng, 3, 3.0);
    const std::size_t p_steps = 1 + rep % 3;

    const Vector pu = predict_phi(u, cost, reg, PredictorKind::two_point, h, steps, p_steps).x;
    const Vector pv = predict_phi(v, cost, reg, PredictorKind::two_point, h, steps, p_steps).x;
    const double rate_p = std::pow(f.rho_p, static_cast<double>(p_steps));
    CHECK(linalg::norm2(linalg::sub(pu, pv)) <=
          rate_p * linalg::norm2(linalg::sub(u, v)) + 1e-12);

    const Vector y = random_vector(rng, 3);
    const std::size_t c_steps = 1 + rep % 4;
    const Vector cu = correct_psi(u, cost, reg, y, steps, c_steps).corrected;
    const Vector cv = correct_psi(v, cost, reg, y, steps, c_steps).corrected;
    const double rate_c = std::pow(f.rho_c, static_cast<double>(c_steps));
    CHECK(linalg::norm2(linalg::sub(cu, cv)) <=
          rate_c * linalg::norm2(linalg::sub(u, v)) + 1e-12);
  }
}

TEST_CASE("predictor bias and gradient noise respect the recurring-example bounds") {
  // Scaled-down Monte Carlo; the acceptance suite runs the full version.
  Rng rng(28);
  const std::size_t dim = 2;
  const Matrix coupling = random_matrix(rng, dim, dim, 1.5);
  LinearParamCost lp = linear_param_cost(coupling, diag_quadratic_cost(Vector(dim, 1.0)));
  const double c0 = lp.c0;
  const double h = 0.15;
  const NominalTrajectory nom = sinusoid_nominal(dim, 1.0, {0.4}, {9.0});
  const double c_bound = nom.bound_c;
  const double var = 0.01;
  const double big_sigma = std::sqrt(static_cast<double>(dim) * var);
  const Vector x = random_vector(rng, dim);
  const double t_now = 3.0;
  const Vector truth_next = nom.value(t_now + h);
  const Vector expected_grad = lp.cost.grad(x, truth_next);

  const int samples = 2000;
  double mean_one = 0.0, mean_two = 0.0, mean_three = 0.0, mean_noise = 0.0;
  for (int s = 0; s < samples; ++s) {
    auto noisy = [&](double t) {
      return linalg::add(nom.value(t),
                         linalg::scale(std::sqrt(var), rng.normal_vector(dim)));
    };
    const DataHistory hist = history_of({noisy(t_now), noisy(t_now - h), noisy(t_now - 2 * h)});
    for (auto [kind, acc] : {std::pair{PredictorKind::one_point, &mean_one},
                             std::pair{PredictorKind::two_point, &mean_two},
                             std::pair{PredictorKind::three_point, &mean_three}}) {
      const Vector j = predictor_gradient(kind, lp.cost, hist, x);
      *acc += linalg::norm2(linalg::sub(j, expected_grad));
    }
    mean_noise += linalg::norm2(
        linalg::sub(lp.cost.grad(x, noisy(t_now + h)), expected_grad));
  }
  mean_one /= samples;
  mean_two /= samples;
  mean_three /= samples;
  mean_noise /= samples;

  CHECK(mean_one <= c0 * c_bound * h + c0 * big_sigma);
  CHECK(mean_two <= c0 * c_bound * h * h + 3.0 * c0 * big_sigma);
  CHECK(mean_three <= c0 * c_bound * h * h * h + 7.0 * c0 * big_sigma);
  CHECK(mean_noise <= c0 * big_sigma);
}
