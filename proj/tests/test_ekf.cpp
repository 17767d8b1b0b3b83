#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tvkf/costs.hpp"
#include "tvkf/ekf.hpp"
#include "tvkf/errors.hpp"

using namespace tvkf;
using namespace tvkf::testing;

namespace {

DataHistory history_of(std::initializer_list<Vector> ys) {
  DataHistory h;
  std::vector<Vector> list(ys);
  for (auto it = list.rbegin(); it != list.rend(); ++it) h.push(*it);
  return h;
}

CovModel constant_cov(std::size_t n, double q, double r) {
  CovModel cov;
  cov.q = [n, q](std::size_t) { return linalg::scale(q, Matrix::identity(n)); };
  cov.r = [n, r](std::size_t) { return linalg::scale(r, Matrix::identity(n)); };
  return cov;
}

}  // namespace

TEST_CASE("prediction Jacobian of a quadratic is the matrix power") {
  Rng rng(31);
  const SmoothCost cost = random_quadratic_tracking(rng, 4, 0.5, 1.8);
  const Matrix h_mat = cost.hess({}, {});
  const double alpha = 0.25;
  const DataHistory hist = history_of({random_vector(rng, 4)});
  const Vector x = random_vector(rng, 4);

  const PredictOutcome p1 = predict_phi(x, cost, Regularizer::zero(),
                                        PredictorKind::one_point, hist, {alpha, 0.5}, 1);
  const Matrix f1 = jac_prediction(cost, PredictorKind::one_point, hist, p1.points, alpha);
  const Matrix want1 = linalg::sub(Matrix::identity(4), linalg::scale(alpha, h_mat));
  CHECK(matrix_rel_err(f1, want1) <= 1e-13);

  const Matrix f0 = jac_prediction(cost, PredictorKind::one_point, hist, {}, alpha);
  CHECK(matrix_rel_err(f0, Matrix::identity(4)) <= 1e-15);

  const PredictOutcome p3 = predict_phi(x, cost, Regularizer::zero(),
                                        PredictorKind::one_point, hist, {alpha, 0.5}, 3);
  const Matrix f3 = jac_prediction(cost, PredictorKind::one_point, hist, p3.points, alpha);
  const Matrix want3 = linalg::matmul(want1, linalg::matmul(want1, want1));
  CHECK(matrix_rel_err(f3, want3) <= 1e-12);
}

TEST_CASE("prediction Jacobian matches finite differences of the prediction map") {
  Rng rng(32);
  RideHailParams params;
  params.n_companies = 3;
  const SmoothCost cost = ride_hail_cost(params);
  const StepSizes steps{0.1, 0.2};
  const DataHistory hist = history_of({random_vector(rng, 3, 2.0), random_vector(rng, 3, 2.0)});
  const Vector x = random_vector(rng, 3, 2.0);
  for (std::size_t p_steps : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
    const PredictOutcome out = predict_phi(x, cost, Regularizer::zero(),
                                           PredictorKind::two_point, hist, steps, p_steps);
    const Matrix jac =
        jac_prediction(cost, PredictorKind::two_point, hist, out.points, steps.alpha);
    const Matrix fd = fd_jacobian(
        [&](const Vector& v) {
          return predict_phi(v, cost, Regularizer::zero(), PredictorKind::two_point, hist,
                             steps, p_steps)
              .x;
        },
        x, 1e-6);
    CHECK(matrix_rel_err(jac, fd) <= 1e-5);
  }
}

TEST_CASE("correction Jacobian closed forms") {
  Rng rng(33);
  const SmoothCost cost = random_quadratic_tracking(rng, 3, 0.5, 1.8);
  const Matrix h_f = cost.hess({}, {});
  const double beta = 0.5;
  const Vector y = random_vector(rng, 3);
  const Vector x = random_vector(rng, 3);

  const CorrectOutcome c1 = correct_psi(x, cost, Regularizer::zero(), y, {0.2, beta}, 1);
  const Matrix got1 = jac_correction(cost, y, c1.points, beta);
  CHECK(matrix_rel_err(got1, linalg::scale(beta, h_f)) <= 1e-13);

  const Matrix got0 = jac_correction(cost, y, {}, beta);
  CHECK(linalg::max_abs(got0) == 0.0);

  const CorrectOutcome c2 = correct_psi(x, cost, Regularizer::zero(), y, {0.2, beta}, 2);
  const Matrix got2 = jac_correction(cost, y, c2.points, beta);
  const Matrix step = linalg::sub(Matrix::identity(3), linalg::scale(beta, h_f));
  const Matrix want2 = linalg::sub(Matrix::identity(3), linalg::matmul(step, step));
  CHECK(matrix_rel_err(got2, want2) <= 1e-13);
}

TEST_CASE("correction Jacobian is minus the residual Jacobian (finite differences)") {
  Rng rng(34);
  RideHailParams params;
  params.n_companies = 3;
  const SmoothCost cost = ride_hail_cost(params);
  const StepSizes steps{0.1, 0.2};
  const Vector y = random_vector(rng, 3, 2.0);
  const Vector x = random_vector(rng, 3, 2.0);
  for (std::size_t c_steps : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
    const CorrectOutcome out = correct_psi(x, cost, Regularizer::zero(), y, steps, c_steps);
    const Matrix jac = jac_correction(cost, y, out.points, steps.beta);
    const Matrix fd = fd_jacobian(
        [&](const Vector& v) {
          return correct_psi(v, cost, Regularizer::zero(), y, steps, c_steps).residual;
        },
        x, 1e-6);
    CHECK(matrix_rel_err(jac, linalg::scale(-1.0, fd)) <= 1e-5);
  }
}

TEST_CASE("damped Newton closed forms") {
  LinearParamCost lp = quadratic_tracking_cost(Matrix::identity(1));
  CHECK(damped_newton_step(lp.cost, {0.0}, {1.0}, 1.0)[0] == doctest::Approx(1.0));
  CHECK(damped_newton_step(lp.cost, {0.4}, {1.0}, 0.0)[0] == doctest::Approx(0.4));

  Rng rng(35);
  for (int rep = 0; rep < 10; ++rep) {
    const SmoothCost cost = random_quadratic_tracking(rng, 4, 0.4, 2.5);
    const Vector m = random_vector(rng, 4, 2.0);
    const Vector x = random_vector(rng, 4, 3.0);
    CHECK(vector_rel_err(damped_newton_step(cost, x, m, 1.0), m) <= 1e-12);
  }
}

TEST_CASE("vanishing measurement noise with C = 1 recovers the Newton step") {
  Rng rng(36);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + rep % 6;
    const SmoothCost cost = random_quadratic_tracking(rng, n, 0.4, 1.8);
    const StepSizes steps{0.2, 1.0};  // beta = 1: the gain absorbs the step exactly
    const Vector y = random_vector(rng, n, 2.0);
    EkfState state = ekf_init(n);
    state.x_pred = random_vector(rng, n, 3.0);
    DataHistory hist = history_of({y});
    const EkfState next = ekf_step(state, cost, PredictorKind::one_point, hist, steps, 1, 1,
                                   constant_cov(n, 0.1, 1e-12), y);
    const Vector newton = damped_newton_step(cost, state.x_pred, y, 1.0);
    CHECK(linalg::norm2(linalg::sub(next.x_corr, newton)) <=
          1e-6 * (1.0 + linalg::norm2(state.x_pred)));
  }
}

TEST_CASE("huge measurement noise keeps the prediction") {
  Rng rng(37);
  const std::size_t n = 3;
  const SmoothCost cost = random_quadratic_tracking(rng, n, 0.5, 1.5);
  const Vector y = random_vector(rng, n, 2.0);
  EkfState state = ekf_init(n);
  state.x_pred = random_vector(rng, n, 3.0);
  DataHistory hist = history_of({y});
  const EkfState next = ekf_step(state, cost, PredictorKind::one_point, hist, {0.3, 0.9}, 1, 1,
                                 constant_cov(n, 0.1, 1e12), y);
  CHECK(linalg::norm2(linalg::sub(next.x_corr, state.x_pred)) <= 1e-9);
}

TEST_CASE("scalar filter step agrees with the five update lines by hand") {
  // f = 0.5 (x - y)^2: gradient x - y, Hessian 1.
  LinearParamCost lp = quadratic_tracking_cost(Matrix::identity(1));
  const double alpha = 0.3, beta = 0.6;
  const double q_cov = 0.2, r_cov = 0.05;
  const double y = 2.0;
  const double x_pred = 0.5, p_pred = 1.4;

  EkfState state = ekf_init(1);
  state.x_pred = {x_pred};
  state.p_pred = Matrix(1, 1, {p_pred});
  DataHistory hist = history_of({Vector{y}});
  const EkfState next = ekf_step(state, lp.cost, PredictorKind::one_point, hist,
                                 {alpha, beta}, 1, 1, constant_cov(1, q_cov, r_cov), {y});

  // Hand arithmetic of Algorithm 1 with P = C = 1.
  const double h = beta * 1.0;
  const double gain = p_pred * h / (h * p_pred * h + r_cov);
  const double psi = -beta * (x_pred - y);
  const double x_corr = x_pred + gain * psi;
  const double p_corr = (1.0 - gain * h) * p_pred;
  const double f_jac = 1.0 - alpha * 1.0;
  const double x_next = x_corr - alpha * (x_corr - y);
  const double p_next = f_jac * p_corr * f_jac + q_cov;

  CHECK(next.x_corr[0] == doctest::Approx(x_corr).epsilon(1e-14));
  CHECK(next.p_corr(0, 0) == doctest::Approx(p_corr).epsilon(1e-14));
  CHECK(next.x_pred[0] == doctest::Approx(x_next).epsilon(1e-14));
  CHECK(next.p_pred(0, 0) == doctest::Approx(p_next).epsilon(1e-14));
}

TEST_CASE("covariances stay symmetric PSD across one hundred steps") {
  Rng rng(38);
  const std::size_t n = 4;
  RideHailParams params;
  params.n_companies = n;
  params.sigma_couple = 0.05;
  const SmoothCost cost = ride_hail_cost(params);
  const StepSizes steps{0.05, 0.2};
  DataHistory hist;
  for (bool joseph : {false, true}) {
    EkfOptions opts;
    opts.joseph_form = joseph;
    EkfState state = ekf_init(n);
    for (int k = 0; k < 100; ++k) {
      const Vector y = random_vector(rng, n, 2.0);
      hist.push(y);
      state = ekf_step(state, cost, PredictorKind::two_point, hist, steps, 2, 1,
                       constant_cov(n, 0.3, 0.5), y, opts);
      CHECK(linalg::is_symmetric(state.p_pred, 1e-10));
      CHECK(linalg::sym_eig_min(state.p_pred) >= -1e-8);
      CHECK(linalg::sym_eig_min(state.p_corr) >= -1e-8);
    }
  }
}

TEST_CASE("identity-gain hook recovers plain prediction-correction bit for bit") {
  Rng rng(39);
  const std::size_t n = 3;
  const SmoothCost cost = random_quadratic_tracking(rng, n, 0.5, 1.6);
  const StepSizes steps{0.2, 0.7};
  const Regularizer none = Regularizer::zero();
  EkfOptions opts;
  opts.force_identity_gain = true;

  EkfState state = ekf_init(n);
  DataHistory hist_filter;
  DataHistory hist_plain;
  Vector x_pred(n, 0.0);
  for (int k = 0; k < 50; ++k) {
    const Vector y = random_vector(rng, n, 2.0);
    hist_filter.push(y);
    state = ekf_step(state, cost, PredictorKind::two_point, hist_filter, steps, 2, 2,
                     constant_cov(n, 0.1, 0.1), y, opts);

    const CorrectOutcome corr = correct_psi(x_pred, cost, none, y, steps, 2, false);
    const Vector x_corr = corr.corrected;
    hist_plain.push(y);
    x_pred = predict_phi(x_corr, cost, none, PredictorKind::two_point, hist_plain, steps, 2,
                         false)
                 .x;

    REQUIRE(state.x_corr == x_corr);
    REQUIRE(state.x_pred == x_pred);
  }
}

TEST_CASE("singular innovation is reported") {
  LinearParamCost lp = quadratic_tracking_cost(Matrix::identity(1));
  EkfState state = ekf_init(1);
  state.p_pred = Matrix(1, 1, {0.0});
  DataHistory hist = history_of({Vector{1.0}});
  CHECK_THROWS_AS(ekf_step(state, lp.cost, PredictorKind::one_point, hist, {0.3, 0.6}, 1, 1,
                           constant_cov(1, 0.0, 0.0), {1.0}),
                  SingularInnovation);
}

TEST_CASE("sample covariance recovers a planted diagonal") {
  Rng rng(40);
  std::vector<Vector> samples;
  for (int i = 0; i < 20000; ++i)
    samples.push_back({2.0 * rng.normal(), 0.5 * rng.normal()});
  const Matrix cov = sample_covariance(samples);
  CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(std::abs(cov(0, 1)) <= 0.05);
}
