// Extended Kalman filter for unconstrained differentiable problems (g = 0):
// the state transition is the P-step prediction map, the measurement is the
// C-step correction residual driven to zero on the optimizer trajectory.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tvkf/costs.hpp"
#include "tvkf/linalg.hpp"
#include "tvkf/operators.hpp"

namespace tvkf {

struct EkfState {
  Vector x_pred;   // x_{k|k-1}
  Matrix p_pred;   // P_{k|k-1}, symmetric PSD
  Vector x_corr;   // x_k
  Matrix p_corr;   // P_k
  std::size_t k = 0;
};

// x_{1|0} = 0, P_{1|0} = I; override the iterate afterwards if desired.
EkfState ekf_init(std::size_t n);

struct CovModel {
  std::function<Matrix(std::size_t)> q;  // process covariance Q_k
  std::function<Matrix(std::size_t)> r;  // measurement covariance R_k
};

struct EkfOptions {
  bool joseph_form = false;         // covariance update robust to ill-conditioning
  bool force_identity_gain = false; // test hook: K_k = I recovers plain prediction-correction
};

// Ordered product over p = 1..P of (I - alpha * dJ(x^{P-p})); points holds
// x^0..x^{P-1} from predict_phi. P = 0 gives the identity.
Matrix jac_prediction(const SmoothCost& cost, PredictorKind kind, const DataHistory& history,
                      std::span<const Vector> points, double alpha);

// I - product over c = 1..C of (I - beta * hess(x^{C-c}; y)); C = 0 gives the
// zero matrix. Note the sign convention: this is the Jacobian of x minus the
// corrected iterate, i.e. minus the Jacobian of the residual.
Matrix jac_correction(const SmoothCost& cost, const Vector& y, std::span<const Vector> points,
                      double beta);

// One filter cycle: correction with the received sample y_k at state.x_pred,
// then prediction through the history (which must already contain y_k).
// Covariances are symmetrized after every update.
EkfState ekf_step(const EkfState& state, const SmoothCost& cost, PredictorKind kind,
                  const DataHistory& history, const StepSizes& steps, std::size_t p_steps,
                  std::size_t c_steps, const CovModel& cov, const Vector& y_k,
                  const EkfOptions& options = {});

// x - beta * hess(x,y)^{-1} grad(x,y); the reference step the filter matches
// when the measurement noise vanishes and C = 1 (with beta = 1 the Kalman
// gain absorbs the step size exactly).
Vector damped_newton_step(const SmoothCost& cost, const Vector& x, const Vector& y, double beta);

// Unbiased sample covariance of a set of equal-length vectors; utility for
// calibrating Q_k/R_k from residual samples.
Matrix sample_covariance(const std::vector<Vector>& samples);

}  // namespace tvkf
