// Static and parameter-varying contractive filters: the corrected iterate is
// blended with the prediction through a gain designed offline, with the LPV
// variant scheduled on a normalized data-drift parameter theta.
#pragma once

#include <cstddef>

#include "tvkf/costs.hpp"
#include "tvkf/linalg.hpp"
#include "tvkf/operators.hpp"

namespace tvkf {

class GainSchedule {
 public:
  enum class Kind { static_matrix, scalar, lpv };

  static GainSchedule static_gain(Matrix k);
  // Convex-combination gain chi in [0, 1].
  static GainSchedule scalar_gain(double chi);
  // K(theta) = (W0 + theta W1) (X0 - nu X1 + theta X1)^{-1}; requires
  // X1 <= 0 and Y(theta) > 0 at both endpoints.
  static GainSchedule lpv_gain(Matrix w0, Matrix w1, Matrix x0, Matrix x1, double nu);

  Kind kind() const { return kind_; }
  const Matrix& k() const { return k_; }
  double chi() const { return chi_; }
  const Matrix& w0() const { return w0_; }
  const Matrix& w1() const { return w1_; }
  const Matrix& x0() const { return x0_; }
  const Matrix& x1() const { return x1_; }
  double nu() const { return nu_; }

 private:
  Kind kind_ = Kind::scalar;
  Matrix k_;
  double chi_ = 1.0;
  Matrix w0_, w1_, x0_, x1_;
  double nu_ = 0.0;
};

// Evaluate the scheduled gain at theta in [0, 1]; throws GainEvalFailure when
// Y(theta) is singular.
Matrix lpv_gain_eval(const GainSchedule& gain, double theta);

// Blend of prediction and corrected prediction:
// x_k = (I - K) x_{k|k-1} + K Psi'(x_{k|k-1}, y_k). theta is consulted only
// by the lpv kind. The caller advances x_{k+1|k} through predict_phi.
Vector contract_step(const Vector& x_pred, const SmoothCost& cost, const Regularizer& reg,
                     const Vector& y_k, const StepSizes& steps, std::size_t c_steps,
                     const GainSchedule& gain, double theta = 0.0);

struct ThetaSignal {
  double max_drift = 1.0;   // normalizer max_t ||d/dt y||_inf
  std::size_t window = 1;   // finite-difference lag in samples
};

// theta = min(1, ||(cur - prev)/h||_inf / max_drift), clamped to [0, 1].
double theta_from_stream(const Vector& prev_y, const Vector& cur_y, double h,
                         const ThetaSignal& signal);

// Tracks successive theta values to report the empirical bound on
// |theta_{s+1} - theta_s|.
class ThetaTracker {
 public:
  void observe(double theta);
  double empirical_nu() const { return max_step_; }
  double last() const { return last_; }
  bool started() const { return started_; }

 private:
  bool started_ = false;
  double last_ = 0.0;
  double max_step_ = 0.0;
};

}  // namespace tvkf
