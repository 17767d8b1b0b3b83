// Prediction and correction operator machinery: step-size validation,
// contraction factors, extrapolation-based gradient predictors, the P-step
// prediction map, the C-step correction map with its fixed-point residual,
// and the zeta/xi bookkeeping terms used by the worst-case error bounds.
#pragma once

#include <cstddef>
#include <deque>
#include <utility>
#include <vector>

#include "tvkf/costs.hpp"
#include "tvkf/linalg.hpp"

namespace tvkf {

struct StepSizes {
  double alpha = 0.0;  // prediction step
  double beta = 0.0;   // correction step
};

// Throws StepTooLarge unless alpha < 2*mu/L^2 and beta < 2/L.
void check_step_sizes(const StepSizes& steps, double mu, double lip);

struct ContractionFactors {
  double rho_p = 0.0;
  double rho_c = 0.0;
};

// rho_p = sqrt(1 - 2*alpha*mu + alpha^2 L^2), rho_c = max(|1-beta*mu|, |1-beta*L|);
// both in [0,1) under the validated step bounds.
ContractionFactors contraction_factors(double mu, double lip, const StepSizes& steps);

// zeta = 1 if ell == 0 else rho^ell; xi = 0 if ell == 0 else 1 + rho^ell.
std::pair<double, double> zeta_xi(std::size_t ell, double rho);
double zeta(std::size_t ell, double rho);
double xi(std::size_t ell, double rho);

enum class PredictorKind { one_point, two_point, three_point };

// Extrapolation coefficients over (y_k, y_{k-1}, y_{k-2}); they sum to 1.
const std::vector<double>& predictor_coeffs(PredictorKind kind);

// Rolling buffer of the most recent data vectors (newest first), capped at
// the three points any predictor may need.
class DataHistory {
 public:
  void push(Vector y);
  std::size_t size() const { return buf_.size(); }
  bool empty() const { return buf_.empty(); }
  // i = 0 is the newest sample y_k.
  const Vector& at(std::size_t i) const { return buf_[i]; }

 private:
  std::deque<Vector> buf_;
};

// Degrades three -> two -> one point when the history is shorter than the
// requested predictor; throws EmptyHistory when no data exists at all.
PredictorKind effective_kind(PredictorKind kind, std::size_t available);

// Predicted gradient J(x) = sum_i coeff_i * grad(x, y_{k-i}); for costs whose
// gradient is affine in y this equals grad(x, sum_i coeff_i * y_{k-i}).
Vector predictor_gradient(PredictorKind kind, const SmoothCost& cost,
                          const DataHistory& history, const Vector& x);

// Jacobian of the predicted gradient: sum_i coeff_i * hess(x, y_{k-i}).
Matrix predictor_jacobian(PredictorKind kind, const SmoothCost& cost,
                          const DataHistory& history, const Vector& x);

struct PredictOutcome {
  Vector x;                    // iterate after P proximal gradient steps
  std::vector<Vector> points;  // x^0 .. x^{P-1}, kept when requested
  PredictorKind used = PredictorKind::one_point;
};

// P applications of prox_{alpha g}(x - alpha * J(x)); P = 0 returns x
// unchanged. points holds the pre-step iterates needed for the prediction
// Jacobian product.
PredictOutcome predict_phi(const Vector& x, const SmoothCost& cost, const Regularizer& reg,
                           PredictorKind kind, const DataHistory& history,
                           const StepSizes& steps, std::size_t p_steps,
                           bool keep_points = true);

struct CorrectOutcome {
  Vector residual;             // z = corrected - x, the fixed-point residual
  Vector corrected;
  std::vector<Vector> points;  // x^0 .. x^{C-1}
};

// C applications of prox_{beta g}(x - beta * grad(x, y)) starting at x;
// residual is zero at a fixed point and for C = 0.
CorrectOutcome correct_psi(const Vector& x, const SmoothCost& cost, const Regularizer& reg,
                           const Vector& y, const StepSizes& steps, std::size_t c_steps,
                           bool keep_points = true);

}  // namespace tvkf
