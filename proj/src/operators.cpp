#include "tvkf/operators.hpp"

#include <cmath>

#include "tvkf/errors.hpp"

namespace tvkf {

void check_step_sizes(const StepSizes& steps, double mu, double lip) {
  if (!(mu > 0.0) || !(lip >= mu)) throw InvalidParams("need 0 < mu <= lip");
  if (!(steps.alpha > 0.0) || !(steps.beta > 0.0))
    throw InvalidParams("step sizes must be positive");
  if (steps.alpha >= 2.0 * mu / (lip * lip))
    throw StepTooLarge("prediction step alpha must satisfy alpha < 2*mu/L^2");
  if (steps.beta >= 2.0 / lip)
    throw StepTooLarge("correction step beta must satisfy beta < 2/L");
}

ContractionFactors contraction_factors(double mu, double lip, const StepSizes& steps) {
  check_step_sizes(steps, mu, lip);
  ContractionFactors f;
  f.rho_p = std::sqrt(1.0 - 2.0 * steps.alpha * mu + steps.alpha * steps.alpha * lip * lip);
  f.rho_c = std::max(std::abs(1.0 - steps.beta * mu), std::abs(1.0 - steps.beta * lip));
  return f;
}

std::pair<double, double> zeta_xi(std::size_t ell, double rho) {
  if (ell == 0) return {1.0, 0.0};
  const double pw = std::pow(rho, static_cast<double>(ell));
  return {pw, 1.0 + pw};
}

double zeta(std::size_t ell, double rho) { return zeta_xi(ell, rho).first; }

double xi(std::size_t ell, double rho) { return zeta_xi(ell, rho).second; }

const std::vector<double>& predictor_coeffs(PredictorKind kind) {
  static const std::vector<double> one{1.0};
  static const std::vector<double> two{2.0, -1.0};
  static const std::vector<double> three{3.0, -3.0, 1.0};
  switch (kind) {
    case PredictorKind::one_point:
      return one;
    case PredictorKind::two_point:
      return two;
    case PredictorKind::three_point:
      return three;
  }
  return one;
}

void DataHistory::push(Vector y) {
  buf_.push_front(std::move(y));
  while (buf_.size() > 3) buf_.pop_back();
}

PredictorKind effective_kind(PredictorKind kind, std::size_t available) {
  if (available == 0) throw EmptyHistory("predictor requires at least one data point");
  const std::size_t want = predictor_coeffs(kind).size();
  const std::size_t use = std::min(want, available);
  switch (use) {
    case 1:
      return PredictorKind::one_point;
    case 2:
      return PredictorKind::two_point;
    default:
      return PredictorKind::three_point;
  }
}

Vector predictor_gradient(PredictorKind kind, const SmoothCost& cost,
                          const DataHistory& history, const Vector& x) {
  const PredictorKind used = effective_kind(kind, history.size());
  const auto& coeffs = predictor_coeffs(used);
  Vector acc(cost.dim_x, 0.0);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    acc = linalg::axpy(acc, coeffs[i], cost.grad(x, history.at(i)));
  return acc;
}

Matrix predictor_jacobian(PredictorKind kind, const SmoothCost& cost,
                          const DataHistory& history, const Vector& x) {
  const PredictorKind used = effective_kind(kind, history.size());
  const auto& coeffs = predictor_coeffs(used);
  Matrix acc(cost.dim_x, cost.dim_x);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    acc = linalg::add(acc, linalg::scale(coeffs[i], cost.hess(x, history.at(i))));
  return acc;
}

PredictOutcome predict_phi(const Vector& x, const SmoothCost& cost, const Regularizer& reg,
                           PredictorKind kind, const DataHistory& history,
                           const StepSizes& steps, std::size_t p_steps, bool keep_points) {
  PredictOutcome out;
  out.used = p_steps > 0 ? effective_kind(kind, history.size()) : kind;
  out.x = x;
  if (keep_points) out.points.reserve(p_steps);
  for (std::size_t p = 0; p < p_steps; ++p) {
    if (keep_points) out.points.push_back(out.x);
    const Vector j = predictor_gradient(out.used, cost, history, out.x);
    out.x = reg.prox(linalg::axpy(out.x, -steps.alpha, j), steps.alpha);
  }
  return out;
}

CorrectOutcome correct_psi(const Vector& x, const SmoothCost& cost, const Regularizer& reg,
                           const Vector& y, const StepSizes& steps, std::size_t c_steps,
                           bool keep_points) {
  CorrectOutcome out;
  out.corrected = x;
  if (keep_points) out.points.reserve(c_steps);
  for (std::size_t c = 0; c < c_steps; ++c) {
    if (keep_points) out.points.push_back(out.corrected);
    const Vector g = cost.grad(out.corrected, y);
    out.corrected = reg.prox(linalg::axpy(out.corrected, -steps.beta, g), steps.beta);
  }
  out.residual = linalg::sub(out.corrected, x);
  return out;
}

}  // namespace tvkf
