#include "tvkf/ekf.hpp"

#include "tvkf/errors.hpp"

namespace tvkf {

EkfState ekf_init(std::size_t n) {
  EkfState s;
  s.x_pred = Vector(n, 0.0);
  s.p_pred = Matrix::identity(n);
  s.x_corr = Vector(n, 0.0);
  s.p_corr = Matrix::identity(n);
  s.k = 0;
  return s;
}

Matrix jac_prediction(const SmoothCost& cost, PredictorKind kind, const DataHistory& history,
                      std::span<const Vector> points, double alpha) {
  const std::size_t n = cost.dim_x;
  Matrix f = Matrix::identity(n);
  const std::size_t p_steps = points.size();
  for (std::size_t p = 1; p <= p_steps; ++p) {
    const Vector& at = points[p_steps - p];
    if (at.size() != n) throw DimensionMismatch("prediction point dimension mismatch");
    const Matrix dj = predictor_jacobian(kind, cost, history, at);
    f = linalg::matmul(f, linalg::sub(Matrix::identity(n), linalg::scale(alpha, dj)));
  }
  return f;
}

Matrix jac_correction(const SmoothCost& cost, const Vector& y, std::span<const Vector> points,
                      double beta) {
  const std::size_t n = cost.dim_x;
  if (points.empty()) return Matrix(n, n);
  Matrix prod = Matrix::identity(n);
  const std::size_t c_steps = points.size();
  for (std::size_t c = 1; c <= c_steps; ++c) {
    const Vector& at = points[c_steps - c];
    if (at.size() != n) throw DimensionMismatch("correction point dimension mismatch");
    const Matrix hf = cost.hess(at, y);
    prod = linalg::matmul(prod, linalg::sub(Matrix::identity(n), linalg::scale(beta, hf)));
  }
  return linalg::sub(Matrix::identity(n), prod);
}

EkfState ekf_step(const EkfState& state, const SmoothCost& cost, PredictorKind kind,
                  const DataHistory& history, const StepSizes& steps, std::size_t p_steps,
                  std::size_t c_steps, const CovModel& cov, const Vector& y_k,
                  const EkfOptions& options) {
  const std::size_t n = cost.dim_x;
  const Regularizer none = Regularizer::zero();
  EkfState next;
  next.k = state.k + 1;

  // Correction: measurement is the C-step fixed-point residual at x_{k|k-1}.
  const CorrectOutcome corr = correct_psi(state.x_pred, cost, none, y_k, steps, c_steps);
  const Matrix h = jac_correction(cost, y_k, corr.points, steps.beta);
  const Matrix r = cov.r(state.k);

  Matrix gain(n, n);
  if (options.force_identity_gain) {
    gain = Matrix::identity(n);
  } else {
    const Matrix ph_t = linalg::matmul(state.p_pred, linalg::transpose(h));
    Matrix innov = linalg::add(linalg::matmul(h, ph_t), r);
    innov = linalg::symmetrize(innov);
    try {
      // K = P H' S^{-1}  solved as  S K' = (P H')'.
      const Matrix gain_t = linalg::solve_linear(innov, linalg::transpose(ph_t));
      gain = linalg::transpose(gain_t);
    } catch (const SingularMatrix&) {
      throw SingularInnovation("innovation matrix H P H' + R is singular");
    }
  }

  if (options.force_identity_gain) {
    // x + (corrected - x) reassociated so the recovered prediction-correction
    // iterate matches the plain method bit for bit.
    next.x_corr = corr.corrected;
  } else {
    next.x_corr = linalg::add(state.x_pred, linalg::matvec(gain, corr.residual));
  }
  const Matrix i_kh = linalg::sub(Matrix::identity(n), linalg::matmul(gain, h));
  if (options.joseph_form) {
    Matrix p = linalg::matmul(linalg::matmul(i_kh, state.p_pred), linalg::transpose(i_kh));
    p = linalg::add(p, linalg::matmul(linalg::matmul(gain, r), linalg::transpose(gain)));
    next.p_corr = linalg::symmetrize(p);
  } else {
    next.p_corr = linalg::symmetrize(linalg::matmul(i_kh, state.p_pred));
  }

  // Prediction: propagate through the P-step map and its Jacobian product.
  const PredictOutcome pred =
      predict_phi(next.x_corr, cost, none, kind, history, steps, p_steps);
  const Matrix f = jac_prediction(cost, pred.used, history, pred.points, steps.alpha);
  next.x_pred = pred.x;
  Matrix p_next = linalg::matmul(linalg::matmul(f, next.p_corr), linalg::transpose(f));
  p_next = linalg::add(p_next, cov.q(state.k));
  next.p_pred = linalg::symmetrize(p_next);
  return next;
}

Vector damped_newton_step(const SmoothCost& cost, const Vector& x, const Vector& y,
                          double beta) {
  const Matrix hf = cost.hess(x, y);
  const Vector g = cost.grad(x, y);
  const Vector dir = linalg::solve_linear(hf, g);
  return linalg::axpy(x, -beta, dir);
}

Matrix sample_covariance(const std::vector<Vector>& samples) {
  if (samples.size() < 2) throw InvalidParams("sample_covariance needs at least two samples");
  const std::size_t n = samples.front().size();
  Vector mean(n, 0.0);
  for (const auto& s : samples) mean = linalg::add(mean, s);
  mean = linalg::scale(1.0 / static_cast<double>(samples.size()), mean);
  Matrix cov(n, n);
  for (const auto& s : samples) {
    const Vector d = linalg::sub(s, mean);
    cov = linalg::add(cov, linalg::outer(d, d));
  }
  return linalg::scale(1.0 / static_cast<double>(samples.size() - 1), cov);
}

}  // namespace tvkf
