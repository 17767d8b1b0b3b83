#include "tvkf/contract.hpp"

#include <algorithm>
#include <cmath>

#include "tvkf/errors.hpp"

namespace tvkf {

GainSchedule GainSchedule::static_gain(Matrix k) {
  if (!k.square()) throw InvalidParams("static gain must be square");
  GainSchedule g;
  g.kind_ = Kind::static_matrix;
  g.k_ = std::move(k);
  return g;
}

GainSchedule GainSchedule::scalar_gain(double chi) {
  if (!(chi >= 0.0 && chi <= 1.0)) throw InvalidParams("scalar gain chi must lie in [0,1]");
  GainSchedule g;
  g.kind_ = Kind::scalar;
  g.chi_ = chi;
  return g;
}

GainSchedule GainSchedule::lpv_gain(Matrix w0, Matrix w1, Matrix x0, Matrix x1, double nu) {
  if (nu < 0.0) throw InvalidParams("lpv gain requires nu >= 0");
  if (!x0.square() || x1.rows() != x0.rows() || x1.cols() != x0.cols() ||
      w0.rows() != x0.rows() || w1.rows() != x0.rows())
    throw DimensionMismatch("lpv gain matrices must share the state dimension");
  if (!linalg::is_nsd(linalg::symmetrize(x1), 1e-9 * (1.0 + linalg::max_abs(x1))))
    throw InvalidParams("lpv gain requires X1 <= 0");
  for (double theta : {0.0, 1.0}) {
    Matrix y = linalg::add(x0, linalg::scale(theta - nu, x1));
    if (linalg::sym_eig_min(linalg::symmetrize(y)) <= 0.0)
      throw InvalidParams("lpv gain requires Y(theta) > 0 at the endpoints");
  }
  GainSchedule g;
  g.kind_ = Kind::lpv;
  g.w0_ = std::move(w0);
  g.w1_ = std::move(w1);
  g.x0_ = std::move(x0);
  g.x1_ = std::move(x1);
  g.nu_ = nu;
  return g;
}

Matrix lpv_gain_eval(const GainSchedule& gain, double theta) {
  if (gain.kind() != GainSchedule::Kind::lpv)
    throw InvalidParams("lpv_gain_eval requires an lpv gain schedule");
  const Matrix w = linalg::add(gain.w0(), linalg::scale(theta, gain.w1()));
  const Matrix y = linalg::add(gain.x0(), linalg::scale(theta - gain.nu(), gain.x1()));
  try {
    // K = W Y^{-1}  solved as  Y' K' = W'.
    const Matrix kt = linalg::solve_linear(linalg::transpose(y), linalg::transpose(w));
    return linalg::transpose(kt);
  } catch (const SingularMatrix&) {
    throw GainEvalFailure("Y(theta) is singular");
  }
}

Vector contract_step(const Vector& x_pred, const SmoothCost& cost, const Regularizer& reg,
                     const Vector& y_k, const StepSizes& steps, std::size_t c_steps,
                     const GainSchedule& gain, double theta) {
  const CorrectOutcome corr =
      correct_psi(x_pred, cost, reg, y_k, steps, c_steps, /*keep_points=*/false);
  switch (gain.kind()) {
    case GainSchedule::Kind::scalar: {
      const double chi = gain.chi();
      Vector out(x_pred.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1.0 - chi) * x_pred[i] + chi * corr.corrected[i];
      return out;
    }
    case GainSchedule::Kind::static_matrix: {
      const Matrix& k = gain.k();
      if (k.rows() != x_pred.size()) throw DimensionMismatch("gain dimension mismatch");
      const Matrix i_k = linalg::sub(Matrix::identity(k.rows()), k);
      return linalg::add(linalg::matvec(i_k, x_pred), linalg::matvec(k, corr.corrected));
    }
    case GainSchedule::Kind::lpv: {
      const Matrix k = lpv_gain_eval(gain, theta);
      if (k.rows() != x_pred.size()) throw DimensionMismatch("gain dimension mismatch");
      const Matrix i_k = linalg::sub(Matrix::identity(k.rows()), k);
      return linalg::add(linalg::matvec(i_k, x_pred), linalg::matvec(k, corr.corrected));
    }
  }
  return corr.corrected;
}

double theta_from_stream(const Vector& prev_y, const Vector& cur_y, double h,
                         const ThetaSignal& signal) {
  if (!(h > 0.0)) throw InvalidParams("theta_from_stream requires h > 0");
  if (!(signal.max_drift > 0.0)) throw InvalidParams("theta normalizer must be positive");
  const double lag = static_cast<double>(std::max<std::size_t>(signal.window, 1));
  const double drift = linalg::norm_inf(linalg::sub(cur_y, prev_y)) / (h * lag);
  return std::min(1.0, drift / signal.max_drift);
}

void ThetaTracker::observe(double theta) {
  if (started_) max_step_ = std::max(max_step_, std::abs(theta - last_));
  last_ = theta;
  started_ = true;
}

}  // namespace tvkf
