// Problem models: smooth strongly-convex costs f(x; y) with gradient and
// Hessian access, proximable regularizers, and seeded data-stream
// generation around a nominal trajectory.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tvkf/linalg.hpp"

namespace tvkf {

// A mu-strongly-convex, lip-smooth cost in x, parametrized by a data vector
// y. The scalar value is carried alongside the derivatives so tests can run
// finite-difference checks.
struct SmoothCost {
  std::size_t dim_x = 0;
  std::size_t dim_y = 0;
  double mu = 0.0;
  double lip = 0.0;
  std::function<double(const Vector&, const Vector&)> value;
  std::function<Vector(const Vector&, const Vector&)> grad;
  std::function<Matrix(const Vector&, const Vector&)> hess;
};

class Regularizer {
 public:
  enum class Kind { zero, box, l1 };

  static Regularizer zero();
  static Regularizer box(double lower, double upper);
  static Regularizer l1(double weight);

  Kind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double weight() const { return weight_; }

  // prox_{step*g}(u); zero -> u, box -> clamp, l1 -> soft threshold.
  Vector prox(const Vector& u, double step) const;

 private:
  Kind kind_ = Kind::zero;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double weight_ = 0.0;
};

struct RideHailParams {
  std::size_t n_companies = 5;
  Vector c;                    // per-company demand multipliers, default all 1
  double kappa = 0.02;         // logistic regularization weight
  double sigma_couple = 0.1;   // pairwise coupling weight
  double box_lower = 100.0;
  double box_upper = 1000.0;
};

// Fleet-cap cost: per company i, 0.5*(x_i - c_i y_i)^2 + log(1 + kappa e^{x_i})
// + (sigma/2) sum_j (x_i - x_j)^2. Gradient is affine in y with coupling
// -diag(c). Reported constants are certified bounds, not tight values:
// mu = 1, lip = 1 + 1/4 + 4*sigma*n.
SmoothCost ride_hail_cost(const RideHailParams& params);

// Cost whose gradient is affine in the data: grad(x, y) = base.grad(x) +
// coupling * y, with coupling of shape dim_x x dim_y. c0 bounds the
// y-sensitivity of the gradient (largest singular value of the coupling).
struct LinearParamCost {
  Matrix coupling;
  SmoothCost base;  // x-only cost (dim_y == 0)
  double c0 = 0.0;
  SmoothCost cost;
};

LinearParamCost linear_param_cost(Matrix coupling, SmoothCost base);

// 0.5 * x' diag(d) x as an x-only base cost, eigenvalues of d in [mu, lip].
SmoothCost diag_quadratic_cost(const Vector& d);

// 0.5 * ||x - A y||^2: tracking cost with identity Hessian, coupling -A.
LinearParamCost quadratic_tracking_cost(const Matrix& a);

// Nominal trajectory plus the analytic bound C on its first three time
// derivatives (max over orders of the 2-norm bound).
struct NominalTrajectory {
  std::function<Vector(double)> value;
  double bound_c = 0.0;
};

// Mixture of sinusoids per component: base + sum_m amp[m] * sin(2*pi*t/period[m]
// + phase shifted per component). bound_c is computed from amplitudes and
// angular frequencies.
NominalTrajectory sinusoid_nominal(std::size_t dim, double base,
                                   const std::vector<double>& amplitudes,
                                   const std::vector<double>& periods);

struct StreamSpec {
  double h = 1.0;              // sampling period, seconds
  std::size_t horizon = 0;     // number of samples K
  std::function<Vector(double)> nominal;
  std::function<Matrix(std::size_t)> noise_cov;  // Sigma_k, PSD
  std::uint64_t seed = 0;
  double bound_c = 0.0;        // bound on nominal derivative norms
  double bound_sigma = 0.0;    // bound on sup_k sqrt(tr Sigma_k)
};

// Constant scalar-variance covariance helper: var * I_dim.
std::function<Matrix(std::size_t)> constant_noise(std::size_t dim, double var);

struct Stream {
  std::vector<double> t;
  std::vector<Vector> y;        // noisy samples nominal(t_k) + e_k
  std::vector<Vector> nominal;  // noise-free samples, for ground truth
};

// y_k = nominal(k*h) + chol(Sigma_k) * z_k with z_k standard normal from the
// seeded generator; deterministic for a fixed seed. Throws CovNotPSD when a
// covariance fails its Cholesky factorization.
Stream generate_stream(const StreamSpec& spec);

}  // namespace tvkf
