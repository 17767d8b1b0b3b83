// Offline gain synthesis and certification: worst-case asymptotic error
// bounds, scalar gain tuning, the scaled-identity feasibility program with
// its rank-1 reduction, the full-matrix eigenvalue feasibility oracle, and
// gridded LPV design.
#pragma once

#include <cstddef>
#include <vector>

#include "tvkf/contract.hpp"
#include "tvkf/linalg.hpp"
#include "tvkf/operators.hpp"

#include "json.hpp"

namespace tvkf {

struct WorstCaseParams {
  ContractionFactors factors;
  std::size_t p_steps = 0;
  std::size_t c_steps = 0;
  double delta = 0.0;    // optimizer drift bound
  double tau_mu = 0.0;   // prediction fixed-point error tau / mu
  double sigma_c = 0.0;  // accumulated correction noise beta*sigma/(1-rho_c)

  double zeta_p() const { return zeta(p_steps, factors.rho_p); }
  double xi_p() const { return xi(p_steps, factors.rho_p); }
  double zeta_c() const { return zeta(c_steps, factors.rho_c); }

  // Requires zeta_c * zeta_p < 1, i.e. P + C >= 1 under valid step sizes.
  void validate() const;
};

// Bounds for the extrapolation predictors: delta = C0 h / mu,
// tau = C0 C h^m + (2^m - 1) C0 Sigma for the m-point predictor,
// sigma_c = beta C0 Sigma / (1 - rho_c).
WorstCaseParams worst_case_params_from_model(double c0, double c_bound, double h,
                                             double sigma_bound, double mu, double lip,
                                             const StepSizes& steps, std::size_t p_steps,
                                             std::size_t c_steps, PredictorKind kind);

// Worst-case asymptotic tracking error of the scalar-gain filter; throws
// DivergentConfig when the combined contraction fails.
double asymptotic_error_bound(double chi, const WorstCaseParams& wc);

struct ChiChoice {
  double chi_star = 1.0;
  double bound = 0.0;
};

// The bound is linear-fractional in chi, hence monotone: the optimum sits at
// an endpoint. Ties return chi = 1.
ChiChoice tune_chi(const WorstCaseParams& wc);

struct LmiScalarParams {
  double omega1 = 0.0;  // zeta_{P,rho_p}
  double omega2 = 0.0;  // zeta_{C,rho_c}; the constraints only use omega1^2 and (omega1*omega2)^2
  double q = 0.0;       // prediction noise scale sqrt(2) * xi_p * tau_mu
  double r = 0.0;       // correction noise scale sqrt(2) * (zeta_c * xi_p * tau_mu + sigma_c)
  double rho = 0.0;     // contraction target in (0,1)
  double delta = 0.0;   // drift bound
};

LmiScalarParams lmi_params_from_worst_case(const WorstCaseParams& wc, double rho);

// Scaled-identity feasibility (X = pI, W = wI, Q = qI, R = rI): checks
// p >= 1, the multiplier budget rho^2 p >= l1 w1^2 + l2 (w1 w2)^2, and the
// rank-1 Schur reduction of the block condition. Zero-numerator terms are
// skipped when their multiplier vanishes; a vanished multiplier against a
// nonzero numerator is infeasible.
bool lmi_feasible_scalar(double p, double w, double lambda1, double lambda2, double gamma2sq,
                         const LmiScalarParams& params);

// Literal block assembly of the matrix conditions, decided by symmetric
// eigenvalue extrema: rho^2 X >= (l1 w1^2 + l2 w1^2 w2^2) I, I <= X <= g1^2 I,
// and the 5n x 5n block matrix negative semidefinite.
bool lmi_feasible_matrix(const Matrix& x, const Matrix& w, double lambda1, double lambda2,
                         double gamma1sq, double gamma2sq, const Matrix& q, const Matrix& r,
                         const LmiScalarParams& params, double tol = 0.0);

// The shared 5n x 5n block with diag(-l1 I, -l2 I, -g2^2 I, -g2^2 I, -X) and
// last block-column (X - W', W', Q(X - W'), R W').
Matrix lmi_block(const Matrix& x, const Matrix& w, const Matrix& q, const Matrix& r,
                 double lambda1, double lambda2, double gamma2sq);

// Parameter-varying counterpart of the matrix oracle at the affine endpoints
// plus the block condition at every grid theta, with Y(t) = X0 + (t - nu) X1
// and Q(t) = Q0 + t Q1.
bool lpv_feasible_matrix(const Matrix& x0, const Matrix& x1, const Matrix& w0,
                         const Matrix& w1, double lambda1, double lambda2, double gamma1sq,
                         double gamma2sq, const Matrix& q0, const Matrix& q1, const Matrix& r,
                         double nu, const std::vector<double>& theta_grid,
                         const LmiScalarParams& params, double tol = 0.0);

struct GainCertificate {
  enum class Kind { static_scaled, lpv };
  Kind kind = Kind::static_scaled;

  // Static design: K = kappa * I with X = p I, W = w I.
  double kappa = 0.0;
  double p = 1.0;
  double w = 0.0;

  // LPV design: scalar affine schedule, X1 <= 0, Y(t) = x0 + (t - nu) x1.
  double x0 = 1.0, x1 = 0.0, w0 = 0.0, w1 = 0.0;
  double nu = 0.0, q0 = 0.0, q1 = 0.0;

  double rho = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double ae_bound = 0.0;  // (gamma1 rho delta + gamma2) / (1 - rho)

  LmiScalarParams params;  // echo of the design inputs (rho mirrors .rho)

  GainSchedule materialize(std::size_t n) const;
};

// Grid-search defaults: 33 points on [0.5, 0.98] plus omega1*omega2 + margin.
std::vector<double> default_rho_grid(const LmiScalarParams& params);
// The four-point uniform grid {0, 1/3, 2/3, 1}.
std::vector<double> default_theta_grid();

// For each rho in the grid, minimizes gamma1^2 rho^2 delta^2 + gamma2^2 over
// the scaled-identity structure (nested derivative-free search, every
// candidate re-verified against the matrix oracle) and returns the
// certificate with the smallest ae_bound. Ties break toward smaller rho,
// then smaller kappa. Throws NoFeasiblePoint when every rho fails.
GainCertificate design_static_gain(const LmiScalarParams& params,
                                   const std::vector<double>& rho_grid);

// LPV design with q(theta) = q0 + theta q1 and static r. The static point
// (x1 = w1 = 0) at q0 + q1 is always a candidate, so feasibility of the
// static design implies feasibility here.
GainCertificate design_lpv_gain(const LmiScalarParams& params, double q0, double q1, double nu,
                                const std::vector<double>& theta_grid,
                                const std::vector<double>& rho_grid);

nlohmann::json certificate_to_json(const GainCertificate& cert);
GainCertificate certificate_from_json(const nlohmann::json& j);

}  // namespace tvkf
