#include "tvkf/gain_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "tvkf/errors.hpp"

namespace tvkf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLambdaCap = 1e15;
// Returned gamma2^2 values are inflated by this factor so certificates
// re-pass the eigenvalue oracle strictly despite roundoff.
constexpr double kCertSlack = 1e-9;

// One Schur term numer/denom with the degenerate-multiplier rules.
double rank1_term(double numer_sq, double denom) {
  if (numer_sq == 0.0) return 0.0;
  if (denom <= 0.0) return kInf;
  return numer_sq / denom;
}

// p - [(p-w)^2/l1 + w^2/l2 + (q^2 (p-w)^2 + r^2 w^2)/g2sq]; feasible iff >= 0.
double rank1_margin(double p, double w, double q, double r, double lambda1, double lambda2,
                    double gamma2sq) {
  const double pw = p - w;
  double lhs = rank1_term(pw * pw, lambda1);
  lhs += rank1_term(w * w, lambda2);
  lhs += rank1_term(q * q * pw * pw + r * r * w * w, gamma2sq);
  return p - lhs;
}

double golden_min(double lo, double hi, int iters, const std::function<double(double)>& f,
                  double* arg_out) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  double best_x = xm, best_f = fm;
  if (f1 < best_f) {
    best_f = f1;
    best_x = x1;
  }
  if (f2 < best_f) {
    best_f = f2;
    best_x = x2;
  }
  if (arg_out) *arg_out = best_x;
  return best_f;
}

struct LambdaSplit {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  // Max over the evaluation set of the implied gamma2^2; +inf if infeasible.
  double gamma2sq = kInf;
};

}  // namespace

void WorstCaseParams::validate() const {
  if (delta < 0.0 || tau_mu < 0.0 || sigma_c < 0.0)
    throw InvalidParams("worst-case parameters must be nonnegative");
  if (!(factors.rho_p >= 0.0 && factors.rho_p < 1.0) ||
      !(factors.rho_c >= 0.0 && factors.rho_c < 1.0))
    throw InvalidParams("contraction factors must lie in [0,1)");
  if (!(zeta_c() * zeta_p() < 1.0))
    throw InvalidParams("need zeta_C * zeta_P < 1 (P + C >= 1 with valid steps)");
}

WorstCaseParams worst_case_params_from_model(double c0, double c_bound, double h,
                                             double sigma_bound, double mu, double lip,
                                             const StepSizes& steps, std::size_t p_steps,
                                             std::size_t c_steps, PredictorKind kind) {
  if (!(c0 >= 0.0) || !(c_bound >= 0.0) || !(h > 0.0) || !(sigma_bound >= 0.0) || !(mu > 0.0))
    throw InvalidParams("model bounds must be positive where required");
  WorstCaseParams wc;
  wc.factors = contraction_factors(mu, lip, steps);
  wc.p_steps = p_steps;
  wc.c_steps = c_steps;
  wc.delta = c0 * h / mu;
  double tau = 0.0;
  switch (kind) {
    case PredictorKind::one_point:
      tau = c0 * c_bound * h + c0 * sigma_bound;
      break;
    case PredictorKind::two_point:
      tau = c0 * c_bound * h * h + 3.0 * c0 * sigma_bound;
      break;
    case PredictorKind::three_point:
      tau = c0 * c_bound * h * h * h + 7.0 * c0 * sigma_bound;
      break;
  }
  wc.tau_mu = tau / mu;
  const double sigma = c0 * sigma_bound;
  wc.sigma_c = steps.beta * sigma / (1.0 - wc.factors.rho_c);
  wc.validate();
  return wc;
}

double asymptotic_error_bound(double chi, const WorstCaseParams& wc) {
  wc.validate();
  if (!(chi >= 0.0 && chi <= 1.0)) throw InvalidParams("chi must lie in [0,1]");
  const double zp = wc.zeta_p();
  const double xp = wc.xi_p();
  const double zc = wc.zeta_c();
  const double varrho = (1.0 - chi) * zp + chi * zc * zp;
  if (varrho >= 1.0) throw DivergentConfig("combined contraction factor is >= 1");
  const double core = zp * wc.delta + xp * wc.tau_mu;
  return ((1.0 - chi) * core + chi * (zc * core + wc.sigma_c)) / (1.0 - varrho);
}

ChiChoice tune_chi(const WorstCaseParams& wc) {
  wc.validate();
  auto bound_at = [&wc](double chi) {
    try {
      return asymptotic_error_bound(chi, wc);
    } catch (const DivergentConfig&) {
      return kInf;
    }
  };
  // The bound is linear-fractional in chi with positive denominator, hence
  // monotone on [0,1]: comparing the endpoints decides the sign condition.
  const double b0 = bound_at(0.0);
  const double b1 = bound_at(1.0);
  if (b1 <= b0 + 1e-12 * std::max({std::abs(b0), std::abs(b1), 1.0})) return {1.0, b1};
  return {0.0, b0};
}

LmiScalarParams lmi_params_from_worst_case(const WorstCaseParams& wc, double rho) {
  wc.validate();
  LmiScalarParams p;
  p.omega1 = wc.zeta_p();
  p.omega2 = wc.zeta_c();
  const double root2 = std::sqrt(2.0);
  p.q = root2 * wc.xi_p() * wc.tau_mu;
  p.r = root2 * (wc.zeta_c() * wc.xi_p() * wc.tau_mu + wc.sigma_c);
  p.rho = rho;
  p.delta = wc.delta;
  return p;
}

bool lmi_feasible_scalar(double p, double w, double lambda1, double lambda2, double gamma2sq,
                         const LmiScalarParams& params) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || gamma2sq < 0.0) return false;
  if (p < 1.0) return false;
  const double w1sq = params.omega1 * params.omega1;
  const double w12sq = w1sq * params.omega2 * params.omega2;
  if (params.rho * params.rho * p < lambda1 * w1sq + lambda2 * w12sq) return false;
  return rank1_margin(p, w, params.q, params.r, lambda1, lambda2, gamma2sq) >= 0.0;
}

Matrix lmi_block(const Matrix& x, const Matrix& w, const Matrix& q, const Matrix& r,
                 double lambda1, double lambda2, double gamma2sq) {
  const std::size_t n = x.rows();
  if (!x.square() || w.rows() != n || w.cols() != n || q.rows() != n || r.rows() != n)
    throw DimensionMismatch("lmi_block requires n x n inputs");
  const Matrix xwt = linalg::sub(x, linalg::transpose(w));
  const Matrix wt = linalg::transpose(w);
  const Matrix qxwt = linalg::matmul(q, xwt);
  const Matrix rwt = linalg::matmul(r, wt);

  Matrix m(5 * n, 5 * n);
  auto put = [&m, n](std::size_t bi, std::size_t bj, const Matrix& blk, double sign) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(bi * n + i, bj * n + j) = sign * blk(i, j);
  };
  const Matrix eye = Matrix::identity(n);
  put(0, 0, eye, -lambda1);
  put(1, 1, eye, -lambda2);
  put(2, 2, eye, -gamma2sq);
  put(3, 3, eye, -gamma2sq);
  put(4, 4, x, -1.0);
  put(0, 4, xwt, 1.0);
  put(1, 4, wt, 1.0);
  put(2, 4, qxwt, 1.0);
  put(3, 4, rwt, 1.0);
  put(4, 0, linalg::transpose(xwt), 1.0);
  put(4, 1, linalg::transpose(wt), 1.0);
  put(4, 2, linalg::transpose(qxwt), 1.0);
  put(4, 3, linalg::transpose(rwt), 1.0);
  return m;
}

bool lmi_feasible_matrix(const Matrix& x, const Matrix& w, double lambda1, double lambda2,
                         double gamma1sq, double gamma2sq, const Matrix& q, const Matrix& r,
                         const LmiScalarParams& params, double tol) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || gamma2sq < 0.0) return false;
  const std::size_t n = x.rows();
  const Matrix eye = Matrix::identity(n);
  const double w1sq = params.omega1 * params.omega1;
  const double w12sq = w1sq * params.omega2 * params.omega2;
  const double budget = lambda1 * w1sq + lambda2 * w12sq;

  const Matrix xs = linalg::symmetrize(x);
  const Matrix c1 = linalg::sub(linalg::scale(params.rho * params.rho, xs),
                                linalg::scale(budget, eye));
  if (!linalg::is_psd(c1, tol)) return false;
  if (!linalg::is_psd(linalg::sub(xs, eye), tol)) return false;
  if (!linalg::is_psd(linalg::sub(linalg::scale(gamma1sq, eye), xs), tol)) return false;

  const Matrix block = lmi_block(x, w, q, r, lambda1, lambda2, gamma2sq);
  return linalg::is_nsd(linalg::symmetrize(block), tol);
}

bool lpv_feasible_matrix(const Matrix& x0, const Matrix& x1, const Matrix& w0,
                         const Matrix& w1, double lambda1, double lambda2, double gamma1sq,
                         double gamma2sq, const Matrix& q0, const Matrix& q1, const Matrix& r,
                         double nu, const std::vector<double>& theta_grid,
                         const LmiScalarParams& params, double tol) {
  if (lambda1 < 0.0 || lambda2 < 0.0 || gamma2sq < 0.0 || nu < 0.0) return false;
  const std::size_t n = x0.rows();
  const Matrix eye = Matrix::identity(n);
  const double w1sq = params.omega1 * params.omega1;
  const double w12sq = w1sq * params.omega2 * params.omega2;
  const double budget = lambda1 * w1sq + lambda2 * w12sq;

  const Matrix x_end = linalg::symmetrize(linalg::add(x0, x1));
  if (!linalg::is_psd(linalg::sub(linalg::scale(params.rho * params.rho, x_end),
                                  linalg::scale(budget, eye)),
                      tol))
    return false;
  if (!linalg::is_psd(linalg::sub(x_end, eye), tol)) return false;
  if (!linalg::is_psd(linalg::sub(linalg::scale(gamma1sq, eye), linalg::symmetrize(x0)), tol))
    return false;
  if (!linalg::is_nsd(linalg::symmetrize(x1), tol)) return false;

  for (double theta : theta_grid) {
    const Matrix y = linalg::add(x0, linalg::scale(theta - nu, x1));
    const Matrix w = linalg::add(w0, linalg::scale(theta, w1));
    const Matrix q = linalg::add(q0, linalg::scale(theta, q1));
    const Matrix block = lmi_block(y, w, q, r, lambda1, lambda2, gamma2sq);
    if (!linalg::is_nsd(linalg::symmetrize(block), tol)) return false;
  }
  return true;
}

GainSchedule GainCertificate::materialize(std::size_t n) const {
  if (kind == Kind::static_scaled)
    return GainSchedule::static_gain(linalg::scale(kappa, Matrix::identity(n)));
  const Matrix eye = Matrix::identity(n);
  return GainSchedule::lpv_gain(linalg::scale(w0, eye), linalg::scale(w1, eye),
                                linalg::scale(x0, eye), linalg::scale(x1, eye), nu);
}

std::vector<double> default_rho_grid(const LmiScalarParams& params) {
  std::vector<double> grid;
  for (int i = 0; i < 33; ++i)
    grid.push_back(0.5 + (0.98 - 0.5) * static_cast<double>(i) / 32.0);
  const double floor_rho = params.omega1 * params.omega2 + 1e-3;
  if (floor_rho > 0.0 && floor_rho < 1.0) grid.push_back(floor_rho);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> default_theta_grid() { return {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}; }

namespace {

// Multiplier split with a saturated budget B = rho^2 * scale: lambda1 = s*L,
// lambda2 = (1-s)*L with L chosen so the budget binds. eval maps the split to
// the implied gamma2^2 over the active constraint set.
LambdaSplit best_lambda_split(double budget, double omega1, double omega2,
                              const std::function<double(double, double)>& gamma2sq_of) {
  const double w1sq = omega1 * omega1;
  const double w12sq = w1sq * omega2 * omega2;
  // Slightly under-saturate so roundoff cannot push the multipliers past the
  // budget in the exact scalar comparison.
  const double safe_budget = budget * (1.0 - 1e-12);
  auto lambdas_at = [&](double s) {
    const double denom = s * w1sq + (1.0 - s) * w12sq;
    const double total = denom > safe_budget / kLambdaCap ? safe_budget / denom : kLambdaCap;
    return std::pair<double, double>{s * total, (1.0 - s) * total};
  };
  auto objective = [&](double s) {
    const auto [l1, l2] = lambdas_at(s);
    return gamma2sq_of(l1, l2);
  };
  double s_star = 0.5;
  double best = golden_min(1e-12, 1.0 - 1e-12, 48, objective, &s_star);
  // Endpoints handle the kappa = 0 / kappa = 1 degeneracies exactly.
  for (double s : {1e-12, 0.5, 1.0 - 1e-12}) {
    const double v = objective(s);
    if (v < best) {
      best = v;
      s_star = s;
    }
  }
  const auto [l1, l2] = lambdas_at(s_star);
  return {l1, l2, best};
}

struct StaticCandidate {
  double rho = 0.0;
  double kappa = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gamma2sq = kInf;
  double ae = kInf;
};

// Best feasible scalar candidate at fixed (rho, kappa) with p = 1 and the
// multiplier budget saturated.
std::optional<StaticCandidate> static_candidate_at(double rho, double kappa,
                                                   const LmiScalarParams& base) {
  LmiScalarParams params = base;
  params.rho = rho;
  const double p = 1.0;
  const double w = kappa;
  auto gamma2sq_of = [&](double l1, double l2) {
    const double pw = p - w;
    const double t_lambda = rank1_term(pw * pw, l1) + rank1_term(w * w, l2);
    const double slack = p - t_lambda;
    const double noise = params.q * params.q * pw * pw + params.r * params.r * w * w;
    if (noise == 0.0) return slack >= 0.0 ? 0.0 : kInf;
    if (slack <= 0.0) return kInf;
    return noise / slack;
  };
  const LambdaSplit split =
      best_lambda_split(rho * rho * p, params.omega1, params.omega2, gamma2sq_of);
  if (!std::isfinite(split.gamma2sq)) return std::nullopt;

  StaticCandidate cand;
  cand.rho = rho;
  cand.kappa = kappa;
  cand.lambda1 = split.lambda1;
  cand.lambda2 = split.lambda2;
  cand.gamma2sq = split.gamma2sq * (1.0 + kCertSlack);
  if (!lmi_feasible_scalar(p, w, cand.lambda1, cand.lambda2, cand.gamma2sq, params))
    return std::nullopt;
  const Matrix eye1 = Matrix::identity(1);
  if (!lmi_feasible_matrix(eye1, linalg::scale(w, eye1), cand.lambda1, cand.lambda2, p,
                           cand.gamma2sq, linalg::scale(params.q, eye1),
                           linalg::scale(params.r, eye1), params, 1e-12))
    return std::nullopt;
  cand.ae = (std::sqrt(p) * rho * params.delta + std::sqrt(cand.gamma2sq)) / (1.0 - rho);
  return cand;
}

bool improves(double ae, double best_ae) { return ae < best_ae - 1e-12 * (1.0 + best_ae); }

}  // namespace

GainCertificate design_static_gain(const LmiScalarParams& params,
                                   const std::vector<double>& rho_grid) {
  if (rho_grid.empty()) throw InvalidParams("design_static_gain needs a nonempty rho grid");
  std::vector<double> grid = rho_grid;
  std::sort(grid.begin(), grid.end());

  std::optional<StaticCandidate> best;
  for (double rho : grid) {
    if (!(rho > 0.0 && rho < 1.0)) continue;
    // Coarse scan over kappa, then a golden refinement around the best cell.
    double local_best_ae = kInf, local_best_kappa = 0.0;
    bool any = false;
    for (int i = 0; i <= 100; ++i) {
      const double kappa = static_cast<double>(i) / 100.0;
      const auto cand = static_candidate_at(rho, kappa, params);
      if (cand && cand->ae < local_best_ae) {
        local_best_ae = cand->ae;
        local_best_kappa = kappa;
        any = true;
      }
    }
    if (any) {
      auto ae_of = [&](double kappa) {
        const auto cand = static_candidate_at(rho, kappa, params);
        return cand ? cand->ae : kInf;
      };
      double refined = local_best_kappa;
      golden_min(std::max(0.0, local_best_kappa - 0.01),
                 std::min(1.0, local_best_kappa + 0.01), 40, ae_of, &refined);
      for (double kappa : {refined, local_best_kappa, 0.0, 1.0}) {
        const auto cand = static_candidate_at(rho, kappa, params);
        if (cand && (!best || improves(cand->ae, best->ae))) best = cand;
      }
    }
  }
  if (!best) throw NoFeasiblePoint("no rho in the grid admits a feasible scalar design");

  GainCertificate cert;
  cert.kind = GainCertificate::Kind::static_scaled;
  cert.kappa = best->kappa;
  cert.p = 1.0;
  cert.w = best->kappa;
  cert.rho = best->rho;
  cert.gamma1 = 1.0;
  cert.gamma2 = std::sqrt(best->gamma2sq);
  cert.lambda1 = best->lambda1;
  cert.lambda2 = best->lambda2;
  cert.params = params;
  cert.params.rho = best->rho;
  cert.ae_bound = best->ae;
  return cert;
}

namespace {

struct LpvCandidate {
  double rho = 0.0;
  double x1 = 0.0, w0 = 0.0, w1 = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double gamma2sq = kInf;
  double ae = kInf;
  double x0() const { return 1.0 - x1; }
};

// Fixed (rho, x1, endpoint gains): the remaining freedom is the multiplier
// split, shared across grid thetas. Oracle verification is deferred to the
// per-rho winners; the grid scan itself stays arithmetic-only.
std::optional<LpvCandidate> lpv_candidate_at(double rho, double x1, double kappa0,
                                             double kappa1, double q0, double q1, double nu,
                                             const std::vector<double>& theta_grid,
                                             const LmiScalarParams& base,
                                             bool verify = false) {
  LmiScalarParams params = base;
  params.rho = rho;
  const double x0 = 1.0 - x1;
  const double y_at_0 = x0 - nu * x1;
  const double y_at_1 = x0 + (1.0 - nu) * x1;
  if (y_at_0 <= 0.0 || y_at_1 <= 0.0) return std::nullopt;
  const double w0 = kappa0 * y_at_0;
  const double w1 = kappa1 * y_at_1 - w0;

  auto gamma2sq_of = [&](double l1, double l2) {
    double worst = 0.0;
    for (double theta : theta_grid) {
      const double y = x0 + (theta - nu) * x1;
      const double w = w0 + theta * w1;
      const double q_theta = q0 + theta * q1;
      const double yw = y - w;
      const double t_lambda = rank1_term(yw * yw, l1) + rank1_term(w * w, l2);
      const double slack = y - t_lambda;
      const double noise = q_theta * q_theta * yw * yw + params.r * params.r * w * w;
      if (noise == 0.0) {
        if (slack < 0.0) return kInf;
        continue;
      }
      if (slack <= 0.0) return kInf;
      worst = std::max(worst, noise / slack);
    }
    return worst;
  };
  // Budget binds at theta = 1: rho^2 (x0 + x1) = rho^2 under the x0 + x1 = 1
  // normalization.
  const LambdaSplit split = best_lambda_split(rho * rho, params.omega1, params.omega2,
                                              gamma2sq_of);
  if (!std::isfinite(split.gamma2sq)) return std::nullopt;

  LpvCandidate cand;
  cand.rho = rho;
  cand.x1 = x1;
  cand.w0 = w0;
  cand.w1 = w1;
  cand.lambda1 = split.lambda1;
  cand.lambda2 = split.lambda2;
  cand.gamma2sq = split.gamma2sq * (1.0 + kCertSlack);

  if (verify) {
    const Matrix eye1 = Matrix::identity(1);
    if (!lpv_feasible_matrix(linalg::scale(x0, eye1), linalg::scale(x1, eye1),
                             linalg::scale(w0, eye1), linalg::scale(w1, eye1), cand.lambda1,
                             cand.lambda2, x0, cand.gamma2sq, linalg::scale(q0, eye1),
                             linalg::scale(q1, eye1), linalg::scale(params.r, eye1), nu,
                             theta_grid, params, 1e-12))
      return std::nullopt;
  }
  cand.ae = (std::sqrt(x0) * rho * params.delta + std::sqrt(cand.gamma2sq)) / (1.0 - rho);
  return cand;
}

}  // namespace

GainCertificate design_lpv_gain(const LmiScalarParams& params, double q0, double q1, double nu,
                                const std::vector<double>& theta_grid,
                                const std::vector<double>& rho_grid) {
  if (theta_grid.empty() || rho_grid.empty())
    throw InvalidParams("design_lpv_gain needs nonempty grids");
  if (q0 < 0.0 || q1 < 0.0 || nu < 0.0)
    throw InvalidParams("design_lpv_gain needs q0, q1, nu >= 0");

  std::vector<double> grid = rho_grid;
  std::sort(grid.begin(), grid.end());

  std::optional<LpvCandidate> best;
  auto consider = [&best](const std::optional<LpvCandidate>& cand) {
    if (cand && (!best || improves(cand->ae, best->ae))) best = cand;
  };

  // The static design at the worst-case q is always admissible with
  // x1 = w1 = 0; seed the search with it.
  LmiScalarParams worst_q = params;
  worst_q.q = q0 + q1;
  std::optional<GainCertificate> static_seed;
  try {
    static_seed = design_static_gain(worst_q, rho_grid);
  } catch (const NoFeasiblePoint&) {
  }
  if (static_seed)
    consider(lpv_candidate_at(static_seed->rho, 0.0, static_seed->kappa, static_seed->kappa,
                              q0, q1, nu, theta_grid, params, /*verify=*/true));

  for (double rho : grid) {
    if (!(rho > 0.0 && rho < 1.0)) continue;
    LpvCandidate local;
    double local_k0 = 0.0, local_k1 = 0.0;
    bool any = false;
    for (int xi_idx = 0; xi_idx <= 12; ++xi_idx) {
      const double x1 = -0.05 * static_cast<double>(xi_idx);
      for (int i0 = 0; i0 <= 20; ++i0) {
        for (int i1 = 0; i1 <= 20; ++i1) {
          const double k0 = static_cast<double>(i0) / 20.0;
          const double k1 = static_cast<double>(i1) / 20.0;
          const auto cand = lpv_candidate_at(rho, x1, k0, k1, q0, q1, nu, theta_grid, params);
          if (cand && (!any || cand->ae < local.ae)) {
            local = *cand;
            local_k0 = k0;
            local_k1 = k1;
            any = true;
          }
        }
      }
    }
    if (!any) continue;
    // One refinement pass around the winning cell.
    for (int d0 = -10; d0 <= 10; ++d0) {
      for (int d1 = -10; d1 <= 10; ++d1) {
        const double k0 = std::clamp(local_k0 + 0.005 * d0, 0.0, 1.0);
        const double k1 = std::clamp(local_k1 + 0.005 * d1, 0.0, 1.0);
        const auto cand =
            lpv_candidate_at(local.rho, local.x1, k0, k1, q0, q1, nu, theta_grid, params);
        if (cand && cand->ae < local.ae) {
          local = *cand;
          local_k0 = k0;
          local_k1 = k1;
        }
      }
    }
    const auto verified = lpv_candidate_at(local.rho, local.x1, local_k0, local_k1, q0, q1, nu,
                                           theta_grid, params, /*verify=*/true);
    consider(verified);
  }
  if (!best) throw NoFeasiblePoint("no rho in the grid admits a feasible LPV design");

  GainCertificate cert;
  cert.kind = GainCertificate::Kind::lpv;
  cert.x0 = best->x0();
  cert.x1 = best->x1;
  cert.w0 = best->w0;
  cert.w1 = best->w1;
  cert.nu = nu;
  cert.q0 = q0;
  cert.q1 = q1;
  cert.rho = best->rho;
  cert.gamma1 = std::sqrt(best->x0());
  cert.gamma2 = std::sqrt(best->gamma2sq);
  cert.lambda1 = best->lambda1;
  cert.lambda2 = best->lambda2;
  cert.params = params;
  cert.params.rho = best->rho;
  cert.ae_bound = best->ae;
  // Static-equivalent gain reported for reduction checks.
  cert.kappa = best->w0 / (best->x0() - nu * best->x1);
  cert.p = best->x0();
  cert.w = best->w0;
  return cert;
}

nlohmann::json certificate_to_json(const GainCertificate& cert) {
  nlohmann::json j;
  j["rho"] = cert.rho;
  j["gamma1"] = cert.gamma1;
  j["gamma2"] = cert.gamma2;
  j["lambda1"] = cert.lambda1;
  j["lambda2"] = cert.lambda2;
  j["ae_bound"] = cert.ae_bound;
  j["params_echo"] = {{"omega1", cert.params.omega1}, {"omega2", cert.params.omega2},
                      {"q", cert.params.q},           {"r", cert.params.r},
                      {"rho", cert.params.rho},       {"delta", cert.params.delta}};
  if (cert.kind == GainCertificate::Kind::static_scaled) {
    j["kind"] = "static";
    j["K"] = cert.kappa;
  } else {
    j["kind"] = "lpv";
    j["w0"] = cert.w0;
    j["w1"] = cert.w1;
    j["x0"] = cert.x0;
    j["x1"] = cert.x1;
    j["nu"] = cert.nu;
    j["q0"] = cert.q0;
    j["q1"] = cert.q1;
  }
  return j;
}

GainCertificate certificate_from_json(const nlohmann::json& j) {
  GainCertificate cert;
  const std::string kind = j.at("kind").get<std::string>();
  cert.rho = j.at("rho").get<double>();
  cert.gamma1 = j.at("gamma1").get<double>();
  cert.gamma2 = j.at("gamma2").get<double>();
  cert.lambda1 = j.at("lambda1").get<double>();
  cert.lambda2 = j.at("lambda2").get<double>();
  cert.ae_bound = j.at("ae_bound").get<double>();
  if (j.contains("params_echo")) {
    const auto& pe = j.at("params_echo");
    cert.params.omega1 = pe.value("omega1", 0.0);
    cert.params.omega2 = pe.value("omega2", 0.0);
    cert.params.q = pe.value("q", 0.0);
    cert.params.r = pe.value("r", 0.0);
    cert.params.rho = pe.value("rho", cert.rho);
    cert.params.delta = pe.value("delta", 0.0);
  }
  if (kind == "static") {
    cert.kind = GainCertificate::Kind::static_scaled;
    cert.kappa = j.at("K").get<double>();
    cert.p = 1.0;
    cert.w = cert.kappa;
  } else if (kind == "lpv") {
    cert.kind = GainCertificate::Kind::lpv;
    cert.w0 = j.at("w0").get<double>();
    cert.w1 = j.at("w1").get<double>();
    cert.x0 = j.at("x0").get<double>();
    cert.x1 = j.at("x1").get<double>();
    cert.nu = j.at("nu").get<double>();
    cert.q0 = j.value("q0", 0.0);
    cert.q1 = j.value("q1", 0.0);
    cert.kappa = cert.w0 / (cert.x0 - cert.nu * cert.x1);
  } else {
    throw InvalidParams("unknown certificate kind: " + kind);
  }
  return cert;
}

}  // namespace tvkf
