#include "tvkf/costs.hpp"

#include <algorithm>
#include <cmath>

#include "tvkf/errors.hpp"
#include "tvkf/rng.hpp"

namespace tvkf {

namespace {

// kappa*e^x / (1 + kappa*e^x), computed as a shifted sigmoid for stability.
double logistic_term(double kappa, double x) {
  return 1.0 / (1.0 + std::exp(-(x + std::log(kappa))));
}

// log(1 + kappa*e^x) without overflow for large x.
double log1p_kexp(double kappa, double x) {
  const double shifted = x + std::log(kappa);
  if (shifted > 30.0) return shifted;
  return std::log1p(std::exp(shifted));
}

}  // namespace

Regularizer Regularizer::zero() { return Regularizer{}; }

Regularizer Regularizer::box(double lower, double upper) {
  if (!(lower < upper)) throw InvalidParams("box regularizer requires lower < upper");
  Regularizer r;
  r.kind_ = Kind::box;
  r.lower_ = lower;
  r.upper_ = upper;
  return r;
}

Regularizer Regularizer::l1(double weight) {
  if (weight < 0.0) throw InvalidParams("l1 weight must be nonnegative");
  Regularizer r;
  r.kind_ = Kind::l1;
  r.weight_ = weight;
  return r;
}

Vector Regularizer::prox(const Vector& u, double step) const {
  if (!(step > 0.0)) throw InvalidParams("prox step must be positive");
  switch (kind_) {
    case Kind::zero:
      return u;
    case Kind::box: {
      Vector out(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], lower_, upper_);
      return out;
    }
    case Kind::l1: {
      const double thr = step * weight_;
      Vector out(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > thr)
          out[i] = u[i] - thr;
        else if (u[i] < -thr)
          out[i] = u[i] + thr;
        else
          out[i] = 0.0;
      }
      return out;
    }
  }
  return u;
}

SmoothCost ride_hail_cost(const RideHailParams& params) {
  if (!(params.kappa > 0.0)) throw InvalidParams("ride_hail_cost requires kappa > 0");
  const std::size_t n = params.n_companies;
  if (n == 0) throw InvalidParams("ride_hail_cost requires at least one company");
  Vector c = params.c.empty() ? Vector(n, 1.0) : params.c;
  if (c.size() != n) throw InvalidParams("ride_hail_cost c has wrong length");
  for (double ci : c)
    if (!(ci > 0.0)) throw InvalidParams("ride_hail_cost requires c_i > 0");
  const double kappa = params.kappa;
  const double sigma = params.sigma_couple;
  if (sigma < 0.0) throw InvalidParams("ride_hail_cost requires sigma_couple >= 0");

  SmoothCost cost;
  cost.dim_x = n;
  cost.dim_y = n;
  cost.mu = 1.0;
  // Quadratic term contributes 1, logistic curvature is at most 1/4, and the
  // coupling block 2*sigma*(n I - 11') is bounded by 4*sigma*n.
  cost.lip = 1.0 + 0.25 + 4.0 * sigma * static_cast<double>(n);

  cost.value = [n, c, kappa, sigma](const Vector& x, const Vector& y) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = x[i] - c[i] * y[i];
      v += 0.5 * r * r + log1p_kexp(kappa, x[i]);
      for (std::size_t j = 0; j < n; ++j) {
        const double d = x[i] - x[j];
        v += 0.5 * sigma * d * d;
      }
    }
    return v;
  };

  cost.grad = [n, c, kappa, sigma](const Vector& x, const Vector& y) {
    double sum_x = 0.0;
    for (double xi : x) sum_x += xi;
    Vector g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = (x[i] - c[i] * y[i]) + logistic_term(kappa, x[i]) +
             2.0 * sigma * (static_cast<double>(n) * x[i] - sum_x);
    }
    return g;
  };

  cost.hess = [n, kappa, sigma](const Vector& x, const Vector&) {
    Matrix hh(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = logistic_term(kappa, x[i]);
      for (std::size_t j = 0; j < n; ++j) hh(i, j) = -2.0 * sigma;
      hh(i, i) += 1.0 + s * (1.0 - s) + 2.0 * sigma * static_cast<double>(n);
    }
    return hh;
  };

  return cost;
}

LinearParamCost linear_param_cost(Matrix coupling, SmoothCost base) {
  if (base.dim_y != 0) throw InvalidParams("linear_param_cost base must be x-only");
  if (coupling.rows() != base.dim_x)
    throw DimensionMismatch("coupling rows must match base dimension");
  LinearParamCost out;
  out.c0 = linalg::spectral_norm(coupling);
  out.coupling = coupling;
  out.base = base;

  const Matrix m = std::move(coupling);
  const SmoothCost b = std::move(base);
  SmoothCost cost;
  cost.dim_x = b.dim_x;
  cost.dim_y = m.cols();
  cost.mu = b.mu;
  cost.lip = b.lip;
  const Vector empty_y;
  cost.value = [m, b, empty_y](const Vector& x, const Vector& y) {
    // base value plus the bilinear term y' * (coupling-gradient primitive);
    // with grad = base.grad + M y the scalar term is x' M y.
    double bi = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) bi += x[i] * m(i, j) * y[j];
    return b.value(x, empty_y) + bi;
  };
  cost.grad = [m, b, empty_y](const Vector& x, const Vector& y) {
    return linalg::add(b.grad(x, empty_y), linalg::matvec(m, y));
  };
  cost.hess = [b, empty_y](const Vector& x, const Vector&) { return b.hess(x, empty_y); };

  out.cost = std::move(cost);
  return out;
}

SmoothCost diag_quadratic_cost(const Vector& d) {
  if (d.empty()) throw InvalidParams("diag_quadratic_cost requires a nonempty diagonal");
  double lo = d[0], hi = d[0];
  for (double v : d) {
    if (!(v > 0.0)) throw InvalidParams("diag_quadratic_cost requires positive diagonal");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  SmoothCost cost;
  cost.dim_x = d.size();
  cost.dim_y = 0;
  cost.mu = lo;
  cost.lip = hi;
  cost.value = [d](const Vector& x, const Vector&) {
    double v = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) v += 0.5 * d[i] * x[i] * x[i];
    return v;
  };
  cost.grad = [d](const Vector& x, const Vector&) {
    Vector g(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) g[i] = d[i] * x[i];
    return g;
  };
  cost.hess = [d](const Vector&, const Vector&) { return Matrix::diagonal(d); };
  return cost;
}

LinearParamCost quadratic_tracking_cost(const Matrix& a) {
  const std::size_t n = a.rows();
  SmoothCost base = diag_quadratic_cost(Vector(n, 1.0));
  const Matrix a_copy = a;
  base.value = [a_copy, n](const Vector& x, const Vector&) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += 0.5 * x[i] * x[i];
    return v;
  };
  LinearParamCost lp = linear_param_cost(linalg::scale(-1.0, a), std::move(base));
  // Complete the square so the carried value matches 0.5*||x - A y||^2.
  const Matrix a2 = a;
  SmoothCost& cost = lp.cost;
  cost.value = [a2](const Vector& x, const Vector& y) {
    const Vector r = linalg::sub(x, linalg::matvec(a2, y));
    const double nrm = linalg::norm2(r);
    return 0.5 * nrm * nrm;
  };
  return lp;
}

NominalTrajectory sinusoid_nominal(std::size_t dim, double base,
                                   const std::vector<double>& amplitudes,
                                   const std::vector<double>& periods) {
  if (amplitudes.size() != periods.size())
    throw InvalidParams("sinusoid_nominal needs one period per amplitude");
  const double two_pi = 6.283185307179586476925286766559;
  std::vector<double> omegas(periods.size());
  for (std::size_t m = 0; m < periods.size(); ++m) {
    if (!(periods[m] > 0.0)) throw InvalidParams("sinusoid periods must be positive");
    omegas[m] = two_pi / periods[m];
  }
  NominalTrajectory out;
  // Per-component bound on |d^j y_i / dt^j| is sum_m amp_m * omega_m^j; the
  // vector bound stacks identical components.
  double worst = 0.0;
  for (int order = 1; order <= 3; ++order) {
    double comp = 0.0;
    for (std::size_t m = 0; m < omegas.size(); ++m)
      comp += std::abs(amplitudes[m]) * std::pow(omegas[m], order);
    worst = std::max(worst, comp * std::sqrt(static_cast<double>(dim)));
  }
  out.bound_c = worst;
  const std::vector<double> amps = amplitudes;
  out.value = [dim, base, amps, omegas](double t) {
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = base;
      const double phase = 0.7 * static_cast<double>(i);
      for (std::size_t m = 0; m < omegas.size(); ++m)
        acc += amps[m] * std::sin(omegas[m] * t + phase + 0.3 * static_cast<double>(m));
      v[i] = acc;
    }
    return v;
  };
  return out;
}

std::function<Matrix(std::size_t)> constant_noise(std::size_t dim, double var) {
  if (var < 0.0) throw InvalidParams("noise variance must be nonnegative");
  return [dim, var](std::size_t) { return linalg::scale(var, Matrix::identity(dim)); };
}

Stream generate_stream(const StreamSpec& spec) {
  if (!(spec.h > 0.0)) throw InvalidParams("stream sampling period must be positive");
  if (!spec.nominal) throw InvalidParams("stream requires a nominal trajectory");
  Stream out;
  out.t.reserve(spec.horizon);
  out.y.reserve(spec.horizon);
  out.nominal.reserve(spec.horizon);
  Rng rng(spec.seed);
  for (std::size_t k = 0; k < spec.horizon; ++k) {
    const double t = static_cast<double>(k) * spec.h;
    Vector bar = spec.nominal(t);
    Vector sample = bar;
    if (spec.noise_cov) {
      const Matrix sigma = spec.noise_cov(k);
      if (sigma.rows() != bar.size() || sigma.cols() != bar.size())
        throw DimensionMismatch("noise covariance dimension mismatch");
      if (linalg::max_abs(sigma) > 0.0) {
        auto chol = linalg::cholesky(linalg::symmetrize(sigma));
        if (!chol) throw CovNotPSD("noise covariance failed Cholesky factorization");
        sample = linalg::add(bar, linalg::matvec(*chol, rng.normal_vector(bar.size())));
      }
    }
    out.t.push_back(t);
    out.nominal.push_back(std::move(bar));
    out.y.push_back(std::move(sample));
  }
  return out;
}

}  // namespace tvkf
