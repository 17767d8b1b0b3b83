// Python bindings for the main operations: dense kernels, operator and
// bound arithmetic, gain synthesis, and the experiment harness. Matrices
// cross the boundary as nested lists; structured results cross as JSON
// strings that the package wrapper decodes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "json.hpp"
#include "tvkf/costs.hpp"
#include "tvkf/errors.hpp"
#include "tvkf/ekf.hpp"
#include "tvkf/gain_design.hpp"
#include "tvkf/harness.hpp"
#include "tvkf/linalg.hpp"
#include "tvkf/operators.hpp"

namespace py = pybind11;

namespace {

using Rows = std::vector<std::vector<double>>;

tvkf::Matrix to_matrix(const Rows& rows) {
  if (rows.empty()) return tvkf::Matrix();
  tvkf::Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw tvkf::DimensionMismatch("ragged matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows from_matrix(const tvkf::Matrix& m) {
  Rows rows(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

tvkf::Regularizer make_reg(const std::string& kind, double lower, double upper, double weight) {
  if (kind == "zero") return tvkf::Regularizer::zero();
  if (kind == "box") return tvkf::Regularizer::box(lower, upper);
  if (kind == "l1") return tvkf::Regularizer::l1(weight);
  throw tvkf::InvalidParams("unknown regularizer kind: " + kind);
}

tvkf::WorstCaseParams make_wc(double rho_p, double rho_c, std::size_t p_steps,
                              std::size_t c_steps, double delta, double tau_mu,
                              double sigma_c) {
  tvkf::WorstCaseParams wc;
  wc.factors = {rho_p, rho_c};
  wc.p_steps = p_steps;
  wc.c_steps = c_steps;
  wc.delta = delta;
  wc.tau_mu = tau_mu;
  wc.sigma_c = sigma_c;
  wc.validate();
  return wc;
}

tvkf::LmiScalarParams make_lmi_params(double omega1, double omega2, double q, double r,
                                      double rho, double delta) {
  return tvkf::LmiScalarParams{omega1, omega2, q, r, rho, delta};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kalman-style filters for time-varying stochastic convex optimization";

  // dense kernels
  m.def(
      "solve_linear",
      [](const Rows& a, const std::vector<double>& b) {
        return tvkf::linalg::solve_linear(to_matrix(a), b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "sym_eig_max",
      [](const Rows& mrows) { return tvkf::linalg::sym_eig_max(to_matrix(mrows)); },
      py::arg("m"));
  m.def(
      "sym_eigenvalues",
      [](const Rows& mrows) { return tvkf::linalg::sym_eigenvalues(to_matrix(mrows)); },
      py::arg("m"));
  m.def(
      "is_nsd",
      [](const Rows& mrows, double tol) { return tvkf::linalg::is_nsd(to_matrix(mrows), tol); },
      py::arg("m"), py::arg("tol") = 0.0);

  // operator machinery
  m.def(
      "prox",
      [](const std::string& kind, const std::vector<double>& u, double step, double lower,
         double upper, double weight) {
        return make_reg(kind, lower, upper, weight).prox(u, step);
      },
      py::arg("kind"), py::arg("u"), py::arg("step") = 1.0, py::arg("lower") = 0.0,
      py::arg("upper") = 1.0, py::arg("weight") = 1.0);
  m.def(
      "contraction_factors",
      [](double mu, double lip, double alpha, double beta) {
        const auto f = tvkf::contraction_factors(mu, lip, {alpha, beta});
        return std::make_pair(f.rho_p, f.rho_c);
      },
      py::arg("mu"), py::arg("lip"), py::arg("alpha"), py::arg("beta"));
  m.def("zeta_xi", [](std::size_t ell, double rho) { return tvkf::zeta_xi(ell, rho); },
        py::arg("ell"), py::arg("rho"));

  // worst-case bounds and scalar tuning
  m.def(
      "asymptotic_error_bound",
      [](double chi, double rho_p, double rho_c, std::size_t p_steps, std::size_t c_steps,
         double delta, double tau_mu, double sigma_c) {
        return tvkf::asymptotic_error_bound(
            chi, make_wc(rho_p, rho_c, p_steps, c_steps, delta, tau_mu, sigma_c));
      },
      py::arg("chi"), py::arg("rho_p"), py::arg("rho_c"), py::arg("p_steps"),
      py::arg("c_steps"), py::arg("delta"), py::arg("tau_mu"), py::arg("sigma_c"));
  m.def(
      "tune_chi",
      [](double rho_p, double rho_c, std::size_t p_steps, std::size_t c_steps, double delta,
         double tau_mu, double sigma_c) {
        const auto choice =
            tvkf::tune_chi(make_wc(rho_p, rho_c, p_steps, c_steps, delta, tau_mu, sigma_c));
        return std::make_pair(choice.chi_star, choice.bound);
      },
      py::arg("rho_p"), py::arg("rho_c"), py::arg("p_steps"), py::arg("c_steps"),
      py::arg("delta"), py::arg("tau_mu"), py::arg("sigma_c"));

  // feasibility oracles and gain synthesis
  m.def(
      "lmi_feasible_scalar",
      [](double p, double w, double lambda1, double lambda2, double gamma2sq, double omega1,
         double omega2, double q, double r, double rho, double delta) {
        return tvkf::lmi_feasible_scalar(p, w, lambda1, lambda2, gamma2sq,
                                         make_lmi_params(omega1, omega2, q, r, rho, delta));
      },
      py::arg("p"), py::arg("w"), py::arg("lambda1"), py::arg("lambda2"), py::arg("gamma2sq"),
      py::arg("omega1"), py::arg("omega2"), py::arg("q"), py::arg("r"), py::arg("rho"),
      py::arg("delta") = 0.0);
  m.def(
      "lmi_feasible_matrix",
      [](const Rows& x, const Rows& w, double lambda1, double lambda2, double gamma1sq,
         double gamma2sq, const Rows& q, const Rows& r, double omega1, double omega2,
         double rho, double tol) {
        return tvkf::lmi_feasible_matrix(to_matrix(x), to_matrix(w), lambda1, lambda2, gamma1sq,
                                         gamma2sq, to_matrix(q), to_matrix(r),
                                         make_lmi_params(omega1, omega2, 0.0, 0.0, rho, 0.0),
                                         tol);
      },
      py::arg("x"), py::arg("w"), py::arg("lambda1"), py::arg("lambda2"), py::arg("gamma1sq"),
      py::arg("gamma2sq"), py::arg("q"), py::arg("r"), py::arg("omega1"), py::arg("omega2"),
      py::arg("rho"), py::arg("tol") = 0.0);
  m.def(
      "design_static_gain_json",
      [](double omega1, double omega2, double q, double r, double delta,
         const std::vector<double>& rho_grid) {
        const auto params = make_lmi_params(omega1, omega2, q, r, 0.9, delta);
        const auto grid = rho_grid.empty() ? tvkf::default_rho_grid(params) : rho_grid;
        return tvkf::certificate_to_json(tvkf::design_static_gain(params, grid)).dump();
      },
      py::arg("omega1"), py::arg("omega2"), py::arg("q"), py::arg("r"), py::arg("delta"),
      py::arg("rho_grid") = std::vector<double>{});
  m.def(
      "design_lpv_gain_json",
      [](double omega1, double omega2, double q0, double q1, double r, double delta, double nu,
         const std::vector<double>& theta_grid, const std::vector<double>& rho_grid) {
        const auto params = make_lmi_params(omega1, omega2, q0 + q1, r, 0.9, delta);
        const auto tgrid = theta_grid.empty() ? tvkf::default_theta_grid() : theta_grid;
        const auto rgrid = rho_grid.empty() ? tvkf::default_rho_grid(params) : rho_grid;
        return tvkf::certificate_to_json(
                   tvkf::design_lpv_gain(params, q0, q1, nu, tgrid, rgrid))
            .dump();
      },
      py::arg("omega1"), py::arg("omega2"), py::arg("q0"), py::arg("q1"), py::arg("r"),
      py::arg("delta"), py::arg("nu") = 0.4, py::arg("theta_grid") = std::vector<double>{},
      py::arg("rho_grid") = std::vector<double>{});
  m.def(
      "worst_case_params",
      [](double c0, double c_bound, double h, double sigma_bound, double mu, double lip,
         double alpha, double beta, std::size_t p_steps, std::size_t c_steps,
         const std::string& kind) {
        const auto wc = tvkf::worst_case_params_from_model(
            c0, c_bound, h, sigma_bound, mu, lip, {alpha, beta}, p_steps, c_steps,
            tvkf::predictor_from_string(kind));
        py::dict d;
        d["rho_p"] = wc.factors.rho_p;
        d["rho_c"] = wc.factors.rho_c;
        d["delta"] = wc.delta;
        d["tau_mu"] = wc.tau_mu;
        d["sigma_c"] = wc.sigma_c;
        return d;
      },
      py::arg("c0"), py::arg("c_bound"), py::arg("h"), py::arg("sigma_bound"), py::arg("mu"),
      py::arg("lip"), py::arg("alpha"), py::arg("beta"), py::arg("p_steps"),
      py::arg("c_steps"), py::arg("kind") = "two_point");

  // harness
  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        const auto cfg = tvkf::parse_config(nlohmann::json::parse(config_json));
        const auto report = tvkf::run_experiment(cfg);
        nlohmann::json j;
        j["regime"] = report.regime;
        j["algorithm"] = report.algorithm;
        j["P"] = report.p_steps;
        j["C"] = report.c_steps;
        j["mean_err"] = report.mean_err;
        j["p25"] = report.p25;
        j["p75"] = report.p75;
        j["per_step_err"] = report.per_step_err;
        if (std::isnan(report.ae_bound))
          j["ae_bound"] = nullptr;
        else
          j["ae_bound"] = report.ae_bound;
        if (report.certificate) j["certificate"] = certificate_to_json(*report.certificate);
        return j.dump();
      },
      py::arg("config_json"));
  m.def(
      "ground_truth_json",
      [](const std::string& config_json) {
        const auto cfg = tvkf::parse_config(nlohmann::json::parse(config_json));
        const auto gt = tvkf::ground_truth_from_config(cfg);
        nlohmann::json j;
        j["trajectory"] = gt.trajectory;
        j["drift_delta"] = gt.drift_delta;
        j["residual_tol"] = gt.residual_tol;
        return j.dump();
      },
      py::arg("config_json"));
  m.def("percentile",
        [](std::vector<double> values, double q) { return tvkf::percentile(values, q); },
        py::arg("values"), py::arg("q"));

  // small helpers used by the smoke tests
  m.def("spectral_norm",
        [](const Rows& mrows) { return tvkf::linalg::spectral_norm(to_matrix(mrows)); },
        py::arg("m"));
  m.def("lpv_gain_eval",
        [](const Rows& w0, const Rows& w1, const Rows& x0, const Rows& x1, double nu,
           double theta) {
          const auto gain = tvkf::GainSchedule::lpv_gain(to_matrix(w0), to_matrix(w1),
                                                         to_matrix(x0), to_matrix(x1), nu);
          return from_matrix(tvkf::lpv_gain_eval(gain, theta));
        },
        py::arg("w0"), py::arg("w1"), py::arg("x0"), py::arg("x1"), py::arg("nu"),
        py::arg("theta"));
}
