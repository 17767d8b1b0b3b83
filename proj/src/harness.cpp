#include "tvkf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

#include "tvkf/errors.hpp"
#include "tvkf/rng.hpp"

namespace tvkf {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pc:
      return "pc";
    case Algorithm::tv_ekf:
      return "tv_ekf";
    case Algorithm::tv_contract:
      return "tv_contract";
    case Algorithm::stoch_correction_only:
      return "stoch_correction_only";
  }
  return "pc";
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::none:
      return "none";
    case Regime::good_pred:
      return "good_pred";
    case Regime::poor_pred:
      return "poor_pred";
    case Regime::balanced_a:
      return "balanced_a";
    case Regime::balanced_b:
      return "balanced_b";
  }
  return "none";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "pc") return Algorithm::pc;
  if (s == "tv_ekf") return Algorithm::tv_ekf;
  if (s == "tv_contract") return Algorithm::tv_contract;
  if (s == "stoch_correction_only") return Algorithm::stoch_correction_only;
  throw ConfigError("unknown algorithm: " + s);
}

Regime regime_from_string(const std::string& s) {
  if (s == "none") return Regime::none;
  if (s == "good_pred") return Regime::good_pred;
  if (s == "poor_pred") return Regime::poor_pred;
  if (s == "balanced_a") return Regime::balanced_a;
  if (s == "balanced_b") return Regime::balanced_b;
  throw ConfigError("unknown regime: " + s);
}

PredictorKind predictor_from_string(const std::string& s) {
  if (s == "one_point") return PredictorKind::one_point;
  if (s == "two_point") return PredictorKind::two_point;
  if (s == "three_point") return PredictorKind::three_point;
  throw ConfigError("unknown predictor: " + s);
}

std::string to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::one_point:
      return "one_point";
    case PredictorKind::two_point:
      return "two_point";
    case PredictorKind::three_point:
      return "three_point";
  }
  return "one_point";
}

GroundTruth ground_truth_trajectory(const SmoothCost& cost, const std::vector<Vector>& nominal,
                                    const Regularizer& reg, double tol, std::size_t iter_cap) {
  if (nominal.empty()) throw InvalidParams("ground truth needs a nonempty nominal stream");
  const double beta = 1.0 / cost.lip;
  GroundTruth gt;
  gt.trajectory.reserve(nominal.size());
  Vector x(cost.dim_x, 0.0);
  double worst_residual = 0.0;
  for (const Vector& bar : nominal) {
    std::size_t it = 0;
    while (true) {
      const Vector next = reg.prox(linalg::axpy(x, -beta, cost.grad(x, bar)), beta);
      const double move = linalg::norm2(linalg::sub(next, x));
      x = next;
      if (move <= tol) break;
      if (++it >= iter_cap)
        throw NoConvergence("ground truth solver exceeded its iteration cap");
    }
    const Vector residual =
        linalg::sub(x, reg.prox(linalg::axpy(x, -beta, cost.grad(x, bar)), beta));
    worst_residual = std::max(worst_residual, linalg::norm2(residual));
    gt.trajectory.push_back(x);
  }
  gt.residual_tol = worst_residual;
  for (std::size_t k = 0; k + 1 < gt.trajectory.size(); ++k)
    gt.drift_delta = std::max(
        gt.drift_delta, linalg::norm2(linalg::sub(gt.trajectory[k + 1], gt.trajectory[k])));
  return gt;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidParams("percentile of an empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParams("percentile rank must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

IngestedSeries ingest_csv(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++line_no;
  {
    std::stringstream hs(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(hs, cell, ',')) ++cols;
    if (cols != expected_dim + 1)
      throw DimensionMismatch("csv header has " + std::to_string(cols) + " columns, expected " +
                              std::to_string(expected_dim + 1));
  }
  IngestedSeries out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(line_no, "non-numeric cell '" + cell + "'");
      }
    }
    if (row.size() != expected_dim + 1)
      throw ParseError(line_no, "row has " + std::to_string(row.size()) + " fields");
    if (!out.t.empty() && row[0] < out.t.back())
      throw NonMonotoneTime(line_no, "timestamp decreases");
    out.t.push_back(row[0]);
    out.y.emplace_back(row.begin() + 1, row.end());
  }
  if (out.t.size() >= 2) {
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < out.t.size(); ++i) gaps.push_back(out.t[i + 1] - out.t[i]);
    out.h = percentile(gaps, 0.5);
  }
  return out;
}

std::vector<Vector> moving_average(const std::vector<Vector>& series, std::size_t window) {
  if (series.empty() || window <= 1) return series;
  const std::size_t n = series.size();
  const std::size_t half = window / 2;
  std::vector<Vector> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(n - 1, k + half);
    Vector acc(series[0].size(), 0.0);
    for (std::size_t i = lo; i <= hi; ++i) acc = linalg::add(acc, series[i]);
    out[k] = linalg::scale(1.0 / static_cast<double>(hi - lo + 1), acc);
  }
  return out;
}

namespace {

Matrix parse_matrix(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw ConfigError("empty matrix in config");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix in config");
    for (std::size_t jj = 0; jj < rows[i].size(); ++jj) m(i, jj) = rows[i][jj];
  }
  return m;
}

struct Problem {
  SmoothCost cost;
  Regularizer reg;
  std::size_t dim = 0;
  double c0 = 0.0;
};

Problem assemble_problem(const ExperimentConfig& cfg) {
  Problem p;
  if (cfg.problem_type == "ride_hail") {
    p.cost = ride_hail_cost(cfg.ride_hail);
    p.dim = cfg.ride_hail.n_companies;
    double cmax = 1.0;
    if (!cfg.ride_hail.c.empty())
      cmax = *std::max_element(cfg.ride_hail.c.begin(), cfg.ride_hail.c.end());
    p.c0 = cmax;
    p.reg = cfg.use_box ? Regularizer::box(cfg.ride_hail.box_lower, cfg.ride_hail.box_upper)
                        : Regularizer::zero();
  } else if (cfg.problem_type == "linear_param") {
    if (cfg.lp_diag.empty()) throw ConfigError("linear_param problem needs a diagonal");
    Matrix coupling = cfg.lp_coupling;
    if (coupling.rows() == 0) {
      coupling = Matrix::diagonal(cfg.lp_diag);
      coupling = linalg::scale(-1.0, coupling);
    }
    LinearParamCost lp = linear_param_cost(coupling, diag_quadratic_cost(cfg.lp_diag));
    p.cost = lp.cost;
    p.c0 = lp.c0;
    p.dim = cfg.lp_diag.size();
    p.reg = cfg.use_box ? Regularizer::box(cfg.ride_hail.box_lower, cfg.ride_hail.box_upper)
                        : Regularizer::zero();
  } else {
    throw ConfigError("unknown problem type: " + cfg.problem_type);
  }
  return p;
}

struct SeriesBundle {
  std::vector<double> t;
  std::vector<Vector> y;
  std::vector<Vector> nominal;
  double h = 0.0;
  double bound_c = 0.0;
  double bound_sigma = 0.0;
};

SeriesBundle assemble_stream(const ExperimentConfig& cfg, std::size_t dim) {
  SeriesBundle out;
  if (cfg.stream_from_csv) {
    IngestedSeries series = ingest_csv(cfg.csv_path, dim);
    if (series.y.empty()) throw ConfigError("csv stream is empty");
    out.t = series.t;
    out.y = series.y;
    out.nominal = moving_average(series.y, cfg.smooth_window);
    out.h = series.h > 0.0 ? series.h : 1.0;
    for (std::size_t k = 0; k + 1 < out.nominal.size(); ++k)
      out.bound_c = std::max(out.bound_c,
                             linalg::norm2(linalg::sub(out.nominal[k + 1], out.nominal[k])) /
                                 out.h);
    double var = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = 0; k < out.y.size(); ++k) {
      const Vector d = linalg::sub(out.y[k], out.nominal[k]);
      for (double v : d) {
        var += v * v;
        ++cnt;
      }
    }
    out.bound_sigma = std::sqrt(static_cast<double>(dim) * (cnt ? var / cnt : 0.0));
    return out;
  }
  NominalTrajectory nominal =
      sinusoid_nominal(dim, cfg.nominal_base, cfg.nominal_amplitudes, cfg.nominal_periods);
  StreamSpec spec;
  spec.h = cfg.h;
  spec.horizon = cfg.horizon;
  spec.nominal = nominal.value;
  spec.noise_cov = constant_noise(dim, cfg.noise_var);
  spec.seed = cfg.seed;
  spec.bound_c = nominal.bound_c;
  spec.bound_sigma = std::sqrt(static_cast<double>(dim) * cfg.noise_var);
  Stream stream = generate_stream(spec);
  out.t = std::move(stream.t);
  out.y = std::move(stream.y);
  out.nominal = std::move(stream.nominal);
  out.h = cfg.h;
  out.bound_c = nominal.bound_c;
  out.bound_sigma = spec.bound_sigma;
  return out;
}

struct RegimePlan {
  std::vector<Vector> corr;  // data seen by the correction at step k
  std::vector<Vector> pred;  // data pushed into the predictor history at step k
  bool injected = false;     // true: pred carries a direct forecast of t_{k+1}
  double q_var = 0.0;
  double r_var = 0.0;
};

RegimePlan build_regime(const ExperimentConfig& cfg, const SeriesBundle& series,
                        std::size_t dim) {
  RegimePlan plan;
  const std::size_t horizon = series.y.size();
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  auto forecast_of = [&](std::size_t k, double var) {
    const std::size_t next = std::min(k + 1, horizon - 1);
    return linalg::add(series.nominal[next],
                       linalg::scale(std::sqrt(var), rng.normal_vector(dim)));
  };
  switch (cfg.regime) {
    case Regime::good_pred: {
      plan.injected = true;
      plan.q_var = 10.0;
      plan.r_var = cfg.noise_var;
      plan.corr = series.y;
      plan.pred.reserve(horizon);
      for (std::size_t k = 0; k < horizon; ++k) plan.pred.push_back(forecast_of(k, plan.q_var));
      break;
    }
    case Regime::poor_pred: {
      plan.injected = true;
      plan.q_var = 200.0;
      const double data_weight = 0.05;
      plan.r_var = data_weight * data_weight * cfg.noise_var;
      plan.pred.reserve(horizon);
      plan.corr.reserve(horizon);
      for (std::size_t k = 0; k < horizon; ++k) {
        plan.pred.push_back(forecast_of(k, plan.q_var));
        plan.corr.push_back(linalg::add(linalg::scale(1.0 - data_weight, series.nominal[k]),
                                        linalg::scale(data_weight, series.y[k])));
      }
      break;
    }
    case Regime::balanced_a:
      plan.q_var = 200.0;
      plan.r_var = 50.0;
      plan.corr = series.y;
      plan.pred = series.y;
      break;
    case Regime::balanced_b:
      plan.q_var = 67.0;
      plan.r_var = 50.0;
      plan.corr = series.y;
      plan.pred = series.y;
      break;
    case Regime::none:
      plan.q_var = cfg.noise_var;
      plan.r_var = cfg.noise_var;
      plan.corr = series.y;
      plan.pred = series.y;
      break;
  }
  if (cfg.q_var) plan.q_var = *cfg.q_var;
  if (cfg.r_var) plan.r_var = *cfg.r_var;
  return plan;
}

StepSizes resolve_steps(const ExperimentConfig& cfg, const Problem& problem) {
  StepSizes steps = cfg.steps;
  if (steps.alpha <= 0.0) steps.alpha = 1.5 * problem.cost.mu / (problem.cost.lip * problem.cost.lip);
  if (steps.beta <= 0.0) steps.beta = 1.5 / problem.cost.lip;
  check_step_sizes(steps, problem.cost.mu, problem.cost.lip);
  return steps;
}

// Worst-case parameters for a regime: injected regimes replace the predictor
// bias/variance by the known forecast noise scale, both mapped into gradient
// units through c0 as in the recurring linear-data example.
WorstCaseParams regime_worst_case(const ExperimentConfig& cfg, const Problem& problem,
                                  const SeriesBundle& series, const StepSizes& steps,
                                  const RegimePlan& plan, const GroundTruth& gt) {
  const double dimd = static_cast<double>(problem.dim);
  WorstCaseParams wc;
  wc.factors = contraction_factors(problem.cost.mu, problem.cost.lip, steps);
  wc.p_steps = cfg.p_steps;
  wc.c_steps = cfg.c_steps;
  double tau = 0.0;
  double sigma = 0.0;
  if (plan.injected || cfg.regime != Regime::none) {
    tau = problem.c0 * std::sqrt(dimd * plan.q_var);
    sigma = problem.c0 * std::sqrt(dimd * plan.r_var);
  } else {
    const double big_sigma = series.bound_sigma;
    const double c = series.bound_c;
    const double h = series.h;
    switch (cfg.predictor) {
      case PredictorKind::one_point:
        tau = problem.c0 * c * h + problem.c0 * big_sigma;
        break;
      case PredictorKind::two_point:
        tau = problem.c0 * c * h * h + 3.0 * problem.c0 * big_sigma;
        break;
      case PredictorKind::three_point:
        tau = problem.c0 * c * h * h * h + 7.0 * problem.c0 * big_sigma;
        break;
    }
    sigma = problem.c0 * big_sigma;
  }
  wc.delta = gt.drift_delta;
  wc.tau_mu = tau / problem.cost.mu;
  wc.sigma_c = steps.beta * sigma / (1.0 - wc.factors.rho_c);
  wc.validate();
  return wc;
}

struct ResolvedGain {
  GainSchedule schedule = GainSchedule::scalar_gain(1.0);
  double ae_bound = std::numeric_limits<double>::quiet_NaN();
  std::optional<GainCertificate> certificate;
};

ResolvedGain resolve_gain(const ExperimentConfig& cfg, const Problem& problem,
                          const SeriesBundle& series, const StepSizes& steps,
                          const RegimePlan& plan, const GroundTruth& gt) {
  ResolvedGain out;
  if (cfg.gain_kind == "scalar") {
    out.schedule = GainSchedule::scalar_gain(cfg.gain_chi);
    return out;
  }
  if (cfg.gain_kind == "static") {
    if (cfg.gain_matrix)
      out.schedule = GainSchedule::static_gain(*cfg.gain_matrix);
    else
      out.schedule =
          GainSchedule::static_gain(linalg::scale(cfg.gain_kappa, Matrix::identity(problem.dim)));
    return out;
  }
  if (cfg.gain_kind == "lpv") {
    const Matrix eye = Matrix::identity(problem.dim);
    out.schedule = GainSchedule::lpv_gain(linalg::scale(cfg.lpv_w0, eye),
                                          linalg::scale(cfg.lpv_w1, eye),
                                          linalg::scale(cfg.lpv_x0, eye),
                                          linalg::scale(cfg.lpv_x1, eye), cfg.lpv_nu);
    return out;
  }
  const WorstCaseParams wc = regime_worst_case(cfg, problem, series, steps, plan, gt);
  if (cfg.gain_kind == "design_scalar") {
    const ChiChoice choice = tune_chi(wc);
    out.schedule = GainSchedule::scalar_gain(choice.chi_star);
    out.ae_bound = choice.bound;
    return out;
  }
  const LmiScalarParams params = lmi_params_from_worst_case(wc, 0.9);
  if (cfg.gain_kind == "design_static") {
    const GainCertificate cert = design_static_gain(params, default_rho_grid(params));
    out.schedule = cert.materialize(problem.dim);
    out.ae_bound = cert.ae_bound;
    out.certificate = cert;
    return out;
  }
  if (cfg.gain_kind == "design_lpv") {
    const GainCertificate cert =
        design_lpv_gain(params, params.q / 5.0, 4.0 * params.q / 5.0, cfg.lpv_nu,
                        default_theta_grid(), default_rho_grid(params));
    out.schedule = cert.materialize(problem.dim);
    out.ae_bound = cert.ae_bound;
    out.certificate = cert;
    return out;
  }
  throw ConfigError("unknown gain kind: " + cfg.gain_kind);
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      cfg.problem_type = p.value("type", std::string("ride_hail"));
      if (cfg.problem_type == "ride_hail") {
        cfg.ride_hail.n_companies = p.value("n_companies", std::size_t{5});
        if (p.contains("c")) cfg.ride_hail.c = p.at("c").get<Vector>();
        cfg.ride_hail.kappa = p.value("kappa", 0.02);
        cfg.ride_hail.sigma_couple = p.value("sigma_couple", 0.1);
        if (p.contains("box")) {
          cfg.ride_hail.box_lower = p.at("box").at(0).get<double>();
          cfg.ride_hail.box_upper = p.at("box").at(1).get<double>();
        }
      } else if (cfg.problem_type == "linear_param") {
        cfg.lp_diag = p.value("diag", Vector{});
        if (p.contains("coupling_matrix")) cfg.lp_coupling = parse_matrix(p.at("coupling_matrix"));
      }
      cfg.use_box = p.value("use_box", cfg.problem_type == "ride_hail");
    }
    if (j.contains("stream")) {
      const auto& s = j.at("stream");
      if (s.contains("csv_path")) {
        cfg.stream_from_csv = true;
        cfg.csv_path = s.at("csv_path").get<std::string>();
        cfg.smooth_window = s.value("smooth_window", std::size_t{5});
      }
      cfg.h = s.value("h", cfg.h);
      cfg.horizon = s.value("horizon", cfg.horizon);
      cfg.noise_var = s.value("noise_var", cfg.noise_var);
      if (s.contains("nominal")) {
        const auto& nm = s.at("nominal");
        cfg.nominal_base = nm.value("base", cfg.nominal_base);
        if (nm.contains("amplitudes"))
          cfg.nominal_amplitudes = nm.at("amplitudes").get<std::vector<double>>();
        if (nm.contains("periods"))
          cfg.nominal_periods = nm.at("periods").get<std::vector<double>>();
      }
    }
    if (j.contains("algorithm")) cfg.algorithm = algorithm_from_string(j.at("algorithm"));
    cfg.p_steps = j.value("P", cfg.p_steps);
    cfg.c_steps = j.value("C", cfg.c_steps);
    if (j.contains("steps")) {
      cfg.steps.alpha = j.at("steps").value("alpha", 0.0);
      cfg.steps.beta = j.at("steps").value("beta", 0.0);
    }
    if (j.contains("predictor")) cfg.predictor = predictor_from_string(j.at("predictor"));
    if (j.contains("regime")) cfg.regime = regime_from_string(j.at("regime"));
    cfg.seed = j.value("seed", cfg.seed);
    cfg.warmup_frac = j.value("warmup_frac", cfg.warmup_frac);
    cfg.output_path = j.value("output_path", cfg.output_path);
    if (j.contains("gain")) {
      const auto& g = j.at("gain");
      if (g.contains("design")) {
        cfg.gain_kind = "design_" + g.at("design").get<std::string>();
        cfg.lpv_nu = g.value("nu", cfg.lpv_nu);
      } else {
        cfg.gain_kind = g.value("kind", std::string("scalar"));
        cfg.gain_chi = g.value("chi", cfg.gain_chi);
        if (g.contains("K")) {
          if (g.at("K").is_number())
            cfg.gain_kappa = g.at("K").get<double>();
          else
            cfg.gain_matrix = parse_matrix(g.at("K"));
        }
        cfg.lpv_w0 = g.value("w0", cfg.lpv_w0);
        cfg.lpv_w1 = g.value("w1", cfg.lpv_w1);
        cfg.lpv_x0 = g.value("x0", cfg.lpv_x0);
        cfg.lpv_x1 = g.value("x1", cfg.lpv_x1);
        cfg.lpv_nu = g.value("nu", cfg.lpv_nu);
      }
    }
    cfg.theta_max_drift = j.value("theta_max_drift", 0.0);
    if (j.contains("q_var")) cfg.q_var = j.at("q_var").get<double>();
    if (j.contains("r_var")) cfg.r_var = j.at("r_var").get<double>();
    if (j.contains("q_matrix")) cfg.q_matrix = parse_matrix(j.at("q_matrix"));
    if (j.contains("r_matrix")) cfg.r_matrix = parse_matrix(j.at("r_matrix"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

GroundTruth ground_truth_from_config(const ExperimentConfig& cfg) {
  const Problem problem = assemble_problem(cfg);
  const SeriesBundle series = assemble_stream(cfg, problem.dim);
  return ground_truth_trajectory(problem.cost, series.nominal, problem.reg);
}

nlohmann::json design_from_config(const ExperimentConfig& cfg) {
  const Problem problem = assemble_problem(cfg);
  const SeriesBundle series = assemble_stream(cfg, problem.dim);
  const StepSizes steps = resolve_steps(cfg, problem);
  const RegimePlan plan = build_regime(cfg, series, problem.dim);
  const GroundTruth gt = ground_truth_trajectory(problem.cost, series.nominal, problem.reg);
  const WorstCaseParams wc = regime_worst_case(cfg, problem, series, steps, plan, gt);
  if (cfg.gain_kind == "design_scalar") {
    const ChiChoice choice = tune_chi(wc);
    nlohmann::json out;
    out["kind"] = "scalar";
    out["chi"] = choice.chi_star;
    out["ae_bound"] = choice.bound;
    return out;
  }
  const LmiScalarParams params = lmi_params_from_worst_case(wc, 0.9);
  if (cfg.gain_kind == "design_lpv") {
    const GainCertificate cert =
        design_lpv_gain(params, params.q / 5.0, 4.0 * params.q / 5.0, cfg.lpv_nu,
                        default_theta_grid(), default_rho_grid(params));
    return certificate_to_json(cert);
  }
  const GainCertificate cert = design_static_gain(params, default_rho_grid(params));
  return certificate_to_json(cert);
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  if (cfg.p_steps + cfg.c_steps == 0) throw ConfigError("need P + C >= 1");
  if ((cfg.algorithm == Algorithm::stoch_correction_only) != (cfg.p_steps == 0))
    throw ConfigError("stoch_correction_only runs exactly when P = 0");

  const Problem problem = assemble_problem(cfg);
  if (cfg.algorithm == Algorithm::tv_ekf && problem.reg.kind() != Regularizer::Kind::zero)
    throw ConfigError("tv_ekf requires an unconstrained problem (g = 0)");
  const SeriesBundle series = assemble_stream(cfg, problem.dim);
  if (series.y.empty()) throw ConfigError("empty data stream");
  const StepSizes steps = resolve_steps(cfg, problem);
  const GroundTruth gt = ground_truth_trajectory(problem.cost, series.nominal, problem.reg);
  const RegimePlan plan = build_regime(cfg, series, problem.dim);
  const PredictorKind kind = plan.injected ? PredictorKind::one_point : cfg.predictor;
  const std::size_t horizon = series.y.size();

  ResolvedGain gain;
  if (cfg.algorithm == Algorithm::tv_contract)
    gain = resolve_gain(cfg, problem, series, steps, plan, gt);

  // Theta normalizer: supplied, or calibrated on the first tenth of the data.
  ThetaSignal theta_signal;
  const bool lpv_run = cfg.algorithm == Algorithm::tv_contract &&
                       gain.schedule.kind() == GainSchedule::Kind::lpv;
  if (lpv_run) {
    if (cfg.theta_max_drift > 0.0) {
      theta_signal.max_drift = cfg.theta_max_drift;
    } else {
      const std::size_t prefix = std::max<std::size_t>(2, horizon / 10);
      double worst = 0.0;
      for (std::size_t k = 1; k < std::min(prefix, horizon); ++k)
        worst = std::max(worst, linalg::norm_inf(linalg::sub(plan.corr[k], plan.corr[k - 1])) /
                                    series.h);
      theta_signal.max_drift = worst > 0.0 ? worst : 1.0;
    }
  }

  CovModel cov;
  {
    const Matrix qm = cfg.q_matrix ? *cfg.q_matrix
                                   : linalg::scale(plan.q_var, Matrix::identity(problem.dim));
    const Matrix rm = cfg.r_matrix ? *cfg.r_matrix
                                   : linalg::scale(plan.r_var, Matrix::identity(problem.dim));
    cov.q = [qm](std::size_t) { return qm; };
    cov.r = [rm](std::size_t) { return rm; };
  }

  MetricsReport report;
  report.regime = to_string(cfg.regime);
  report.algorithm = to_string(cfg.algorithm);
  report.p_steps = cfg.p_steps;
  report.c_steps = cfg.c_steps;
  report.ae_bound = gain.ae_bound;
  report.certificate = gain.certificate;
  report.config_echo = cfg.raw;
  report.per_step_err.reserve(horizon);

  DataHistory history;
  ThetaTracker theta_tracker;
  Vector x_pred(problem.dim, 0.0);
  EkfState ekf_state = ekf_init(problem.dim);

  for (std::size_t k = 0; k < horizon; ++k) {
    const Vector& y_k = plan.corr[k];
    double theta = 0.0;
    if (lpv_run && k > 0) theta = theta_from_stream(plan.corr[k - 1], y_k, series.h, theta_signal);
    if (lpv_run) theta_tracker.observe(theta);

    Vector x_k;
    switch (cfg.algorithm) {
      case Algorithm::tv_ekf: {
        history.push(plan.pred[k]);
        ekf_state = ekf_step(ekf_state, problem.cost, kind, history, steps, cfg.p_steps,
                             cfg.c_steps, cov, y_k);
        x_k = ekf_state.x_corr;
        break;
      }
      case Algorithm::tv_contract: {
        x_k = contract_step(x_pred, problem.cost, problem.reg, y_k, steps, cfg.c_steps,
                            gain.schedule, theta);
        break;
      }
      case Algorithm::pc:
      case Algorithm::stoch_correction_only: {
        const CorrectOutcome corr = correct_psi(x_pred, problem.cost, problem.reg, y_k, steps,
                                                cfg.c_steps, /*keep_points=*/false);
        x_k = corr.corrected;
        break;
      }
    }

    report.per_step_err.push_back(linalg::norm2(linalg::sub(x_k, gt.trajectory[k])));

    if (cfg.algorithm != Algorithm::tv_ekf) {
      history.push(plan.pred[k]);
      const PredictOutcome pred = predict_phi(x_k, problem.cost, problem.reg, kind, history,
                                              steps, cfg.p_steps, /*keep_points=*/false);
      x_pred = pred.x;
    }
  }

  const std::size_t warmup =
      std::min(horizon - 1, static_cast<std::size_t>(cfg.warmup_frac * horizon));
  std::vector<double> tail(report.per_step_err.begin() + warmup, report.per_step_err.end());
  double mean = 0.0;
  for (double e : tail) mean += e;
  report.mean_err = mean / static_cast<double>(tail.size());
  report.p25 = percentile(tail, 0.25);
  report.p75 = percentile(tail, 0.75);
  report.empirical_nu = theta_tracker.empirical_nu();
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                             t_start)
                       .count();
  return report;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["regime"] = r.regime;
  j["algorithm"] = r.algorithm;
  j["P"] = r.p_steps;
  j["C"] = r.c_steps;
  j["mean_err"] = r.mean_err;
  j["p25"] = r.p25;
  j["p75"] = r.p75;
  if (std::isnan(r.ae_bound))
    j["ae_bound"] = nullptr;
  else
    j["ae_bound"] = r.ae_bound;
  j["wall_ms"] = r.wall_ms;
  if (r.certificate) j["certificate"] = certificate_to_json(*r.certificate);
  j["config_echo"] = r.config_echo;
  return j;
}

}  // namespace

void emit_report(const std::vector<MetricsReport>& reports, ReportFormat format,
                 std::ostream& out) {
  if (reports.empty()) throw InvalidParams("no reports to emit");
  if (format == ReportFormat::csv) {
    out << "regime,algorithm,P,C,mean_err,p25,p75,ae_bound,wall_ms\n";
    for (const auto& r : reports) {
      out << r.regime << ',' << r.algorithm << ',' << r.p_steps << ',' << r.c_steps << ','
          << fmt6(r.mean_err) << ',' << fmt6(r.p25) << ',' << fmt6(r.p75) << ','
          << (std::isnan(r.ae_bound) ? std::string() : fmt6(r.ae_bound)) << ','
          << fmt6(r.wall_ms) << '\n';
    }
    return;
  }
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  out << arr.dump(2) << '\n';
}

void emit_report_file(const std::vector<MetricsReport>& reports, ReportFormat format,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  emit_report(reports, format, out);
  if (!out) throw IoError("error writing " + path);
}

void emit_per_step(const MetricsReport& report, std::ostream& out) {
  out << "k,err\n";
  for (std::size_t k = 0; k < report.per_step_err.size(); ++k)
    out << k << ',' << fmt6(report.per_step_err[k]) << '\n';
}

std::vector<MetricsReport> run_sweep(const nlohmann::json& sweep_config) {
  if (!sweep_config.contains("base")) throw ConfigError("sweep config needs a 'base' object");
  const nlohmann::json base = sweep_config.at("base");
  const nlohmann::json axes = sweep_config.value("sweep", nlohmann::json::object());

  std::vector<std::string> algorithms =
      axes.value("algorithms", std::vector<std::string>{base.value("algorithm", "pc")});
  std::vector<std::vector<std::size_t>> pc_pairs;
  if (axes.contains("pc_pairs"))
    pc_pairs = axes.at("pc_pairs").get<std::vector<std::vector<std::size_t>>>();
  else
    pc_pairs = {{base.value("P", std::size_t{1}), base.value("C", std::size_t{1})}};
  std::vector<std::string> regimes =
      axes.value("regimes", std::vector<std::string>{base.value("regime", "none")});
  std::vector<std::uint64_t> seeds =
      axes.value("seeds", std::vector<std::uint64_t>{base.value("seed", std::uint64_t{1})});

  std::vector<nlohmann::json> cells;
  for (const auto& regime : regimes)
    for (const auto& algo : algorithms)
      for (const auto& pair : pc_pairs) {
        if (pair.size() != 2) throw ConfigError("pc_pairs entries must be [P, C]");
        for (const auto seed : seeds) {
          nlohmann::json cell = base;
          cell["regime"] = regime;
          cell["algorithm"] = algo;
          cell["P"] = pair[0];
          cell["C"] = pair[1];
          cell["seed"] = seed;
          if (algo == "stoch_correction_only") cell["P"] = 0;
          cells.push_back(std::move(cell));
        }
      }

  std::vector<std::future<MetricsReport>> futures;
  futures.reserve(cells.size());
  for (const auto& cell : cells)
    futures.push_back(std::async(std::launch::async,
                                 [cell]() { return run_experiment(parse_config(cell)); }));
  std::vector<MetricsReport> reports;
  reports.reserve(cells.size());
  for (auto& f : futures) reports.push_back(f.get());
  return reports;
}

}  // namespace tvkf
