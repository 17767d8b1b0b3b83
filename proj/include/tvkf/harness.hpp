// Experiment orchestration: ground-truth trajectories for the expected
// problem, noise-regime presets, filter runs with per-step tracking error,
// percentile metrics, CSV ingestion, and report emission.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tvkf/contract.hpp"
#include "tvkf/costs.hpp"
#include "tvkf/ekf.hpp"
#include "tvkf/gain_design.hpp"
#include "tvkf/linalg.hpp"
#include "tvkf/operators.hpp"

#include "json.hpp"

namespace tvkf {

enum class Algorithm { pc, tv_ekf, tv_contract, stoch_correction_only };
enum class Regime { none, good_pred, poor_pred, balanced_a, balanced_b };

std::string to_string(Algorithm a);
std::string to_string(Regime r);
Algorithm algorithm_from_string(const std::string& s);
Regime regime_from_string(const std::string& s);
PredictorKind predictor_from_string(const std::string& s);
std::string to_string(PredictorKind k);

struct GroundTruth {
  std::vector<Vector> trajectory;  // x*_k for the expected problem
  double residual_tol = 0.0;       // max measured fixed-point residual
  double drift_delta = 0.0;        // max ||x*_{k+1} - x*_k||
};

// Solves min E[f(x;y)] + g per sample by proximal gradient on the nominal
// data (both shipped problem families have gradients affine in y, so the
// expected gradient is the gradient at the nominal). Warm-started; throws
// NoConvergence past the iteration cap.
GroundTruth ground_truth_trajectory(const SmoothCost& cost, const std::vector<Vector>& nominal,
                                    const Regularizer& reg, double tol = 1e-10,
                                    std::size_t iter_cap = 1000000);

// Linear-interpolation quantile at rank q*(N-1) on the sorted values.
double percentile(std::vector<double> values, double q);

struct IngestedSeries {
  std::vector<double> t;
  std::vector<Vector> y;
  double h = 0.0;  // median spacing
};

// Header `t,y1,...,yd`; rows must be numeric with nondecreasing timestamps.
IngestedSeries ingest_csv(const std::string& path, std::size_t expected_dim);

// Centered moving average used to build a ground-truth nominal from ingested
// data.
std::vector<Vector> moving_average(const std::vector<Vector>& series, std::size_t window);

struct MetricsReport {
  std::string regime;
  std::string algorithm;
  std::size_t p_steps = 0;
  std::size_t c_steps = 0;
  double mean_err = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  std::vector<double> per_step_err;  // full horizon, pre-warmup included
  double wall_ms = 0.0;
  double ae_bound = std::numeric_limits<double>::quiet_NaN();  // NaN = not certified
  std::optional<GainCertificate> certificate;
  double empirical_nu = 0.0;  // lpv runs: observed max |theta_{s+1} - theta_s|
  nlohmann::json config_echo;
};

struct ExperimentConfig {
  nlohmann::json raw;

  // problem
  std::string problem_type = "ride_hail";  // or "linear_param"
  RideHailParams ride_hail;
  bool use_box = true;
  Vector lp_diag;          // linear_param: diagonal of the x-only quadratic
  Matrix lp_coupling;      // gradient coupling; default -diag(lp_diag)

  // stream
  bool stream_from_csv = false;
  std::string csv_path;
  std::size_t smooth_window = 5;
  double h = 300.0;
  std::size_t horizon = 2000;
  double noise_var = 50.0;
  double nominal_base = 550.0;
  std::vector<double> nominal_amplitudes = {250.0, 80.0};
  std::vector<double> nominal_periods = {86400.0, 43200.0};

  Algorithm algorithm = Algorithm::pc;
  std::size_t p_steps = 1;
  std::size_t c_steps = 1;
  StepSizes steps{0.0, 0.0};  // zero means: derive defaults from (mu, lip)
  PredictorKind predictor = PredictorKind::two_point;
  Regime regime = Regime::none;
  std::uint64_t seed = 1;
  double warmup_frac = 0.05;
  std::string output_path;

  // gain: either explicit or a design request
  std::string gain_kind = "scalar";  // scalar | static | lpv | design_static | design_lpv | design_scalar
  double gain_chi = 1.0;
  double gain_kappa = 1.0;           // static scaled identity
  std::optional<Matrix> gain_matrix; // full static matrix
  double lpv_w0 = 0.0, lpv_w1 = 0.0, lpv_x0 = 1.0, lpv_x1 = 0.0;
  double lpv_nu = 0.4;
  double theta_max_drift = 0.0;      // 0 means: calibrate from the warmup prefix

  // covariance overrides (scalar * I when matrices absent)
  std::optional<double> q_var;
  std::optional<double> r_var;
  std::optional<Matrix> q_matrix;
  std::optional<Matrix> r_matrix;
};

ExperimentConfig parse_config(const nlohmann::json& j);

MetricsReport run_experiment(const ExperimentConfig& cfg);

// Gain synthesis entry point for the CLI `design` subcommand: builds the
// worst-case parameters for the configured problem/regime and runs the
// requested design. Returns the certificate JSON (or the scalar tuning
// result for design_scalar).
nlohmann::json design_from_config(const ExperimentConfig& cfg);

// Ground truth for the configured problem and stream.
GroundTruth ground_truth_from_config(const ExperimentConfig& cfg);

enum class ReportFormat { csv, json };

// One row per report: regime,algorithm,P,C,mean_err,p25,p75,ae_bound,wall_ms
// with six significant digits; ae_bound left empty when not certified.
void emit_report(const std::vector<MetricsReport>& reports, ReportFormat format,
                 std::ostream& out);
void emit_report_file(const std::vector<MetricsReport>& reports, ReportFormat format,
                      const std::string& path);

// Per-step error emission for external plotting: header `k,err`.
void emit_per_step(const MetricsReport& report, std::ostream& out);

// Cross product of sweep axes, run cell-by-cell (independent cells execute
// in parallel), merged in deterministic order.
std::vector<MetricsReport> run_sweep(const nlohmann::json& sweep_config);

}  // namespace tvkf
