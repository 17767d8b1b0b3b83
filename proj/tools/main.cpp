// tvkf command line: run single experiments, sweep grids, synthesize gains,
// and emit ground-truth trajectories. Exit codes: 0 ok, 2 config error,
// 3 numerical failure, 4 I/O error.
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tvkf/errors.hpp"
#include "tvkf/harness.hpp"

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tvkf::IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw tvkf::ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return j;
}

void apply_overrides(nlohmann::json& j, const std::string& seed_flag, const std::string& out_flag) {
  if (!seed_flag.empty()) j["seed"] = std::stoull(seed_flag);
  if (!out_flag.empty()) j["output_path"] = out_flag;
}

tvkf::ReportFormat parse_format(const std::string& fmt) {
  if (fmt == "csv") return tvkf::ReportFormat::csv;
  if (fmt == "json") return tvkf::ReportFormat::json;
  throw tvkf::ConfigError("unknown format: " + fmt);
}

void write_reports(const std::vector<tvkf::MetricsReport>& reports, const std::string& out_path,
                   tvkf::ReportFormat format) {
  if (out_path.empty())
    tvkf::emit_report(reports, format, std::cout);
  else
    tvkf::emit_report_file(reports, format, out_path);
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Kalman-style filters for time-varying stochastic convex optimization"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "csv", seed_flag, per_step_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->required();
    cmd->add_option("--out", out_path, "output file (stdout when omitted)");
    cmd->add_option("--format", format, "csv or json")->capture_default_str();
    cmd->add_option("--seed", seed_flag, "override the config seed");
  };

  CLI::App* run = app.add_subcommand("run", "run a single experiment");
  add_common(run);
  run->add_option("--per-step", per_step_path, "write the per-step error trace CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of experiments");
  add_common(sweep);

  CLI::App* design = app.add_subcommand("design", "gain synthesis only");
  design->add_option("--config", config_path, "JSON experiment config")->required();
  design->add_option("--out", out_path, "certificate JSON file (stdout when omitted)");
  design->add_option("--seed", seed_flag, "override the config seed");

  CLI::App* ground = app.add_subcommand("ground-truth", "emit the ground-truth trajectory CSV");
  ground->add_option("--config", config_path, "JSON experiment config")->required();
  ground->add_option("--out", out_path, "output CSV file (stdout when omitted)");
  ground->add_option("--seed", seed_flag, "override the config seed");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    nlohmann::json j = load_json(config_path);
    apply_overrides(j, seed_flag, out_path);
    const tvkf::ExperimentConfig cfg = tvkf::parse_config(j);
    const tvkf::MetricsReport report = tvkf::run_experiment(cfg);
    if (!per_step_path.empty()) {
      std::ofstream ps(per_step_path);
      if (!ps) throw tvkf::IoError("cannot write " + per_step_path);
      tvkf::emit_per_step(report, ps);
    }
    write_reports({report}, out_path, parse_format(format));
    return 0;
  }
  if (sweep->parsed()) {
    nlohmann::json j = load_json(config_path);
    if (!seed_flag.empty() && j.contains("base")) j["base"]["seed"] = std::stoull(seed_flag);
    const auto reports = tvkf::run_sweep(j);
    write_reports(reports, out_path, parse_format(format));
    return 0;
  }
  if (design->parsed()) {
    nlohmann::json j = load_json(config_path);
    apply_overrides(j, seed_flag, "");
    const tvkf::ExperimentConfig cfg = tvkf::parse_config(j);
    const nlohmann::json cert = tvkf::design_from_config(cfg);
    if (out_path.empty()) {
      std::cout << cert.dump(2) << '\n';
    } else {
      std::ofstream out(out_path);
      if (!out) throw tvkf::IoError("cannot write " + out_path);
      out << cert.dump(2) << '\n';
    }
    return 0;
  }
  if (ground->parsed()) {
    nlohmann::json j = load_json(config_path);
    apply_overrides(j, seed_flag, "");
    const tvkf::ExperimentConfig cfg = tvkf::parse_config(j);
    const tvkf::GroundTruth gt = tvkf::ground_truth_from_config(cfg);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path);
      if (!file) throw tvkf::IoError("cannot write " + out_path);
      out = &file;
    }
    if (!gt.trajectory.empty()) {
      *out << "k";
      for (std::size_t i = 0; i < gt.trajectory[0].size(); ++i) *out << ",x" << (i + 1);
      *out << '\n';
      for (std::size_t k = 0; k < gt.trajectory.size(); ++k) {
        *out << k;
        for (double v : gt.trajectory[k]) *out << ',' << v;
        *out << '\n';
      }
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const tvkf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tvkf::InvalidParams& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tvkf::StepTooLarge& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tvkf::DimensionMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const tvkf::NoConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::NoFeasiblePoint& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::DivergentConfig& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::SingularMatrix& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::SingularInnovation& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::GainEvalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const tvkf::ParseError& e) {
    std::cerr << "I/O error (line " << e.line << "): " << e.what() << '\n';
    return 4;
  } catch (const tvkf::NonMonotoneTime& e) {
    std::cerr << "I/O error (line " << e.line << "): " << e.what() << '\n';
    return 4;
  } catch (const tvkf::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
