// Command-line front end: run, sweep and analyze JSON experiment configs.
//
// Exit status: 0 on success, 1 on solver failure, 2 on configuration error.

#include "tvopt/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kSolverFailure = 1;
constexpr int kConfigError = 2;

void emit(const std::string& content, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    tvopt::write_text_file(path, content);
  }
}

tvopt::ExperimentConfig load_experiment(const std::string& path, std::optional<std::uint64_t> seed) {
  tvopt::ExperimentConfig cfg = tvopt::parse_experiment(tvopt::load_json(path));
  if (seed) {
    cfg.seed = *seed;
    cfg.formation.seed = *seed;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-correction solver for time-varying composite problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "JSON configuration file")->required();
    sub->add_option("--seed", seed, "Override the noise seed");
    sub->add_option("--out", out_path, "Output CSV path ('-' for stdout)");
  };
  CLI::App* run = app.add_subcommand("run", "Run one online experiment and write the error trajectory");
  CLI::App* sweep = app.add_subcommand("sweep", "Sweep the sampling period and fit the log-log slope");
  CLI::App* analyze = app.add_subcommand("analyze", "Evaluate the convergence bounds for a configuration");
  for (CLI::App* sub : {run, sweep, analyze}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) {
      const tvopt::ExperimentConfig cfg = load_experiment(config_path, seed);
      const tvopt::TrajectoryRecord rec = tvopt::run_experiment(cfg);
      emit(tvopt::render_run_csv(rec), out_path.empty() ? cfg.output_path : out_path);
      std::cerr << "asymptotic_error = " << tvopt::format_double(rec.asymptotic_error) << '\n';
    } else if (*sweep) {
      tvopt::SweepConfig cfg = tvopt::parse_sweep(tvopt::load_json(config_path));
      if (seed) {
        cfg.base.seed = *seed;
        cfg.base.formation.seed = *seed;
      }
      const tvopt::SweepResult result = tvopt::run_sweep(cfg);
      emit(tvopt::render_sweep_csv(result), out_path.empty() ? cfg.base.output_path : out_path);
      for (const auto& s : result.series) {
        std::cerr << s.variant.label() << ": slope = "
                  << (s.slope ? tvopt::format_double(*s.slope) : std::string("nan")) << '\n';
      }
    } else if (*analyze) {
      const tvopt::ExperimentConfig cfg = load_experiment(config_path, seed);
      const tvopt::AnalysisOutput a = tvopt::run_analysis(cfg);
      std::cout << tvopt::render_analysis_text(a);
      const std::string dest = out_path.empty() ? cfg.output_path : out_path;
      if (!dest.empty() && dest != "-") tvopt::write_text_file(dest, tvopt::render_analysis_csv(a));
    }
  } catch (const tvopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const tvopt::StepError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return 0;
}
