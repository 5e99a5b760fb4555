#ifndef TVOPT_EXPERIMENT_HPP_
#define TVOPT_EXPERIMENT_HPP_

/**
 * @file
 * @brief JSON experiment configurations and the run / sweep / analyze
 * drivers behind the command-line tool. Output is rendered to strings so
 * that callers decide where it goes.
 */

#include "tvopt/analysis.hpp"
#include "tvopt/benchmark.hpp"
#include "tvopt/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <future>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tvopt {

/// Invalid or unreadable configuration. `key` is the JSON path at fault.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ProblemKind { Formation, SyntheticSinusoid };

struct SolverSettings {
  SplitMethod method = SplitMethod::ForwardBackward;
  std::optional<double> rho;  // nullopt: balanced step
  int P = 0;
  int C = 5;
  double Ts = 0.1;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;
};

struct AnalysisSettings {
  double tau = 0.5;
  std::optional<DerivativeBounds> bounds;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Formation;
  FormationSpec formation;
  SyntheticSinusoid synthetic;
  SolverSettings solver;
  double duration = 100.0;
  std::uint64_t seed = 1;
  std::string output_path;
  AnalysisSettings analysis;
};

struct SweepVariant {
  int P = 0;
  int C = 1;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;

  std::string label() const {
    return "P" + std::to_string(P) + "_C" + std::to_string(C) + "_" +
           std::string(to_string(derivative_mode));
  }
};

struct SweepConfig {
  ExperimentConfig base;
  std::vector<double> ts_values;
  NoiseRule noise_rule = NoiseRule::Fixed;
  std::vector<SweepVariant> variants;
};

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
  return d;
}

inline double get_positive(const json& v, const std::string& path) {
  const double d = get_number(v, path);
  if (!(d > 0.0)) throw ConfigError(path, "must be positive");
  return d;
}

inline int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<int>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

template <class Enum>
Enum get_enum(const json& v, const std::string& path,
              std::initializer_list<std::pair<const char*, Enum>> names) {
  const std::string s = get_string(v, path);
  std::string expected;
  for (const auto& [name, value] : names) {
    if (s == name) return value;
    expected += expected.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError(path, "unknown value '" + s + "' (expected one of: " + expected + ")");
}

inline DerivativeMode parse_mode(const json& v, const std::string& path) {
  return get_enum<DerivativeMode>(v, path,
                                  {{"Analytic", DerivativeMode::Analytic},
                                   {"BackwardDifference", DerivativeMode::BackwardDifference}});
}

inline void parse_leader(const json& j, const std::string& path, LissajousSpec& out) {
  reject_unknown(j, path, {"amplitude", "ratio", "period", "phase"});
  if (j.contains("amplitude")) out.amplitude = get_number(j["amplitude"], join(path, "amplitude"));
  if (j.contains("period")) out.period = get_positive(j["period"], join(path, "period"));
  if (j.contains("phase")) out.phase = get_number(j["phase"], join(path, "phase"));
  if (j.contains("ratio")) {
    const json& r = j["ratio"];
    const std::string rp = join(path, "ratio");
    if (!r.is_array() || r.size() != 2) throw ConfigError(rp, "expected two integers");
    out.ratio = {get_int(r[0], rp + "[0]"), get_int(r[1], rp + "[1]")};
  }
}

inline void parse_formation(const json& j, const std::string& path, FormationSpec& out) {
  reject_unknown(j, path, {"N", "d", "lambda", "sigmas", "directions", "leader"});
  if (j.contains("N")) {
    out.N = get_int(j["N"], join(path, "N"));
    if (out.N < 1) throw ConfigError(join(path, "N"), "must be at least 1");
    out.sigmas.assign(static_cast<std::size_t>(out.N), 0.1);
    out.directions = FormationSpec::default_directions(out.N);
  }
  if (j.contains("d")) out.d = get_positive(j["d"], join(path, "d"));
  if (j.contains("lambda")) out.lambda = get_positive(j["lambda"], join(path, "lambda"));
  if (j.contains("sigmas")) {
    const json& s = j["sigmas"];
    const std::string sp = join(path, "sigmas");
    if (s.is_number()) {
      out.sigmas.assign(static_cast<std::size_t>(out.N), get_number(s, sp));
    } else if (s.is_array()) {
      out.sigmas.clear();
      for (std::size_t i = 0; i < s.size(); ++i) {
        out.sigmas.push_back(get_number(s[i], sp + "[" + std::to_string(i) + "]"));
      }
    } else {
      throw ConfigError(sp, "expected a number or an array of numbers");
    }
    for (double v : out.sigmas) {
      if (v < 0.0) throw ConfigError(sp, "noise std must be nonnegative");
    }
  }
  if (j.contains("directions")) {
    const json& dj = j["directions"];
    const std::string dp = join(path, "directions");
    if (!dj.is_array()) throw ConfigError(dp, "expected an array of \"x\"/\"y\"");
    out.directions.clear();
    for (std::size_t i = 0; i < dj.size(); ++i) {
      out.directions.push_back(
          get_enum<Axis>(dj[i], dp + "[" + std::to_string(i) + "]", {{"x", Axis::X}, {"y", Axis::Y}}));
    }
  }
  if (j.contains("leader")) parse_leader(j["leader"], join(path, "leader"), out.leader);
  try {
    out.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
}

inline void parse_synthetic(const json& j, const std::string& path, SyntheticSinusoid& out) {
  reject_unknown(j, path, {"amplitude", "omega", "dimension"});
  if (j.contains("amplitude")) out.amplitude = get_number(j["amplitude"], join(path, "amplitude"));
  if (j.contains("omega")) {
    out.omega = get_number(j["omega"], join(path, "omega"));
    if (out.omega < 0.0) throw ConfigError(join(path, "omega"), "must be nonnegative");
  }
  if (j.contains("dimension")) {
    out.dimension = get_int(j["dimension"], join(path, "dimension"));
    if (out.dimension < 1) throw ConfigError(join(path, "dimension"), "must be at least 1");
  }
}

inline void parse_solver(const json& j, const std::string& path, SolverSettings& out) {
  reject_unknown(j, path, {"method", "rho", "P", "C", "Ts", "derivative_mode"});
  if (j.contains("method")) {
    out.method = get_enum<SplitMethod>(j["method"], join(path, "method"),
                                       {{"ForwardBackward", SplitMethod::ForwardBackward},
                                        {"DouglasRachford", SplitMethod::DouglasRachford}});
  }
  if (j.contains("rho")) {
    const json& r = j["rho"];
    if (r.is_string()) {
      if (r.get<std::string>() != "balanced") {
        throw ConfigError(join(path, "rho"), "expected a positive number or \"balanced\"");
      }
      out.rho.reset();
    } else {
      out.rho = get_positive(r, join(path, "rho"));
    }
  }
  if (j.contains("P")) {
    out.P = get_int(j["P"], join(path, "P"));
    if (out.P < 0) throw ConfigError(join(path, "P"), "prediction steps P must be >= 0");
  }
  if (j.contains("C")) {
    out.C = get_int(j["C"], join(path, "C"));
    if (out.C < 1) throw ConfigError(join(path, "C"), "correction steps C must be >= 1");
  }
  if (j.contains("Ts")) out.Ts = get_positive(j["Ts"], join(path, "Ts"));
  if (j.contains("derivative_mode")) {
    out.derivative_mode = parse_mode(j["derivative_mode"], join(path, "derivative_mode"));
  }
}

inline void parse_analysis(const json& j, const std::string& path, AnalysisSettings& out) {
  reject_unknown(j, path, {"tau", "bounds"});
  if (j.contains("tau")) {
    out.tau = get_number(j["tau"], join(path, "tau"));
    if (!(out.tau > 0.0 && out.tau < 1.0)) throw ConfigError(join(path, "tau"), "must lie in (0, 1)");
  }
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    const std::string bp = join(path, "bounds");
    reject_unknown(b, bp, {"C0", "C1", "C2", "C3"});
    DerivativeBounds c;
    double* fields[] = {&c.C0, &c.C1, &c.C2, &c.C3};
    const char* names[] = {"C0", "C1", "C2", "C3"};
    for (int i = 0; i < 4; ++i) {
      if (!b.contains(names[i])) throw ConfigError(join(bp, names[i]), "missing");
      *fields[i] = get_number(b[names[i]], join(bp, names[i]));
      if (*fields[i] < 0.0) throw ConfigError(join(bp, names[i]), "must be nonnegative");
    }
    out.bounds = c;
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const nlohmann::json& j, const std::string& path = "") {
  using namespace detail;
  reject_unknown(j, path,
                 {"problem", "formation", "synthetic", "solver", "duration", "seed", "output_path",
                  "analysis"});
  ExperimentConfig cfg;
  if (!j.contains("problem")) throw ConfigError(join(path, "problem"), "missing");
  cfg.problem = get_enum<ProblemKind>(j["problem"], join(path, "problem"),
                                      {{"Formation", ProblemKind::Formation},
                                       {"SyntheticSinusoid", ProblemKind::SyntheticSinusoid}});
  if (j.contains("formation")) parse_formation(j["formation"], join(path, "formation"), cfg.formation);
  if (j.contains("synthetic")) parse_synthetic(j["synthetic"], join(path, "synthetic"), cfg.synthetic);
  if (j.contains("solver")) parse_solver(j["solver"], join(path, "solver"), cfg.solver);
  if (j.contains("duration")) cfg.duration = get_positive(j["duration"], join(path, "duration"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError(join(path, "seed"), "expected an unsigned integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output_path")) cfg.output_path = get_string(j["output_path"], join(path, "output_path"));
  if (j.contains("analysis")) parse_analysis(j["analysis"], join(path, "analysis"), cfg.analysis);
  cfg.formation.seed = cfg.seed;
  return cfg;
}

inline SweepConfig parse_sweep(const nlohmann::json& j) {
  using namespace detail;
  reject_unknown(j, "", {"base", "ts_values", "noise_rule", "variants"});
  SweepConfig cfg;
  if (!j.contains("base")) throw ConfigError("base", "missing");
  cfg.base = parse_experiment(j["base"], "base");
  if (!j.contains("ts_values") || !j["ts_values"].is_array()) {
    throw ConfigError("ts_values", "expected an array of positive numbers");
  }
  for (std::size_t i = 0; i < j["ts_values"].size(); ++i) {
    cfg.ts_values.push_back(get_positive(j["ts_values"][i], "ts_values[" + std::to_string(i) + "]"));
  }
  if (cfg.ts_values.empty()) throw ConfigError("ts_values", "must be nonempty");
  if (j.contains("noise_rule")) {
    cfg.noise_rule = get_enum<NoiseRule>(j["noise_rule"], "noise_rule",
                                         {{"Fixed", NoiseRule::Fixed},
                                          {"ScaledByTs", NoiseRule::ScaledByTs}});
  }
  if (!j.contains("variants") || !j["variants"].is_array()) {
    throw ConfigError("variants", "expected an array of {P, C, derivative_mode}");
  }
  for (std::size_t i = 0; i < j["variants"].size(); ++i) {
    const std::string vp = "variants[" + std::to_string(i) + "]";
    const nlohmann::json& v = j["variants"][i];
    reject_unknown(v, vp, {"P", "C", "derivative_mode"});
    SweepVariant var;
    var.derivative_mode = cfg.base.solver.derivative_mode;
    if (!v.contains("P") || !v.contains("C")) throw ConfigError(vp, "P and C are required");
    var.P = get_int(v["P"], vp + ".P");
    var.C = get_int(v["C"], vp + ".C");
    if (var.P < 0) throw ConfigError(vp + ".P", "prediction steps P must be >= 0");
    if (var.C < 1) throw ConfigError(vp + ".C", "correction steps C must be >= 1");
    if (v.contains("derivative_mode")) var.derivative_mode = parse_mode(v["derivative_mode"], vp + ".derivative_mode");
    cfg.variants.push_back(var);
  }
  if (cfg.variants.empty()) throw ConfigError("variants", "must be nonempty");
  return cfg;
}

/// Reads and parses a JSON document; syntax errors carry line/column.
inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", "malformed JSON in '" + path + "': " + e.what());
  }
}

/// Strong-convexity and smoothness moduli of the configured instance.
inline std::pair<double, double> instance_moduli(const ExperimentConfig& cfg) {
  if (cfg.problem == ProblemKind::Formation) {
    const FormationProblem p(cfg.formation);
    return {p.m(), p.L()};
  }
  const SmoothCost f = cfg.synthetic.cost();
  return {f.m, f.L};
}

inline DerivativeBounds instance_bounds(const ExperimentConfig& cfg) {
  if (cfg.analysis.bounds) return *cfg.analysis.bounds;
  if (cfg.problem == ProblemKind::Formation) return FormationProblem(cfg.formation).derivative_bounds();
  return cfg.synthetic.bounds();
}

/// PCConfig with "balanced" resolved against the instance's (m, L).
inline PCConfig resolve_solver(const ExperimentConfig& cfg) {
  const auto [m, L] = instance_moduli(cfg);
  PCConfig pc;
  pc.P = cfg.solver.P;
  pc.C = cfg.solver.C;
  pc.Ts = cfg.solver.Ts;
  pc.derivative_mode = cfg.solver.derivative_mode;
  pc.split.method = cfg.solver.method;
  pc.split.rho = cfg.solver.rho ? *cfg.solver.rho : balanced_step(cfg.solver.method, m, L);
  try {
    pc.validate();
    pc.split.validate(L);
  } catch (const ParameterError& e) {
    throw ConfigError("solver", e.what());
  }
  return pc;
}

inline TrajectoryRecord run_experiment(const ExperimentConfig& cfg) {
  const PCConfig pc = resolve_solver(cfg);
  if (cfg.problem == ProblemKind::Formation) return run_benchmark(cfg.formation, pc, cfg.duration);
  return run_synthetic(cfg.synthetic, pc, cfg.duration);
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// `k,t,E,pred_residual,corr_residual` rows and a `# asymptotic_error=` footer.
inline std::string render_run_csv(const TrajectoryRecord& rec) {
  std::string out = "k,t,E,pred_residual,corr_residual\n";
  for (std::size_t k = 0; k < rec.size(); ++k) {
    out += std::to_string(k + 1) + ',' + format_double(rec.times[k]) + ',' +
           format_double(rec.errors[k]) + ',' + format_double(rec.pred_residuals[k]) + ',' +
           format_double(rec.corr_residuals[k]) + '\n';
  }
  out += "# asymptotic_error=" + format_double(rec.asymptotic_error) + '\n';
  return out;
}

struct SweepResult {
  struct Series {
    SweepVariant variant;
    std::vector<SweepRow> rows;
    std::optional<double> slope;
  };
  std::vector<Series> series;
};

/// Every (variant, Ts) pair runs as an independent task; collection order is
/// the configuration order.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  std::vector<std::vector<std::future<double>>> jobs;
  for (const SweepVariant& v : cfg.variants) {
    auto& row = jobs.emplace_back();
    for (double Ts : cfg.ts_values) {
      ExperimentConfig run = cfg.base;
      run.solver.P = v.P;
      run.solver.C = v.C;
      run.solver.derivative_mode = v.derivative_mode;
      run.solver.Ts = Ts;
      if (cfg.noise_rule == NoiseRule::ScaledByTs) {
        run.formation.sigmas.assign(static_cast<std::size_t>(run.formation.N), 0.01 * Ts);
      }
      resolve_solver(run);  // surface config errors before launching
      row.push_back(std::async(std::launch::async, [run = std::move(run)] {
        return run_experiment(run).asymptotic_error;
      }));
    }
  }
  SweepResult result;
  for (std::size_t i = 0; i < cfg.variants.size(); ++i) {
    SweepResult::Series s{cfg.variants[i], {}, std::nullopt};
    std::vector<double> errs;
    for (std::size_t j = 0; j < cfg.ts_values.size(); ++j) {
      const double e = jobs[i][j].get();
      s.rows.push_back({cfg.ts_values[j], e});
      errs.push_back(e);
    }
    s.slope = loglog_slope(cfg.ts_values, errs);
    result.series.push_back(std::move(s));
  }
  return result;
}

inline std::string render_sweep_csv(const SweepResult& r) {
  std::string out = "variant,Ts,asymptotic_error,loglog_slope\n";
  for (const auto& s : r.series) {
    const std::string slope = s.slope ? format_double(*s.slope) : "nan";
    for (const SweepRow& row : s.rows) {
      out += s.variant.label() + ',' + format_double(row.Ts) + ',' +
             format_double(row.asymptotic_error) + ',' + slope + '\n';
    }
  }
  return out;
}

struct AnalysisOutput {
  ConvergenceReport report;
  SplitConfig split;
  double m = 0.0;
  double L = 0.0;
  DerivativeBounds bounds;
  double tau = 0.5;
  int P = 0;
  int C = 0;
  double Ts = 0.0;
};

inline AnalysisOutput run_analysis(const ExperimentConfig& cfg) {
  const PCConfig pc = resolve_solver(cfg);
  AnalysisOutput out;
  std::tie(out.m, out.L) = instance_moduli(cfg);
  out.bounds = instance_bounds(cfg);
  out.split = pc.split;
  out.tau = cfg.analysis.tau;
  out.P = pc.P;
  out.C = pc.C;
  out.Ts = pc.Ts;
  out.report = analyze(pc.split, pc.P, pc.C, pc.Ts, out.m, out.L, out.bounds, out.tau);
  return out;
}

inline std::vector<std::pair<std::string, std::string>> analysis_rows(const AnalysisOutput& a) {
  const ConvergenceReport& r = a.report;
  auto num = [](double v) { return format_double(v); };
  return {
      {"method", std::string(to_string(a.split.method))},
      {"rho", num(a.split.rho)},
      {"P", std::to_string(a.P)},
      {"C", std::to_string(a.C)},
      {"Ts", num(a.Ts)},
      {"m", num(a.m)},
      {"L", num(a.L)},
      {"C0", num(a.bounds.C0)},
      {"C1", num(a.bounds.C1)},
      {"C2", num(a.bounds.C2)},
      {"C3", num(a.bounds.C3)},
      {"zeta", num(r.rate.zeta)},
      {"prefactor", num(r.rate.prefactor)},
      {"zeta_P", num(r.zetaP)},
      {"zeta_C", num(r.zetaC)},
      {"zeta_PC", num(r.zetaPC)},
      {"theorem1_lhs", num(r.theorem1_lhs)},
      {"theorem1_holds", r.theorem1_holds ? "true" : "false"},
      {"eta_linear_2", num(r.linear.eta2)},
      {"eta_linear_1", num(r.linear.eta1)},
      {"eta_linear_0", num(r.linear.eta0)},
      {"eta_quadratic_2", num(r.quadratic.eta2)},
      {"eta_quadratic_1", num(r.quadratic.eta1)},
      {"eta_quadratic_0", num(r.quadratic.eta0)},
      {"tau", num(a.tau)},
      {"theorem2_feasible", r.theorem2_feasible ? "true" : "false"},
      {"ts_bar", num(r.ts_bar)},
      {"r_bar", num(r.r_bar)},
      {"asymptote_estimate", num(r.asymptote_estimate)},
  };
}

inline std::string render_analysis_csv(const AnalysisOutput& a) {
  std::string out = "quantity,value\n";
  for (const auto& [k, v] : analysis_rows(a)) out += k + ',' + v + '\n';
  return out;
}

inline std::string render_analysis_text(const AnalysisOutput& a) {
  std::ostringstream os;
  for (const auto& [k, v] : analysis_rows(a)) os << k << " = " << v << '\n';
  if (!a.report.theorem2_feasible) os << "theorem2: infeasible (" << a.report.theorem2_note << ")\n";
  return os.str();
}

/// Writes `content` verbatim (binary mode, '\n' line endings).
inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing output file '" + path + "'");
}

}  // namespace tvopt

#endif  // TVOPT_EXPERIMENT_HPP_
