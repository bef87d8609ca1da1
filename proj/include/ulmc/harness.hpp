#pragma once

/// Experiment runner: parses a JSON experiment description, builds the target
/// and step plan, dispatches to the sampling / exact-law / path-bound /
/// validator machinery, and assembles deterministic reports (JSON + CSV).
/// Double precision throughout; definitions live in src/harness.cpp and
/// src/acceptance.cpp.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <ulmc/types.hpp>

namespace ulmc {

/// ---------------------------------------------------------------- config --

struct TargetSpec {
  std::string family = "gaussian";  // gaussian | gaussian_mixture | hyperbolic | power
  Eigen::Index dim = 1;
  std::vector<double> params;  // family-specific scalars (may be empty)
};

struct PlannerSpec {
  std::string kind = "kl";  // kl | tv | renyi | explicit
  double eps = 0.3;         // target accuracy, in (0, 1]
  double xi = 0.5;          // Renyi order gap, q = 2 - xi (renyi kind only)
  double c_pi = 1.0;        // Poincare constant when the target declares none
  double c_lsi = 1.0;       // log-Sobolev constant when the target declares none
  PlannerConstants<double> constants{};
  std::optional<double> gamma_override;
  std::optional<double> h_override;
  std::optional<std::int64_t> n_override;
};

struct SweepSpec {
  std::string axis;  // d | eps | kappa
  std::vector<double> values;
};

struct StudySpec {
  double c_h = 0.5;      // study step multiplier, h = c_h eps sqrt(m) / (L sqrt(d))
  double init_kl = 1e4;  // total phase-space KL budget of the inflated start
};

struct OutputSpec {
  std::string dir;  // empty: keep reports in memory only
};

struct ExperimentConfig {
  std::optional<std::string> preset;  // "acceptance/<1..10>"; fixes everything else
  std::string mode;  // sample | exact_oracle | girsanov | validators | scaling_study
  TargetSpec target;
  PlannerSpec planner;
  Eigen::Index chains = 1000;  // chains / paths / trials, depending on mode
  std::uint64_t seed = 0;
  std::optional<SweepSpec> sweep;
  StudySpec study;
  OutputSpec output;
  std::vector<std::string> warnings;  // collected while parsing
};

/// Validates a parsed JSON document against the schema above. Unknown keys
/// are rejected recursively; errors carry the dotted field path.
ExperimentConfig parse_config(const nlohmann::json& doc);

/// Parses raw text, then validates. Parse failures carry the byte offset.
ExperimentConfig parse_config_text(const std::string& text);

/// ---------------------------------------------------------------- reports --

struct RunReport {
  nlohmann::json report;          // report.json payload (never contains timing)
  std::string curves_csv;         // curves.csv payload
  bool pass = true;
  int exit_code = 0;              // 0 pass, 2 fail (errors are thrown instead)
  double wall_clock_seconds = 0;  // in memory / stdout only, for determinism
};

/// Runs one experiment end to end. Throws ConfigError / DomainError /
/// NotQuadraticError on invalid configs or mode-target mismatches.
RunReport run(const ExperimentConfig& cfg, int n_threads = 1);

/// Writes report.json and curves.csv under `dir` (created if missing).
void write_report(const RunReport& rep, const std::string& dir);

/// ---------------------------------------------------- exact scaling study --

struct StudyPoint {
  double axis_value = 0;     // d, 1/eps, or kappa
  double h = 0;              // study step at this point
  std::int64_t n_star = 0;   // smallest N with phase-space KL <= eps^2
};

struct StudyResult {
  std::string axis;
  std::vector<StudyPoint> points;
  double slope = 0;          // least-squares slope of log N* vs log(axis)
  double window_lo = 0;      // documented acceptance window for the slope
  double window_hi = 0;
  bool pass = false;
};

/// Exact-oracle iteration-count study on diagonal quadratics. Bisects the
/// smallest N whose phase-space KL to the continuous stationary law falls
/// below eps^2, propagating each Hessian eigenmode with its own 2x2 kernel:
///   axis "d":     standard Gaussian, dims taken from `values`;
///   axis "eps":   dim `dim`, accuracies taken from `values`;
///   axis "kappa": dim `dim`, spectrum linspace(1, kappa, dim).
/// Friction sqrt(2 L); step c_h eps sqrt(m) / (L sqrt(d)); start inflated in
/// position to a total phase-space KL of init_kl, split evenly across modes.
StudyResult kl_scaling_study(const std::string& axis,
                             const std::vector<double>& values, Eigen::Index dim,
                             double eps, double c_h, double init_kl);

/// ------------------------------------------------------------- acceptance --

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;    // key measured numbers vs their gates
  double seconds = 0;
};

/// Runs one numbered acceptance criterion (1..10) and reports the measured
/// quantities against its pinned tolerance.
CriterionResult run_criterion(int id, int n_threads = 1);

inline constexpr int criterion_count = 10;

}  // namespace ulmc
