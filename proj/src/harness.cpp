#include <ulmc/harness.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <ulmc/divergences.hpp>
#include <ulmc/gaussian_oracle.hpp>
#include <ulmc/girsanov.hpp>
#include <ulmc/integrator.hpp>
#include <ulmc/schedules.hpp>
#include <ulmc/targets.hpp>
#include <ulmc/version.hpp>

namespace ulmc {
namespace {

using nlohmann::json;

/// ------------------------------------------------------- config parsing --

[[noreturn]] void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_keys(const json& obj, const std::string& prefix,
                  std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) known = true;
    }
    if (!known) config_fail(join_path(prefix, it.key()), "unknown key");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& as_object(const json& v, const std::string& path) {
  if (!v.is_object()) config_fail(path, "expected an object");
  return v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) config_fail(path, "expected a number");
  return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) config_fail(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) config_fail(path, "expected a boolean");
  return v.get<bool>();
}

TargetSpec parse_target(const json& j) {
  TargetSpec t;
  require_keys(as_object(j, "target"), "target", {"family", "dim", "params"});
  if (const json* v = find(j, "family")) t.family = as_string(*v, "target.family");
  if (const json* v = find(j, "dim")) {
    const std::int64_t d = as_integer(*v, "target.dim");
    if (d < 1) config_fail("target.dim", "must be at least 1");
    t.dim = Eigen::Index(d);
  }
  if (const json* v = find(j, "params")) {
    if (!v->is_array()) config_fail("target.params", "expected an array of numbers");
    for (std::size_t i = 0; i < v->size(); ++i) {
      t.params.push_back(
          as_number((*v)[i], "target.params[" + std::to_string(i) + "]"));
    }
  }
  return t;
}

PlannerConstants<double> parse_constants(const json& j) {
  PlannerConstants<double> k;
  require_keys(as_object(j, "planner.constants"), "planner.constants",
               {"c_h", "c_T", "c_gamma", "C0", "c_guard", "freeze_h_logs",
                "freeze_T_logs"});
  const auto positive = [&](const char* key, double& slot) {
    if (const json* v = find(j, key)) {
      const std::string path = std::string("planner.constants.") + key;
      slot = as_number(*v, path);
      if (!(slot > 0)) config_fail(path, "must be positive");
    }
  };
  positive("c_h", k.c_h);
  positive("c_T", k.c_T);
  positive("c_gamma", k.c_gamma);
  positive("C0", k.C0);
  positive("c_guard", k.c_guard);
  if (const json* v = find(j, "freeze_h_logs")) {
    k.freeze_h_logs = as_bool(*v, "planner.constants.freeze_h_logs");
  }
  if (const json* v = find(j, "freeze_T_logs")) {
    k.freeze_T_logs = as_bool(*v, "planner.constants.freeze_T_logs");
  }
  return k;
}

void parse_planner(const json& j, PlannerSpec& p) {
  require_keys(as_object(j, "planner"), "planner",
               {"kind", "eps", "xi", "c_pi", "c_lsi", "constants", "overrides"});
  if (const json* v = find(j, "kind")) {
    p.kind = as_string(*v, "planner.kind");
    if (p.kind != "kl" && p.kind != "tv" && p.kind != "renyi" &&
        p.kind != "explicit") {
      config_fail("planner.kind", "must be one of kl, tv, renyi, explicit");
    }
  }
  if (const json* v = find(j, "eps")) {
    p.eps = as_number(*v, "planner.eps");
    if (!(p.eps > 0 && p.eps <= 1)) config_fail("planner.eps", "must lie in (0, 1]");
  }
  if (const json* v = find(j, "xi")) {
    p.xi = as_number(*v, "planner.xi");
    if (!(p.xi > 0 && p.xi < 1)) config_fail("planner.xi", "must lie in (0, 1)");
  }
  if (const json* v = find(j, "c_pi")) {
    p.c_pi = as_number(*v, "planner.c_pi");
    if (!(p.c_pi > 0)) config_fail("planner.c_pi", "must be positive");
  }
  if (const json* v = find(j, "c_lsi")) {
    p.c_lsi = as_number(*v, "planner.c_lsi");
    if (!(p.c_lsi > 0)) config_fail("planner.c_lsi", "must be positive");
  }
  if (const json* v = find(j, "constants")) p.constants = parse_constants(*v);
  if (const json* v = find(j, "overrides")) {
    require_keys(as_object(*v, "planner.overrides"), "planner.overrides",
                 {"gamma", "h", "N"});
    if (const json* g = find(*v, "gamma")) {
      const double gamma = as_number(*g, "planner.overrides.gamma");
      if (!(gamma > 0)) config_fail("planner.overrides.gamma", "must be positive");
      p.gamma_override = gamma;
    }
    if (const json* g = find(*v, "h")) {
      const double h = as_number(*g, "planner.overrides.h");
      if (!(h > 0)) config_fail("planner.overrides.h", "must be positive");
      p.h_override = h;
    }
    if (const json* g = find(*v, "N")) {
      const std::int64_t n = as_integer(*g, "planner.overrides.N");
      if (n < 0) config_fail("planner.overrides.N", "must be nonnegative");
      p.n_override = n;
    }
  }
}

SweepSpec parse_sweep(const json& j) {
  SweepSpec s;
  require_keys(as_object(j, "sweep"), "sweep", {"axis", "values"});
  const json* axis = find(j, "axis");
  if (!axis) config_fail("sweep.axis", "required");
  s.axis = as_string(*axis, "sweep.axis");
  if (s.axis != "d" && s.axis != "eps" && s.axis != "kappa") {
    config_fail("sweep.axis", "must be one of d, eps, kappa");
  }
  if (const json* v = find(j, "values")) {
    if (!v->is_array()) config_fail("sweep.values", "expected an array of numbers");
    for (std::size_t i = 0; i < v->size(); ++i) {
      s.values.push_back(
          as_number((*v)[i], "sweep.values[" + std::to_string(i) + "]"));
    }
  }
  if (s.values.empty()) config_fail("sweep.values", "must be nonempty");
  return s;
}

void parse_study(const json& j, StudySpec& s) {
  require_keys(as_object(j, "study"), "study", {"c_h", "init_kl"});
  if (const json* v = find(j, "c_h")) {
    s.c_h = as_number(*v, "study.c_h");
    if (!(s.c_h > 0)) config_fail("study.c_h", "must be positive");
  }
  if (const json* v = find(j, "init_kl")) {
    s.init_kl = as_number(*v, "study.init_kl");
    if (!(s.init_kl > 0)) config_fail("study.init_kl", "must be positive");
  }
}

int preset_id(const std::string& name) {
  const std::string prefix = "acceptance/";
  if (name.rfind(prefix, 0) != 0) return -1;
  const std::string tail = name.substr(prefix.size());
  if (tail.empty() || tail.size() > 2) return -1;
  for (char c : tail) {
    if (c < '0' || c > '9') return -1;
  }
  const int id = std::stoi(tail);
  return (id >= 1 && id <= criterion_count) ? id : -1;
}

/// ------------------------------------------------------ report assembly --

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json plan_to_json(const SchedulePlan<double>& p) {
  return json{{"gamma", p.gamma},
              {"h", p.h},
              {"N", p.N},
              {"T", p.T},
              {"metric", metric_name(p.metric)},
              {"order", p.q},
              {"eps", p.eps},
              {"init_beta", p.init_beta},
              {"init_varsigma", p.init_varsigma},
              {"N_exact", p.N_exact}};
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.preset) {
    j["preset"] = *cfg.preset;
  } else {
    j["mode"] = cfg.mode;
    j["target"] = {{"family", cfg.target.family},
                   {"dim", cfg.target.dim},
                   {"params", cfg.target.params}};
    json planner = {{"kind", cfg.planner.kind},
                    {"eps", cfg.planner.eps},
                    {"xi", cfg.planner.xi},
                    {"c_pi", cfg.planner.c_pi},
                    {"c_lsi", cfg.planner.c_lsi},
                    {"constants",
                     {{"c_h", cfg.planner.constants.c_h},
                      {"c_T", cfg.planner.constants.c_T},
                      {"c_gamma", cfg.planner.constants.c_gamma},
                      {"C0", cfg.planner.constants.C0},
                      {"c_guard", cfg.planner.constants.c_guard},
                      {"freeze_h_logs", cfg.planner.constants.freeze_h_logs},
                      {"freeze_T_logs", cfg.planner.constants.freeze_T_logs}}}};
    json overrides = json::object();
    if (cfg.planner.gamma_override) overrides["gamma"] = *cfg.planner.gamma_override;
    if (cfg.planner.h_override) overrides["h"] = *cfg.planner.h_override;
    if (cfg.planner.n_override) overrides["N"] = *cfg.planner.n_override;
    if (!overrides.empty()) planner["overrides"] = overrides;
    j["planner"] = planner;
    j["chains"] = cfg.chains;
    j["seed"] = cfg.seed;
    if (cfg.sweep) {
      j["sweep"] = {{"axis", cfg.sweep->axis}, {"values", cfg.sweep->values}};
    }
    j["study"] = {{"c_h", cfg.study.c_h}, {"init_kl", cfg.study.init_kl}};
  }
  j["output"] = {{"dir", cfg.output.dir}};
  return j;
}

/// --------------------------------------------------------- plan building --

SchedulePlan<double> resolve_plan(const ExperimentConfig& cfg,
                                  const Target<double>& target,
                                  std::vector<std::string>& warnings) {
  const PlannerSpec& ps = cfg.planner;
  const auto reg = target.constants();
  SchedulePlan<double> plan;

  if (ps.kind == "explicit") {
    if (!ps.gamma_override || !ps.h_override || !ps.n_override) {
      config_fail("planner.overrides", "explicit plans need gamma, h, and N");
    }
    plan.gamma = *ps.gamma_override;
    plan.h = *ps.h_override;
    plan.N = *ps.n_override;
    plan.T = double(plan.N) * plan.h;
    plan.N_exact = double(plan.N);
    plan.metric = Metric::KL;
    plan.q = 1.0;
    plan.eps = ps.eps;
    const double L = reg.L > 0 ? reg.L : 1.0;
    plan.init_beta = plan.T > 0 ? plan.gamma / plan.T : 1.0;
    plan.init_varsigma = 1.0 / (2 * L + plan.init_beta);
    return plan;
  }

  if (ps.kind == "kl") {
    plan = plan_kl_strongly_logconcave<double>(reg.m, reg.L, target.dim(), ps.eps,
                                               ps.constants);
  } else if (ps.kind == "tv") {
    const double c_lsi = reg.C_LSI ? *reg.C_LSI : ps.c_lsi;
    plan = plan_tv_lsi<double>(c_lsi, reg.L, target.dim(), ps.eps, ps.constants);
  } else {  // renyi
    const double c_pi = reg.C_PI ? *reg.C_PI : ps.c_pi;
    plan = plan_renyi_poincare<double>(c_pi, reg.L, reg.s, target.dim(), ps.eps,
                                       ps.xi, reg.R, ps.constants);
  }

  bool touched = false;
  if (ps.gamma_override) {
    plan.gamma = *ps.gamma_override;
    warnings.push_back("planner.overrides.gamma: explicit friction overrides the planner value");
    touched = true;
  }
  if (ps.h_override) {
    plan.h = *ps.h_override;
    warnings.push_back("planner.overrides.h: explicit step size overrides the planner value");
    touched = true;
  }
  if (ps.n_override) {
    plan.N = *ps.n_override;
    warnings.push_back("planner.overrides.N: explicit step count overrides the planner value");
  } else if (ps.h_override) {
    plan.N_exact = plan.T / plan.h;
    plan.N = std::int64_t(std::ceil(plan.N_exact * (1.0 - 1e-13)));
  }
  if (touched) {
    plan.init_beta = plan.gamma / plan.T;
    plan.init_varsigma = 1.0 / (2 * reg.L + plan.init_beta);
  }
  return plan;
}

GaussianLaw<double> start_law(const Target<double>& target,
                              const SchedulePlan<double>& plan) {
  const auto reg = target.constants();
  const double L = reg.L > 0 ? reg.L : 1.0;
  return initialization<double>(L, std::min(1.0, plan.init_beta), target.dim());
}

/// ------------------------------------------------------------ mode runs --

struct ModeOutcome {
  json results;
  std::string curves;
  bool pass = true;
};

ModeOutcome run_sample(const ExperimentConfig& cfg, const Target<double>& target,
                       const SchedulePlan<double>& plan, int n_threads) {
  RunOptions opts;
  opts.n_threads = n_threads;
  const auto snaps =
      run_chain<double>(start_law(target, plan), cfg.chains, target, plan,
                        cfg.seed, opts);

  ModeOutcome out;
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "step,t,mean_norm,x_cov_trace,v_cov_trace\n";
  json checkpoints = json::array();
  for (const auto& e : snaps) {
    const Eigen::Index n = e.chains();
    const Vec<double> mx = e.x.rowwise().mean();
    const Vec<double> mv = e.v.rowwise().mean();
    const double denom = n > 1 ? double(n - 1) : 1.0;
    const double xtr = (e.x.colwise() - mx).squaredNorm() / denom;
    const double vtr = (e.v.colwise() - mv).squaredNorm() / denom;
    const double t = double(e.step_index) * plan.h;
    checkpoints.push_back({{"step", e.step_index},
                           {"t", t},
                           {"mean_norm", mx.norm()},
                           {"x_cov_trace", xtr},
                           {"v_cov_trace", vtr}});
    csv << e.step_index << ',' << fmt(t) << ',' << fmt(mx.norm()) << ','
        << fmt(xtr) << ',' << fmt(vtr) << "\n";
  }
  const auto& fin = snaps.back();
  const Vec<double> mean = fin.x.rowwise().mean();
  std::vector<double> mean_out(std::size_t(mean.size()));
  for (Eigen::Index i = 0; i < mean.size(); ++i) mean_out[std::size_t(i)] = mean[i];

  out.results["checkpoints"] = checkpoints;
  out.results["final"] = {{"step", fin.step_index},
                          {"mean", mean_out},
                          {"mean_norm", mean.norm()}};
  if (plan.N == 0) out.results["note"] = "initialization moments only";
  out.curves = csv.str();
  out.pass = true;
  return out;
}

ModeOutcome run_exact_oracle(const ExperimentConfig& cfg,
                             const Target<double>& target,
                             const SchedulePlan<double>& plan) {
  if (cfg.target.family != "gaussian") {
    throw NotQuadraticError("exact_oracle mode requires a quadratic target, got family '" +
                            cfg.target.family + "'");
  }
  const auto kernel = kernel_from_quadratic<double>(target, plan.gamma, plan.h);
  const auto pi = continuous_stationary_law<double>(target);
  GaussianLaw<double> law = start_law(target, plan);

  ModeOutcome out;
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "step,t,kl\n";
  json checkpoints = json::array();
  double final_kl = 0;
  std::int64_t prev = 0;
  for (const std::int64_t s : detail::snapshot_steps(plan.N, 0)) {
    law = propagate_law<double>(law, kernel, s - prev);
    prev = s;
    final_kl = gaussian_kl<double>(law, pi);
    const double t = double(s) * plan.h;
    checkpoints.push_back({{"step", s}, {"t", t}, {"kl", final_kl}});
    csv << s << ',' << fmt(t) << ',' << fmt(final_kl) << "\n";
  }
  const double eps2 = plan.eps * plan.eps;
  out.results["checkpoints"] = checkpoints;
  out.results["final_kl"] = final_kl;
  out.results["eps_squared"] = eps2;
  out.curves = csv.str();
  out.pass = final_kl <= eps2;
  return out;
}

ModeOutcome run_girsanov(const ExperimentConfig& cfg, const Target<double>& target,
                         const SchedulePlan<double>& plan, int n_threads) {
  if (plan.N < 1) throw DomainError("girsanov mode needs at least one step");
  const double horizon = double(plan.N) * plan.h;
  const int substeps = 16;
  const auto stats = simulate_interpolated_pair<double>(
      target, plan.gamma, plan.h, horizon, substeps, cfg.seed, cfg.chains,
      start_law(target, plan), n_threads);
  const double order = std::max(1.0, plan.q);
  const auto bound = renyi_path_bound<double>(stats, order, plan.gamma);

  ModeOutcome out;
  double exact = std::numeric_limits<double>::quiet_NaN();
  if (cfg.target.family == "gaussian") {
    const auto kernel = kernel_from_quadratic<double>(target, plan.gamma, plan.h);
    const auto init = start_law(target, plan);
    const auto disc = propagate_law<double>(init, kernel, plan.N);
    const auto cont = continuous_law<double>(target, plan.gamma, horizon, init);
    exact = gaussian_renyi<double>(2 * order, disc, cont);
    out.pass = bound.value >= exact;
  } else {
    out.pass = !bound.overflow;
  }

  out.results["paths"] = cfg.chains;
  out.results["substeps"] = substeps;
  out.results["windows"] = stats.n_windows;
  out.results["order"] = order;
  out.results["bound"] = bound.value;
  out.results["lo"] = bound.lo;
  out.results["hi"] = bound.hi;
  out.results["overflow"] = bound.overflow;
  out.results["diagnostic_quantile"] = bound.diagnostic_quantile;
  if (std::isfinite(exact)) out.results["exact"] = exact;

  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "h,horizon,substeps,paths,order,bound,lo,hi,exact\n";
  csv << fmt(plan.h) << ',' << fmt(horizon) << ',' << substeps << ','
      << cfg.chains << ',' << fmt(order) << ',' << fmt(bound.value) << ','
      << fmt(bound.lo) << ',' << fmt(bound.hi) << ',' << fmt(exact) << "\n";
  out.curves = csv.str();
  return out;
}

ModeOutcome run_validators(const ExperimentConfig& cfg,
                           const TargetPtr<double>& target,
                           const SchedulePlan<double>& plan, int n_threads) {
  const Eigen::Index d = target->dim();
  const auto brownian = tail_validator_brownian<double>(d, plan.h, cfg.chains,
                                                        cfg.seed, n_threads);
  const auto reg = target->constants();
  ModifiedTargetParams<double> params;
  params.beta = std::min(1.0, plan.init_beta);
  params.S_radius = reg.m > 0 ? std::sqrt(double(d) / reg.m)
                              : 2.0 * std::sqrt(double(d));
  const auto iter = tail_validator_iterates<double>(
      target, plan, params, cfg.chains, cfg.seed + 1, 5.0, {0.1, 0.01}, n_threads);

  ModeOutcome out;
  out.pass = brownian.pass && iter.pass;

  json blevels = json::array();
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "check,param,observed,limit\n";
  for (Eigen::Index i = 0; i < brownian.bound.size(); ++i) {
    blevels.push_back({{"eta", brownian.eta[i]},
                       {"bound", brownian.bound[i]},
                       {"empirical", brownian.empirical[i]},
                       {"mcse", brownian.mcse[i]}});
    csv << "brownian_sup," << fmt(brownian.eta[i]) << ','
        << fmt(brownian.empirical[i]) << ','
        << fmt(brownian.bound[i] + 3 * brownian.mcse[i]) << "\n";
  }
  for (std::size_t i = 0; i < iter.deltas.size(); ++i) {
    const auto k = Eigen::Index(i);
    csv << "iterate_x," << fmt(iter.deltas[i]) << ',' << fmt(iter.quantile_x[k])
        << ',' << fmt(iter.multiplier * iter.envelope_x[k]) << "\n";
    csv << "iterate_v," << fmt(iter.deltas[i]) << ',' << fmt(iter.quantile_v[k])
        << ',' << fmt(iter.multiplier * iter.envelope_v[k]) << "\n";
  }
  out.results["brownian"] = {{"pass", brownian.pass},
                             {"max_gap", brownian.max_gap},
                             {"levels", blevels}};
  out.results["iterates"] = {{"pass", iter.pass},
                             {"multiplier", iter.multiplier},
                             {"smallest_passing", iter.smallest_passing},
                             {"r2_plugin", iter.r2_plugin}};
  out.curves = csv.str();
  return out;
}

ModeOutcome run_scaling_study(const ExperimentConfig& cfg) {
  if (cfg.target.family != "gaussian") {
    throw NotQuadraticError(
        "scaling_study mode uses the exact Gaussian oracle, got family '" +
        cfg.target.family + "'");
  }
  const auto res = kl_scaling_study(cfg.sweep->axis, cfg.sweep->values,
                                    cfg.target.dim, cfg.planner.eps,
                                    cfg.study.c_h, cfg.study.init_kl);
  ModeOutcome out;
  json points = json::array();
  std::ostringstream csv;
  csv << "# schema_version=" << kSchemaVersion << "\n";
  csv << "axis_value,h,n_star\n";
  for (const auto& p : res.points) {
    points.push_back({{"axis_value", p.axis_value}, {"h", p.h}, {"n_star", p.n_star}});
    csv << fmt(p.axis_value) << ',' << fmt(p.h) << ',' << p.n_star << "\n";
  }
  out.results["axis"] = res.axis;
  out.results["points"] = points;
  out.results["slope"] = res.slope;
  out.results["window"] = {res.window_lo, res.window_hi};
  out.curves = csv.str();
  out.pass = res.pass;
  return out;
}

}  // namespace

/// ----------------------------------------------------------- public API --

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  require_keys(doc, "", {"preset", "mode", "target", "planner", "chains", "seed",
                         "sweep", "study", "output"});
  ExperimentConfig cfg;

  if (const json* v = find(doc, "output")) {
    require_keys(as_object(*v, "output"), "output", {"dir"});
    if (const json* s = find(*v, "dir")) cfg.output.dir = as_string(*s, "output.dir");
  }

  if (const json* preset = find(doc, "preset")) {
    cfg.preset = as_string(*preset, "preset");
    if (find(doc, "mode")) config_fail("mode", "a preset already fixes the mode");
    for (const char* key : {"target", "planner", "chains", "seed", "sweep", "study"}) {
      if (find(doc, key)) config_fail(key, "not configurable under a preset");
    }
    if (preset_id(*cfg.preset) < 0) {
      config_fail("preset", "unknown preset '" + *cfg.preset +
                                "' (expected acceptance/1 .. acceptance/" +
                                std::to_string(criterion_count) + ")");
    }
    return cfg;
  }

  const json* mode = find(doc, "mode");
  if (!mode) {
    config_fail("mode",
                "required (sample, exact_oracle, girsanov, validators, or scaling_study)");
  }
  cfg.mode = as_string(*mode, "mode");
  if (cfg.mode != "sample" && cfg.mode != "exact_oracle" && cfg.mode != "girsanov" &&
      cfg.mode != "validators" && cfg.mode != "scaling_study") {
    config_fail("mode",
                "must be one of sample, exact_oracle, girsanov, validators, scaling_study");
  }

  if (const json* v = find(doc, "target")) cfg.target = parse_target(*v);
  if (const json* v = find(doc, "planner")) parse_planner(*v, cfg.planner);
  if (const json* v = find(doc, "chains")) {
    const std::int64_t n = as_integer(*v, "chains");
    if (n < 1) config_fail("chains", "must be at least 1");
    cfg.chains = Eigen::Index(n);
  }
  if (const json* v = find(doc, "seed")) {
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0)) {
      config_fail("seed", "must be a nonnegative integer");
    }
    cfg.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(doc, "sweep")) cfg.sweep = parse_sweep(*v);
  if (const json* v = find(doc, "study")) parse_study(*v, cfg.study);

  if (cfg.mode == "scaling_study") {
    if (!cfg.sweep) config_fail("sweep", "required in scaling_study mode");
  } else if (cfg.sweep) {
    cfg.warnings.push_back("sweep: ignored outside scaling_study mode");
  }
  if (cfg.planner.kind == "explicit" &&
      (!cfg.planner.gamma_override || !cfg.planner.h_override ||
       !cfg.planner.n_override)) {
    config_fail("planner.overrides", "explicit plans need gamma, h, and N");
  }
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(doc);
}

RunReport run(const ExperimentConfig& cfg, int n_threads) {
  const auto t0 = std::chrono::steady_clock::now();
  if (n_threads < 1) throw DomainError("run: thread count must be at least 1");

  RunReport rep;
  std::vector<std::string> warnings = cfg.warnings;
  json plan_json;
  ModeOutcome out;
  std::string mode = cfg.mode;

  if (cfg.preset) {
    mode = "acceptance";
    const CriterionResult cr = run_criterion(preset_id(*cfg.preset), n_threads);
    out.results = {{"id", cr.id},
                   {"name", cr.name},
                   {"pass", cr.pass},
                   {"detail", cr.detail}};
    out.pass = cr.pass;
    std::ostringstream csv;
    csv << "# schema_version=" << kSchemaVersion << "\n";
    csv << "id,name,pass\n";
    csv << cr.id << ',' << cr.name << ',' << (cr.pass ? 1 : 0) << "\n";
    out.curves = csv.str();
  } else {
    const TargetPtr<double> target =
        make_builtin<double>(cfg.target.family, cfg.target.dim, cfg.target.params);
    if (mode == "scaling_study") {
      out = run_scaling_study(cfg);
    } else {
      const SchedulePlan<double> plan = resolve_plan(cfg, *target, warnings);
      for (const auto& w : plan.warnings) warnings.push_back("plan: " + w);
      plan_json = plan_to_json(plan);
      if (mode == "sample") {
        out = run_sample(cfg, *target, plan, n_threads);
      } else if (mode == "exact_oracle") {
        out = run_exact_oracle(cfg, *target, plan);
      } else if (mode == "girsanov") {
        out = run_girsanov(cfg, *target, plan, n_threads);
      } else {  // validators
        out = run_validators(cfg, target, plan, n_threads);
      }
    }
  }

  rep.report["schema_version"] = kSchemaVersion;
  rep.report["version"] = kVersion;
  rep.report["mode"] = mode;
  rep.report["config"] = config_to_json(cfg);
  if (!plan_json.is_null()) rep.report["plan"] = plan_json;
  rep.report["results"] = out.results;
  rep.report["pass"] = out.pass;
  rep.report["warnings"] = warnings;
  rep.curves_csv = out.curves;
  rep.pass = out.pass;
  rep.exit_code = out.pass ? 0 : 2;
  rep.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void write_report(const RunReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  if (dir.empty()) throw DomainError("write_report: output directory is empty");
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "report.json", std::ios::binary);
    if (!os) throw Error("write_report: cannot open report.json under " + dir);
    os << rep.report.dump(2) << "\n";
  }
  {
    std::ofstream os(fs::path(dir) / "curves.csv", std::ios::binary);
    if (!os) throw Error("write_report: cannot open curves.csv under " + dir);
    os << rep.curves_csv;
  }
}

/// ----------------------------------------------------- exact N* study --

namespace {

/// Position inflation s with 0.5 (s - 1 - log s) = klpd, by Newton iteration.
double newton_inflation(double klpd) {
  double s = 1.0 + std::sqrt(2 * klpd) + klpd;
  for (int it = 0; it < 100; ++it) {
    const double f = 0.5 * (s - 1 - std::log(s)) - klpd;
    s -= f / (0.5 * (1 - 1 / s));
    if (std::abs(f) < 1e-14) break;
  }
  return s;
}

struct StudyMode {
  Eigen::Matrix2d A, Q, S0;
  double lam = 1;
};

std::vector<StudyMode> make_modes(const std::vector<double>& lams, double gamma,
                                  double h, double init_kl) {
  const double klpd = init_kl / double(lams.size());
  const double inflation = newton_inflation(klpd);
  const auto sc = step_coefficients<double>(gamma, h);
  std::vector<StudyMode> modes;
  modes.reserve(lams.size());
  for (const double lam : lams) {
    StudyMode m;
    m.lam = lam;
    m.A << 1 - sc.c_xg * lam, sc.c_xv, -sc.c_vg * lam, sc.eta;
    m.Q = sc.cov;
    m.S0 << inflation / lam, 0, 0, 1;
    modes.push_back(m);
  }
  return modes;
}

/// Phase-space KL to the per-mode stationary law N(0, diag(1/lam, 1)) after
/// n steps of exact covariance propagation, summed over modes.
double study_kl(const std::vector<StudyMode>& modes, std::int64_t n) {
  double total = 0;
  for (const auto& m : modes) {
    Eigen::Matrix2d S = m.S0;
    for (std::int64_t k = 0; k < n; ++k) {
      S = (m.A * S) * m.A.transpose() + m.Q;
      S = 0.5 * (S + S.transpose()).eval();
    }
    const double tr = m.lam * S(0, 0) + S(1, 1);
    const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(0, 1);
    total += 0.5 * (tr - 2.0 + std::log(1.0 / (m.lam * det)));
  }
  return total;
}

std::int64_t bisect_n(const std::vector<StudyMode>& modes, double eps) {
  const double goal = eps * eps;
  std::int64_t n = 1;
  while (study_kl(modes, n) > goal) {
    n *= 2;
    if (n > (std::int64_t(1) << 22)) {
      throw NumericsError("scaling study: bisection failed to bracket N");
    }
  }
  std::int64_t lo = n / 2, hi = n;
  while (hi - lo > 1) {
    const std::int64_t mid = (lo + hi) / 2;
    if (study_kl(modes, mid) <= goal) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double ols_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

StudyResult kl_scaling_study(const std::string& axis,
                             const std::vector<double>& values, Eigen::Index dim,
                             double eps, double c_h, double init_kl) {
  if (values.empty()) throw DomainError("scaling study: sweep values are empty");
  if (!(eps > 0 && eps <= 1)) throw DomainError("scaling study: eps must lie in (0, 1]");
  if (!(c_h > 0)) throw DomainError("scaling study: c_h must be positive");
  if (!(init_kl > 0)) throw DomainError("scaling study: init_kl must be positive");
  if (dim < 1) throw DomainError("scaling study: dimension must be at least 1");

  StudyResult res;
  res.axis = axis;
  std::vector<double> lx, ly;
  for (const double v : values) {
    StudyPoint pt;
    std::vector<double> lams;
    double gamma = 0;
    if (axis == "d") {
      const std::int64_t d = std::llround(v);
      if (d < 1 || std::abs(double(d) - v) > 0) {
        throw DomainError("scaling study: dimensions must be positive integers");
      }
      lams.assign(std::size_t(d), 1.0);
      gamma = std::sqrt(2.0);
      pt.h = c_h * eps / std::sqrt(double(d));
      pt.axis_value = double(d);
    } else if (axis == "eps") {
      if (!(v > 0 && v <= 1)) {
        throw DomainError("scaling study: accuracies must lie in (0, 1]");
      }
      lams.assign(std::size_t(dim), 1.0);
      gamma = std::sqrt(2.0);
      pt.h = c_h * v / std::sqrt(double(dim));
      pt.axis_value = 1.0 / v;
    } else if (axis == "kappa") {
      if (!(v >= 1)) throw DomainError("scaling study: kappa must be at least 1");
      lams.resize(std::size_t(dim));
      for (Eigen::Index i = 0; i < dim; ++i) {
        lams[std::size_t(i)] =
            dim > 1 ? 1.0 + (v - 1.0) * double(i) / double(dim - 1) : v;
      }
      gamma = std::sqrt(2.0 * v);
      pt.h = c_h * eps / (v * std::sqrt(double(dim)));
      pt.axis_value = v;
    } else {
      throw DomainError("scaling study: axis must be one of d, eps, kappa");
    }
    const double point_eps = axis == "eps" ? v : eps;
    pt.n_star = bisect_n(make_modes(lams, gamma, pt.h, init_kl), point_eps);
    res.points.push_back(pt);
    lx.push_back(std::log(pt.axis_value));
    ly.push_back(std::log(double(pt.n_star)));
  }

  res.slope = values.size() > 1 ? ols_slope(lx, ly)
                                : std::numeric_limits<double>::quiet_NaN();
  if (axis == "d") {
    res.window_lo = 0.35;
    res.window_hi = 0.65;
  } else if (axis == "eps") {
    res.window_lo = 0.8;
    res.window_hi = 1.2;
  } else {
    res.window_lo = 1.0;
    res.window_hi = 1.5;
  }
  res.pass = res.slope >= res.window_lo && res.slope <= res.window_hi;
  return res;
}

}  // namespace ulmc
