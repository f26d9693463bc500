// idmaft: fit, simulate, bootstrap and check gamma-frailty AFT illness-death
// models from the command line.

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "idm/bootstrap.hpp"
#include "idm/config.hpp"
#include "idm/data.hpp"
#include "idm/error.hpp"
#include "idm/fit.hpp"
#include "idm/gof.hpp"
#include "idm/io.hpp"
#include "idm/rng.hpp"
#include "idm/simulate.hpp"

namespace fs = std::filesystem;
using namespace idm;

namespace {

struct Options {
  std::string input;
  std::string output_dir = ".";
  std::string config;
  std::string fit_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool no_frailty = false;
  std::optional<int> bootstrap;
  std::optional<std::size_t> bins;
  std::optional<double> zeta_beta;
  std::optional<double> zeta_hazard;
  std::optional<double> level;
  bool quiet = false;
};

RunConfig resolve(const Options& o) {
  RunConfig rc = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) {
    rc.seed = *o.seed;
    rc.scenario.seed = *o.seed;
  }
  if (o.no_frailty) rc.no_frailty = true;
  if (o.bootstrap) rc.bootstrap = *o.bootstrap;
  if (o.bins) rc.bins = *o.bins;
  if (o.zeta_beta) rc.fit.zeta_beta = *o.zeta_beta;
  if (o.zeta_hazard) rc.fit.zeta_hazard = *o.zeta_hazard;
  if (o.level) rc.level = *o.level;
  rc.fit.validate();
  if (!(rc.level > 0.0 && rc.level < 1.0))
    throw Error(ErrorKind::ConfigError, "--level must lie in (0,1)");
  if (rc.bootstrap < 0) throw Error(ErrorKind::ConfigError, "--bootstrap must be non-negative");
  if (rc.bins < 2) throw Error(ErrorKind::ConfigError, "--bins must be at least 2");
  return rc;
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::IoError, "cannot create output directory '" + o.output_dir + "'");
  return dir;
}

template <class Fn>
void write_file(const fs::path& path, Fn fn) {
  std::ostringstream s;
  fn(s);
  write_text_file(path.string(), s.str());
}

Dataset read_input(const Options& o) {
  if (o.input.empty()) throw Error(ErrorKind::ConfigError, "--input is required");
  return read_csv_file(o.input);
}

void log_line(const Options& o, const std::string& text) {
  if (!o.quiet) std::cerr << text << '\n';
}

void write_trace_csv(std::ostream& out, const ModelFit& fit) {
  out << "iteration,sigma,max_delta_beta,delta_h01,delta_h02,delta_h12,delta_sigma\n";
  for (const TraceEntry& t : fit.trace) {
    out << t.iteration << ',';
    write_number(out, t.sigma ? *t.sigma : std::nan(""));
    out << ',';
    write_number(out, t.max_delta_beta);
    for (double d : t.delta_hazard) {
      out << ',';
      write_number(out, d);
    }
    out << ',';
    write_number(out, t.sigma ? t.delta_sigma : std::nan(""));
    out << '\n';
  }
}

ModelFit run_fit(const Dataset& data, const RunConfig& rc) {
  return rc.no_frailty ? fit_no_frailty(data, rc.fit) : fit(data, rc.fit);
}

Json fit_document(const ModelFit& f, const RunConfig& rc, const Dataset& data) {
  Json j = fit_to_json(f);
  j["n"] = data.size();
  for (const auto& w : data.warnings()) j["warnings"].push_back(w);
  j["seed"] = rc.seed;
  return j;
}

void save_fit_artifacts(const fs::path& dir, const ModelFit& f, const Json& doc) {
  write_text_file((dir / "fit.json").string(), doc.dump(2) + "\n");
  for (const TransitionFit& tf : f.transitions)
    write_file(dir / ("hazard_" + std::string(to_string(tf.transition)) + ".csv"),
               [&](std::ostream& s) { write_hazard_grid_csv(s, tf); });
  write_file(dir / "iterations.csv", [&](std::ostream& s) { write_trace_csv(s, f); });
}

void write_bootstrap_artifacts(const fs::path& dir, const ModelFit& f,
                               const BootstrapResult& boot, const RunConfig& rc) {
  const InferenceTable table = wald_table(f, boot, rc.level);
  write_file(dir / "inference.csv", [&](std::ostream& s) { write_inference_csv(s, table); });
  Json j;
  j["level"] = rc.level;
  j["B"] = boot.requested;
  j["failed"] = boot.n_failed;
  j["failures"] = boot.failures;
  j["bootstrap_seed"] = boot.seed;
  j["inference"] = inference_to_json(table);
  write_text_file((dir / "bootstrap.json").string(), j.dump(2) + "\n");
  write_file(dir / "bootstrap_replicates.csv", [&](std::ostream& s) {
    s << "replicate,seed,iterations";
    for (const auto& id : boot.parameters)
      s << ',' << (id.transition.empty() ? id.name : id.name + "_" + id.transition);
    s << '\n';
    for (const auto& r : boot.replicates) {
      s << r.index << ',' << r.seed << ',' << r.iterations;
      for (double v : r.parameters) {
        s << ',';
        write_number(s, v);
      }
      s << '\n';
    }
  });
}

// The bootstrap stream is derived from the run seed so that --seed alone
// fixes every random draw.
std::uint64_t bootstrap_seed(std::uint64_t seed) { return derive_seed(seed, 0xB007); }

int cmd_fit(const Options& o) {
  RunConfig rc = resolve(o);
  const Dataset data = read_input(o);
  const fs::path dir = output_dir(o);
  const ModelFit f = run_fit(data, rc);
  log_line(o, "fit: " + std::to_string(f.iterations) + " iterations, converged=" +
                  (f.converged ? "true" : "false"));
  Json doc = fit_document(f, rc, data);
  if (rc.bootstrap > 0) {
    BootstrapOptions bo;
    bo.no_frailty = rc.no_frailty;
    bo.warm_start = rc.warm_start;
    const BootstrapResult boot = bootstrap(data, rc.fit, rc.bootstrap, bootstrap_seed(rc.seed), bo, &f);
    doc["bootstrap_seed"] = boot.seed;
    write_bootstrap_artifacts(dir, f, boot, rc);
  }
  save_fit_artifacts(dir, f, doc);
  return 0;
}

int cmd_bootstrap(const Options& o) {
  RunConfig rc = resolve(o);
  if (rc.bootstrap < 2) throw Error(ErrorKind::ConfigError, "bootstrap needs --bootstrap B with B >= 2");
  return cmd_fit(o);
}

int cmd_simulate(const Options& o) {
  RunConfig rc = resolve(o);
  rc.scenario.validate();
  const fs::path dir = output_dir(o);
  const SimulatedData sim = simulate_dataset(rc.scenario, rc.seed);
  write_csv_file((dir / "data.csv").string(), sim.data);
  write_file(dir / "truth.csv", [&](std::ostream& s) {
    s << "t1,t2,gamma,censor\n";
    for (std::size_t i = 0; i < sim.truth.t1.size(); ++i) {
      write_number(s, sim.truth.t1[i]);
      s << ',';
      write_number(s, sim.truth.t2[i]);
      s << ',';
      write_number(s, sim.truth.gamma[i]);
      s << ',';
      write_number(s, sim.truth.censor[i]);
      s << '\n';
    }
  });
  const CensoringRates cr = censoring_rates(sim.data);
  Json j;
  j["seed"] = rc.seed;
  j["n"] = sim.data.size();
  j["sigma"] = rc.scenario.sigma ? Json(*rc.scenario.sigma) : Json(nullptr);
  j["censored_before_first_event"] = cr.before_first_event;
  j["censored_after_diagnosis"] = cr.after_diagnosis;
  write_text_file((dir / "simulation.json").string(), j.dump(2) + "\n");
  return 0;
}

int cmd_experiment(const Options& o) {
  RunConfig rc = resolve(o);
  const fs::path dir = output_dir(o);
  ExperimentOptions eo;
  eo.no_frailty = rc.no_frailty;
  eo.bootstrap = rc.bootstrap;
  eo.level = rc.level;
  eo.on_replicate = [&](const ReplicateOutcome& r) {
    log_line(o, "replicate " + std::to_string(r.index) + (r.ok ? " ok" : " failed: " + r.error) +
                    " (" + std::to_string(r.iterations) + " iterations)");
  };
  const ExperimentSummary s = run_experiment(rc.scenario, rc.fit, eo);
  write_file(dir / "parameters.csv", [&](std::ostream& out) { write_parameter_summary_csv(out, s); });
  write_file(dir / "hazards.csv", [&](std::ostream& out) { write_hazard_summary_csv(out, s); });
  Json reps = Json::array();
  for (const auto& r : s.outcomes) {
    Json e;
    e["replicate"] = r.index;
    e["seed"] = r.seed;
    e["ok"] = r.ok;
    if (!r.ok) e["error"] = r.error;
    e["iterations"] = r.iterations;
    Json est = Json::array();
    for (double v : r.estimates) est.push_back(json_number(v));
    e["estimates"] = std::move(est);
    reps.push_back(std::move(e));
  }
  Json j;
  j["seed"] = rc.seed;
  j["replicates"] = rc.scenario.replicates;
  j["failures"] = s.failures;
  j["fit"] = rc.no_frailty ? "no-frailty" : "frailty";
  j["bootstrap"] = rc.bootstrap;
  j["outcomes"] = std::move(reps);
  write_text_file((dir / "experiment.json").string(), j.dump(2) + "\n");
  return 0;
}

Json report_json(const UniformityReport& r) {
  return {{"n", r.n}, {"bins", r.count.size()}, {"ks_statistic", json_number(r.ks_statistic)},
          {"ks_p_value", json_number(r.ks_p_value)}};
}

int cmd_gof(const Options& o) {
  RunConfig rc = resolve(o);
  if (o.fit_path.empty()) throw Error(ErrorKind::ConfigError, "gof needs --fit <fit.json>");
  const Dataset data = read_input(o);
  const ModelFit f = load_fit(o.fit_path);
  if (f.covariate_names != data.covariate_names())
    throw Error(ErrorKind::DimensionMismatch,
                "covariate columns of '" + o.input + "' do not match those of the fit");
  const fs::path dir = output_dir(o);
  const std::uint64_t u_seed = derive_seed(rc.seed, 0x6F0F);
  const RspSample sample = rsp(data, f, u_seed);
  Json j;
  j["u_seed"] = u_seed;
  j["beyond_range"] = sample.beyond_range;
  if (sample.beyond_range > 0)
    j["warnings"].push_back(std::to_string(sample.beyond_range) +
                            " subjects have times past the hazard estimation range; "
                            "their survival is floored at the boundary value");
  const std::pair<const char*, const std::vector<double>*> parts[] = {
      {"rsp0", &sample.rsp0}, {"rsp12", &sample.rsp12},
      {"survival0", &sample.surv0}, {"survival12", &sample.surv12}};
  for (const auto& [name, values] : parts) {
    if (values->empty()) {
      j[name] = nullptr;
      continue;
    }
    const UniformityReport r = uniformity_report(*values, rc.bins);
    write_file(dir / (std::string(name) + "_histogram.csv"),
               [&](std::ostream& s) { write_histogram_csv(s, r); });
    j[name] = report_json(r);
  }
  write_text_file((dir / "gof.json").string(), j.dump(2) + "\n");
  return 0;
}

void report_error(const Options& o, ErrorKind kind, const std::string& message) {
  const std::string text = error_json(kind, message).dump(2);
  std::cerr << text << '\n';
  std::error_code ec;
  if (!o.output_dir.empty() && fs::is_directory(o.output_dir, ec)) {
    std::ofstream out(fs::path(o.output_dir) / "error.json");
    out << text << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma-frailty AFT illness-death models: fitting, simulation, bootstrap and GOF"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI config file");
    sub->add_option("--output-dir", o.output_dir, "Directory for output files");
    sub->add_option("--seed", o.seed, "Master seed for every random draw");
    sub->add_option("--threads", o.threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--zeta-beta", o.zeta_beta, "Bandwidth constant for the β likelihoods");
    sub->add_option("--zeta-hazard", o.zeta_hazard, "Bandwidth constant for the hazard estimators");
    sub->add_flag("--quiet", o.quiet, "No progress lines on stderr");
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit the frailty model to a CSV dataset");
  auto* nf_cmd = app.add_subcommand("fit-no-frailty", "Fit the model without frailty");
  auto* boot_cmd = app.add_subcommand("bootstrap", "Fit and run the weighted bootstrap");
  for (auto* sub : {fit_cmd, nf_cmd, boot_cmd}) {
    add_common(sub);
    sub->add_option("--input", o.input, "Dataset CSV")->required();
    sub->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates B");
    sub->add_option("--level", o.level, "Confidence level");
  }
  for (auto* sub : {fit_cmd, boot_cmd}) sub->add_flag("--no-frailty", o.no_frailty, "Fit without frailty");

  auto* sim_cmd = app.add_subcommand("simulate", "Simulate one dataset from a scenario");
  add_common(sim_cmd);

  auto* exp_cmd = app.add_subcommand("experiment", "Simulate and fit replicate datasets");
  add_common(exp_cmd);
  exp_cmd->add_flag("--no-frailty", o.no_frailty, "Fit without frailty");
  exp_cmd->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates B per dataset");
  exp_cmd->add_option("--level", o.level, "Confidence level");

  auto* gof_cmd = app.add_subcommand("gof", "Randomized survival probability histograms");
  add_common(gof_cmd);
  gof_cmd->add_option("--input", o.input, "Dataset CSV")->required();
  gof_cmd->add_option("--fit", o.fit_path, "fit.json written by fit")->required();
  gof_cmd->add_option("--bins", o.bins, "Histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (o.threads > 0) omp_set_num_threads(o.threads);
  try {
    if (fit_cmd->parsed()) return cmd_fit(o);
    if (nf_cmd->parsed()) {
      o.no_frailty = true;
      return cmd_fit(o);
    }
    if (boot_cmd->parsed()) return cmd_bootstrap(o);
    if (sim_cmd->parsed()) return cmd_simulate(o);
    if (exp_cmd->parsed()) return cmd_experiment(o);
    if (gof_cmd->parsed()) return cmd_gof(o);
  } catch (const RowError& e) {
    report_error(o, e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    report_error(o, e.kind(), e.what());
    return is_input_error(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    report_error(o, ErrorKind::IoError, e.what());
    return 1;
  }
  return 0;
}
