// tnu: command-line front end for the t_nu location/scatter functionals.
//
// Exit codes: 0 success, 1 usage or input error, 2 law outside the existence
// domain (the report is the payload), 3 numerical failure.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tnu/json_io.hpp"
#include "tnu/tnu.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDomain = 2, kNumerical = 3 };

struct RunConfig {
  std::string command;
  double nu = 2.0;
  std::string input_path = "-";
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "json";

  std::string kind = "locscatter";
  long n = 2000;
  int reps = 200;
  unsigned threads = 0;
  std::string replicates_csv;
};

tnu::ScatterConfig solver_config(const RunConfig& cfg) {
  tnu::ScatterConfig s;
  s.nu = cfg.nu;
  s.tol_grad = cfg.tol;
  // Stagnation stop well below the requested gradient tolerance.
  s.tol_step = std::min(s.tol_step, 1e-2 * cfg.tol);
  s.max_iter = cfg.max_iter;
  return s;
}

/// Flattens a JSON value into "path,value" rows.
void flatten(const tnu::json& j, const std::string& path, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", out);
  } else {
    out << path << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

void emit(const RunConfig& cfg, const tnu::Envelope& env) {
  std::ofstream file;
  if (!cfg.output.empty()) {
    file.open(cfg.output);
    if (!file) throw tnu::ParameterError("cannot open output file '" + cfg.output + "'");
  }
  std::ostream& out = cfg.output.empty() ? std::cout : file;
  const tnu::json j = tnu::to_json(env);
  if (cfg.format == "csv") {
    out << "field,value\n";
    flatten(j, "", out);
  } else {
    out << j.dump(2) << '\n';
  }
}

void write_replicates(const std::string& path, const std::vector<tnu::Vector>& reps) {
  std::ofstream f(path);
  if (!f) throw tnu::ParameterError("cannot open replicate file '" + path + "'");
  f.precision(17);
  const Eigen::Index k = reps.empty() ? 0 : reps.front().size();
  for (Eigen::Index i = 0; i < k; ++i) f << (i ? "," : "") << "theta_" << i;
  f << '\n';
  for (const tnu::Vector& v : reps) {
    for (Eigen::Index i = 0; i < v.size(); ++i) f << (i ? "," : "") << v(i);
    f << '\n';
  }
}

tnu::json run(const RunConfig& cfg, std::vector<std::string>& warnings, bool& converged) {
  using namespace tnu;
  const EmpiricalSample sample = ingest_csv(cfg.input_path);
  const double a0 = cfg.nu + static_cast<double>(sample.dim());
  converged = true;

  if (cfg.command == "estimate") {
    const LocScatEstimate est = solve_locscatter(sample, cfg.nu, solver_config(cfg));
    converged = est.converged;
    return to_json(est);
  }
  if (cfg.command == "scatter") {
    const ScatterResult res = solve_scatter(sample, solver_config(cfg));
    converged = res.converged;
    return to_json(res);
  }
  if (cfg.command == "check-domain") {
    const DomainReport rep = cfg.kind == "scatter" ? check_scatter_domain_auto(sample, a0)
                                                   : check_locscat_domain_auto(sample, a0);
    if (!rep.exact) warnings.push_back("randomized domain search: a member verdict is not a proof");
    return to_json(rep);
  }
  if (cfg.command == "asymptotics") {
    const AsymptoticCov cov = cfg.kind == "scatter" ? asymptotic_cov_scatter(sample, cfg.nu, solver_config(cfg))
                                                    : asymptotic_cov_locscatter(sample, cfg.nu, solver_config(cfg));
    return to_json(cov);
  }
  if (cfg.command == "oned") {
    if (sample.dim() != 1) throw ParameterError("oned: input must have exactly one data column");
    return to_json(solve_oned(sample, cfg.nu));
  }
  // simulate: the input file is the (discrete) target law.
  McOptions opt;
  opt.estimator = cfg.kind == "scatter" ? EstimatorKind::scatter : EstimatorKind::locscatter;
  opt.threads = cfg.threads;
  opt.solver = solver_config(cfg);
  opt.keep_replicates = !cfg.replicates_csv.empty();
  const Sampler sampler = Sampler::discrete(sample, cfg.seed);
  const McReport rep = run_clt_experiment(sampler, cfg.nu, cfg.n, cfg.reps, opt);
  if (rep.flagged) warnings.push_back("existence rate below 0.99: law is near the domain boundary");
  if (rep.solver_failures > 0) warnings.push_back(std::to_string(rep.solver_failures) + " replicate solves failed");
  if (opt.keep_replicates) write_replicates(cfg.replicates_csv, rep.replicate_estimates);
  return to_json(rep);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"t_nu M-functionals of location and scatter"};
  app.require_subcommand(1);

  auto add_common = [&cfg](CLI::App* sub) {
    sub->add_option("input", cfg.input_path, "CSV file, '-' for stdin")->required();
    sub->add_option("--nu", cfg.nu, "degrees of freedom")->required();
    sub->add_option("--tol", cfg.tol, "gradient tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("-o,--output", cfg.output, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  };
  auto kind_option = [&cfg](CLI::App* sub) {
    sub->add_option("--kind", cfg.kind, "scatter or locscatter")->check(CLI::IsMember({"scatter", "locscatter"}));
  };

  std::vector<CLI::App*> subs;
  subs.push_back(app.add_subcommand("estimate", "location-scatter functional (mu, Sigma)"));
  subs.push_back(app.add_subcommand("scatter", "pure-scatter functional A"));
  CLI::App* check = app.add_subcommand("check-domain", "existence-domain report");
  subs.push_back(check);
  CLI::App* asym = app.add_subcommand("asymptotics", "asymptotic covariance of sqrt(n)-errors");
  subs.push_back(asym);
  subs.push_back(app.add_subcommand("oned", "extended one-dimensional functional"));
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo CLT experiment on the input law");
  subs.push_back(sim);
  for (CLI::App* s : subs) add_common(s);
  kind_option(check);
  kind_option(asym);
  kind_option(sim);
  sim->add_option("--n", cfg.n, "sample size per replicate")->check(CLI::PositiveNumber);
  sim->add_option("--reps", cfg.reps, "number of replicates")->check(CLI::Range(2, 100000000));
  sim->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  sim->add_option("--replicates-csv", cfg.replicates_csv, "write per-replicate estimates here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  for (CLI::App* s : subs)
    if (s->parsed()) cfg.command = s->get_name();

  tnu::Envelope env;
  env.command = cfg.command;
  const bool needs_above_one =
      cfg.command == "estimate" || cfg.command == "oned" || (cfg.command != "scatter" && cfg.kind == "locscatter");
  if (!(cfg.nu > 0.0) || (needs_above_one && !(cfg.nu > 1.0))) {
    std::cerr << "tnu: --nu must be " << (needs_above_one ? "> 1" : "> 0") << " for " << cfg.command << '\n';
    return kUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  int rc = kOk;
  try {
    bool converged = true;
    env.payload = run(cfg, env.warnings, converged);
    if (!converged) {
      env.status = "not_converged";
      env.error = "iteration cap reached before the gradient tolerance";
      rc = kNumerical;
    }
  } catch (const tnu::DomainViolation& e) {
    env.status = "domain_violation";
    env.error = e.what();
    env.payload = tnu::to_json(e.report());
    rc = kDomain;
  } catch (const tnu::ParameterError& e) {
    std::cerr << "tnu: " << e.what() << '\n';
    return kUsage;
  } catch (const tnu::ParseError& e) {
    std::cerr << "tnu: " << e.what() << '\n';
    return kUsage;
  } catch (const tnu::Error& e) {
    env.status = "numerical_failure";
    env.error = e.what();
    env.payload = tnu::json::object();
    rc = kNumerical;
  }
  env.timing_ms = elapsed();
  try {
    emit(cfg, env);
  } catch (const tnu::Error& e) {
    std::cerr << "tnu: " << e.what() << '\n';
    return kUsage;
  }
  if (rc != kOk) std::cerr << "tnu: " << env.error << '\n';
  return rc;
}
