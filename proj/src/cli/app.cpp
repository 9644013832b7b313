#include <CLI11.hpp>

#include <optional>
#include <ostream>

#include "sspg/cli.hpp"
#include "sspg/data_io.hpp"
#include "sspg/trace_csv.hpp"

namespace sspg::cli {

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::string> iters;
  std::optional<std::string> method;
  std::optional<std::string> experiment;
  std::optional<std::string> out;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "key = value config file");
  sub->add_option("--seed", f.seed, "root seed");
  sub->add_option("--iters", f.iters, "iterations");
  sub->add_option("--method", f.method, "sspg | gdmax | sdro_fixed");
  sub->add_option("--experiment", f.experiment, "newsvendor | regression | toy");
  sub->add_option("--out", f.out, "trace CSV path");
  sub->allow_extras();
  sub->footer("Any config key can be overridden with --key value or --key=value.");
}

// Unrecognized arguments as dotted overrides: --key value or --key=value.
ConfigMap extra_overrides(const std::vector<std::string>& extras) {
  ConfigMap out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) {
      throw ValidationError("unexpected argument '" + arg + "'");
    }
    const std::string body = arg.substr(2);
    if (const std::size_t eq = body.find('='); eq != std::string::npos) {
      out[body.substr(0, eq)] = body.substr(eq + 1);
      continue;
    }
    if (i + 1 >= extras.size()) throw ValidationError("missing value for '" + arg + "'");
    out[body] = extras[++i];
  }
  return out;
}

RunConfig resolve_from_flags(const CLI::App* sub, const CommonFlags& f) {
  ConfigMap overrides = extra_overrides(sub->remaining());
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) overrides[key] = *v;
  };
  put("seed", f.seed);
  put("iters", f.iters);
  put("method", f.method);
  put("experiment", f.experiment);
  put("out", f.out);
  const ConfigMap file = f.config.empty() ? ConfigMap{} : read_config_file(f.config);
  return resolve_config(file, overrides);
}

int run_command(const CLI::App* sub, const CommonFlags& f, bool print_config, std::ostream& out,
                std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = resolve_from_flags(sub, f);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (print_config) {
    out << dump_config(cfg);
    return kExitOk;
  }
  ExperimentOutcome outcome;
  try {
    outcome = run_experiment(cfg);
    if (!cfg.out.empty()) write_trace_csv(outcome.state.trace, cfg.out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << cfg.experiment << "/" << cfg.method << " seed " << cfg.seed << ": " << e.what()
        << "\n";
    return kExitRuntime;
  }
  outcome.summary.emplace_back("trace", cfg.out.empty() ? "none" : cfg.out);
  err << cfg.method << " on " << cfg.experiment << ": " << outcome.state.iter << " iterations, "
      << outcome.state.trace.size() << " trace rows";
  if (const auto v = outcome.field("final_primal")) err << ", unsmoothed objective " << *v;
  if (const auto v = outcome.field("final_lambda")) err << ", lambda " << *v;
  if (const auto v = outcome.field("rmse_perturbed")) err << ", perturbed RMSE " << *v;
  err << "\n";
  out << outcome.summary_line() << "\n";
  return kExitOk;
}

int verify_command(std::uint64_t seed, const std::string& fault, std::ostream& out, std::ostream& err) {
  VerifyOptions opt;
  opt.seed = seed;
  opt.planted_lip_fault = fault == "lip";
  std::vector<SuiteResult> results;
  try {
    results = run_verify(opt);
  } catch (const std::exception& e) {
    err << "error: verify: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::size_t failed = 0;
  for (const SuiteResult& r : results) {
    out << "suite=" << r.name << " status=" << (r.passed ? "pass" : "fail") << " cases=" << r.cases
        << " margin=" << format_double(r.margin) << "\n";
    if (!r.detail.empty()) err << r.name << ": " << r.detail << "\n";
    if (!r.passed) ++failed;
  }
  out << "verify status=" << (failed == 0 ? "pass" : "fail") << " suites=" << results.size()
      << " failed=" << failed << "\n";
  return failed == 0 ? kExitOk : kExitVerifyFailed;
}

int gradcheck_command(const CLI::App* sub, const CommonFlags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = resolve_from_flags(sub, f);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  GradcheckReport rep;
  try {
    rep = gradcheck(cfg);
  } catch (const std::exception& e) {
    err << "error: gradcheck: " << e.what() << "\n";
    return kExitRuntime;
  }
  out << "gradcheck experiment=" << cfg.experiment << " mu=" << format_double(cfg.gc_mu);
  if (rep.skipped) {
    err << "warning: " << rep.warning << "\n";
    out << " status=skipped\n";
    return kExitOk;
  }
  const double tol = 1e-4;
  const bool pass = rep.max_rel_error_y <= tol && rep.max_rel_error_mu <= tol;
  out << " points=" << rep.points << " max_rel_err_y=" << format_double(rep.max_rel_error_y)
      << " max_rel_err_mu=" << format_double(rep.max_rel_error_mu)
      << " status=" << (pass ? "pass" : "fail") << "\n";
  return pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smoothed stochastic proximal gradient for min-sum-max problems"};
  app.name("sspg");
  app.require_subcommand(1, 1);

  CommonFlags run_flags;
  bool print_config = false;
  CLI::App* run = app.add_subcommand("run", "run an experiment and write its trace");
  add_common(run, run_flags);
  run->add_flag("--print-config", print_config, "print the effective configuration and exit");

  std::uint64_t verify_seed = 1;
  std::string fault = "none";
  CLI::App* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--seed", verify_seed, "root seed");
  verify->add_option("--fault", fault, "plant a fault: none | lip")->check(CLI::IsMember({"none", "lip"}));

  CommonFlags gc_flags;
  CLI::App* gc = app.add_subcommand("gradcheck", "finite differences against analytic gradients");
  add_common(gc, gc_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (run->parsed()) return run_command(run, run_flags, print_config, out, err);
  if (verify->parsed()) return verify_command(verify_seed, fault, out, err);
  return gradcheck_command(gc, gc_flags, out, err);
}

}  // namespace sspg::cli
