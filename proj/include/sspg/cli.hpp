#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sspg/estimators.hpp"
#include "sspg/problem.hpp"
#include "sspg/solver.hpp"

namespace sspg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitVerifyFailed = 3,
};

/// Bad configuration, detected before any compute.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigMap = std::map<std::string, std::string>;

/// `key = value` per line; '#' starts a comment; blank lines are ignored.
ConfigMap parse_config_text(std::string_view text);
ConfigMap read_config_file(const std::string& path);

struct KeyInfo {
  std::string name;
  std::string default_value;  // "auto" means experiment-dependent
  std::string help;
};

/// Every accepted key with its default.
const std::vector<KeyInfo>& config_keys();

struct RunConfig {
  std::string experiment = "newsvendor";  // newsvendor | regression | toy
  std::string method = "sspg";            // sspg | gdmax | sdro_fixed
  std::uint64_t seed = 1;
  std::uint64_t iters = 1000;
  std::string out = "trace.csv";  // empty: no trace file
  int workers = 1;

  // initialization; unset values are drawn from the seed's "init" stream
  std::optional<double> init_theta;
  std::optional<double> init_lambda;
  std::optional<double> init_eta;
  double init_lambda_lo = 7.0;
  double init_lambda_hi = 15.0;
  double init_eta_lo = 0.1;
  double init_eta_hi = 1.0;
  std::optional<double> mu0;  // default lambda0 * eta

  std::string schedule = "adaptive";  // constant | power | adaptive | restart
  std::optional<double> schedule_eps;
  double sigma1 = 0.99;
  double sigma2 = 0.5;
  double floor_ratio = 1e-4;
  std::optional<double> restart_c2;
  double restart_delta = 1.0;

  std::string stepsize = "fixed";  // fixed | staged | theory
  double alpha = 0.1;
  double gamma = 1.0;
  int period = 20;
  std::optional<double> theory_c2;

  std::string estimator = "gaussian";  // gaussian | ball | exact
  int samples = 32;
  double noise_std = 0.1;
  bool retain_improvers = false;
  double eps_hat = 0.0;
  int grid = 201;  // points per free axis of the finite surrogate for `exact`

  InnerMaxConfig inner;

  int diag_every = 10;
  std::string stationarity = "auto";  // auto | always | never
  bool primal = true;
  bool wallclock = false;
  int high_accuracy_samples = 10000;

  // WDRO
  double delta = 1.0;
  int order = 2;
  double lambda_min = 7.0;
  double lambda_cap = std::numeric_limits<double>::infinity();
  double sdro_lambda = 7.0;
  double sdro_eta = 0.1;

  // newsvendor
  double nv_v = 5.0;
  double nv_u = 7.0;
  std::size_t nv_n = 100;
  double nv_rate = 1.0;

  // regression
  std::string reg_data;  // sparse text file; empty means synthetic
  std::size_t reg_n = 200;
  Index reg_features = 2;
  double reg_noise = 0.5;
  double reg_test_fraction = 0.2;
  double reg_upsilon = 2.0;
  std::string reg_scale = "train";  // train | each
  Index reg_hidden = 3;
  bool reg_select_lr = false;
  std::vector<double> reg_lr_grid{0.1, 0.5, 0.01, 0.05, 0.001};

  // toy
  std::size_t toy_n = 20;
  std::size_t toy_points = 8;
  Index toy_dim = 3;

  // gradcheck
  double gc_mu = 0.5;
  int gc_points = 20;
  double gc_h = 1e-6;
  int gc_support = 16;

  // verify
  std::string verify_fault = "none";  // none | lip
};

/// Defaults for an experiment (the protocol values of its study).
RunConfig default_config(const std::string& experiment);

/// defaults < file < overrides. Unknown keys and malformed or out-of-range
/// values raise ValidationError.
RunConfig resolve_config(const ConfigMap& file, const ConfigMap& overrides);

/// Range and consistency checks; also checks that referenced files exist.
void validate_config(const RunConfig& cfg);

/// Every key with its effective value, as `key = value` lines.
std::string dump_config(const RunConfig& cfg);

struct ExperimentOutcome {
  SolverState state;
  std::vector<std::pair<std::string, std::string>> summary;  // ordered key=value fields

  std::string summary_line() const;
  std::optional<std::string> field(const std::string& key) const;
};

/// Runs the configured experiment and method; does not write files.
ExperimentOutcome run_experiment(const RunConfig& cfg);

/// Random finite min-sum-max problem on y in [-1, 1]^dim:
/// psi(y, z) = a . y + c - 0.5 ||y - a||^2 with z = (a, c) on `points`
/// support points per term.
MinSumMaxProblem make_toy_problem(std::size_t n, std::size_t points, Index dim,
                                  std::uint64_t seed);

/// Replaces every Box support by the tensor grid with `per_axis` points on
/// each free coordinate (pinned coordinates kept).
MinSumMaxProblem finite_grid_surrogate(const MinSumMaxProblem& problem, int per_axis);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double margin = 0.0;  // worst slack (>= 0 passes) or worst measured error
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  bool planted_lip_fault = false;
};

std::vector<SuiteResult> run_verify(const VerifyOptions& options);

struct GradcheckReport {
  bool skipped = false;
  std::string warning;
  int points = 0;
  double max_rel_error_y = 0.0;
  double max_rel_error_mu = 0.0;
};

/// Central differences against the analytic gradients of the configured
/// instance on a finite surrogate of its supports, at random feasible y.
GradcheckReport gradcheck(const RunConfig& cfg);

/// Entry point of the `sspg` tool.
int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sspg::cli
