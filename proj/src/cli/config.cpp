#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "sspg/cli.hpp"
#include "sspg/data_io.hpp"

namespace sspg::cli {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double to_double(const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  return parse_double(v);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::string choice(const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed) {
    if (v == a) return v;
  }
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
  throw std::invalid_argument("expected one of " + list + ", got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  return out;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}
std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "auto"; }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SSPG_KEY(NAME, HELP, FIELD, PARSE, FORMAT)                                    \
  Key {                                                                               \
    NAME, HELP, [](RunConfig& c, const std::string& v) { c.FIELD = PARSE(v); },       \
        [](const RunConfig& c) -> std::string { return FORMAT(c.FIELD); }             \
  }

std::string str(const std::string& s) { return s; }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string inum(int v) { return std::to_string(v); }
std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }
Index to_index(const std::string& v) { return static_cast<Index>(to_int(v)); }
std::string size_str(std::size_t v) { return std::to_string(v); }
std::string index_str(Index v) { return std::to_string(v); }
std::optional<double> to_opt(const std::string& v) {
  if (v == "auto") return std::nullopt;
  return to_double(v);
}
std::string list_str(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + fmt(x);
  return out;
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      Key{"experiment", "newsvendor | regression | toy",
          [](RunConfig& c, const std::string& v) {
            c.experiment = choice(v, {"newsvendor", "regression", "toy"});
          },
          [](const RunConfig& c) { return c.experiment; }},
      Key{"method", "sspg | gdmax | sdro_fixed",
          [](RunConfig& c, const std::string& v) { c.method = choice(v, {"sspg", "gdmax", "sdro_fixed"}); },
          [](const RunConfig& c) { return c.method; }},
      SSPG_KEY("seed", "root seed of every random stream", seed, to_u64, num),
      SSPG_KEY("iters", "number of iterations K", iters, to_u64, num),
      SSPG_KEY("out", "trace CSV path (empty: none)", out, str, str),
      SSPG_KEY("workers", "threads for per-term work", workers, to_int, inum),
      SSPG_KEY("init.theta", "initial theta (newsvendor; auto draws U(0,1))", init_theta, to_opt, fmt),
      SSPG_KEY("init.lambda", "initial lambda (auto draws U(lo,hi))", init_lambda, to_opt, fmt),
      SSPG_KEY("init.eta", "eta with mu0 = lambda0 * eta (auto draws U(lo,hi))", init_eta, to_opt, fmt),
      SSPG_KEY("init.lambda_lo", "lower end of the lambda0 draw", init_lambda_lo, to_double, fmt),
      SSPG_KEY("init.lambda_hi", "upper end of the lambda0 draw", init_lambda_hi, to_double, fmt),
      SSPG_KEY("init.eta_lo", "lower end of the eta draw", init_eta_lo, to_double, fmt),
      SSPG_KEY("init.eta_hi", "upper end of the eta draw", init_eta_hi, to_double, fmt),
      SSPG_KEY("mu0", "initial smoothing parameter (auto: lambda0 * eta)", mu0, to_opt, fmt),
      Key{"schedule", "constant | power | adaptive | restart",
          [](RunConfig& c, const std::string& v) {
            c.schedule = choice(v, {"constant", "power", "adaptive", "restart"});
          },
          [](const RunConfig& c) { return c.schedule; }},
      SSPG_KEY("schedule.eps", "mu for the constant schedule (auto: mu0)", schedule_eps, to_opt, fmt),
      SSPG_KEY("schedule.sigma1", "adaptive shrink factor", sigma1, to_double, fmt),
      SSPG_KEY("schedule.sigma2", "adaptive decrease exponent", sigma2, to_double, fmt),
      SSPG_KEY("schedule.floor_ratio", "mu floor as a fraction of mu0", floor_ratio, to_double, fmt),
      SSPG_KEY("schedule.c2", "C2 of the restart schedule (auto: from the instance)", restart_c2, to_opt, fmt),
      SSPG_KEY("schedule.delta_bound", "Delta of the restart schedule", restart_delta, to_double, fmt),
      Key{"stepsize", "fixed | staged | theory",
          [](RunConfig& c, const std::string& v) { c.stepsize = choice(v, {"fixed", "staged", "theory"}); },
          [](const RunConfig& c) { return c.stepsize; }},
      SSPG_KEY("stepsize.alpha", "learning rate (fixed) or alpha0 (staged)", alpha, to_double, fmt),
      SSPG_KEY("stepsize.gamma", "staged decay factor", gamma, to_double, fmt),
      SSPG_KEY("stepsize.period", "staged decay period", period, to_int, inum),
      SSPG_KEY("stepsize.c2", "theory C2 (auto: L mu0 + 2 l^2)", theory_c2, to_opt, fmt),
      Key{"estimator", "gaussian | ball | exact",
          [](RunConfig& c, const std::string& v) { c.estimator = choice(v, {"gaussian", "ball", "exact"}); },
          [](const RunConfig& c) { return c.estimator; }},
      SSPG_KEY("estimator.samples", "M, samples per term", samples, to_int, inum),
      SSPG_KEY("estimator.noise_std", "std of the gaussian cloud", noise_std, to_double, fmt),
      SSPG_KEY("estimator.retain_improvers", "keep only samples beating the center", retain_improvers, to_bool, fmt),
      SSPG_KEY("estimator.eps_hat", "target accuracy (0: full batch)", eps_hat, to_double, fmt),
      SSPG_KEY("estimator.grid", "points per free axis of the finite surrogate (exact)", grid, to_int, inum),
      SSPG_KEY("inner.step", "inner ascent step", inner.step_size, to_double, fmt),
      SSPG_KEY("inner.iters", "inner ascent iterations", inner.iterations, to_int, inum),
      SSPG_KEY("inner.noise", "scale of the inner start perturbation", inner.init_noise_scale, to_double, fmt),
      SSPG_KEY("inner.restarts", "inner ascent restarts", inner.restarts, to_int, inum),
      SSPG_KEY("diag.every", "diagnostics cadence T (0: last row only)", diag_every, to_int, inum),
      Key{"diag.stationarity", "auto | always | never",
          [](RunConfig& c, const std::string& v) { c.stationarity = choice(v, {"auto", "always", "never"}); },
          [](const RunConfig& c) { return c.stationarity; }},
      SSPG_KEY("diag.primal", "record the unsmoothed objective estimate", primal, to_bool, fmt),
      SSPG_KEY("diag.wallclock", "record wallclock_ms (breaks byte-identical traces)", wallclock, to_bool, fmt),
      SSPG_KEY("diag.high_accuracy_samples", "samples of the diagnostic estimator", high_accuracy_samples, to_int, inum),
      SSPG_KEY("delta", "Wasserstein radius", delta, to_double, fmt),
      SSPG_KEY("p", "Wasserstein order", order, to_int, inum),
      SSPG_KEY("lambda_min", "lower bound on lambda", lambda_min, to_double, fmt),
      SSPG_KEY("lambda_cap", "upper bound on lambda (inf allowed)", lambda_cap, to_double, fmt),
      SSPG_KEY("sdro.lambda", "fixed lambda of sdro_fixed", sdro_lambda, to_double, fmt),
      SSPG_KEY("sdro.eta", "eta of sdro_fixed (mu = lambda * eta)", sdro_eta, to_double, fmt),
      SSPG_KEY("nv.v", "underage cost v", nv_v, to_double, fmt),
      SSPG_KEY("nv.u", "overage cost u", nv_u, to_double, fmt),
      SSPG_KEY("nv.n", "number of demand samples", nv_n, to_size, size_str),
      SSPG_KEY("nv.rate", "rate of the exponential demand", nv_rate, to_double, fmt),
      SSPG_KEY("reg.data", "sparse regression file (empty: synthetic)", reg_data, str, str),
      SSPG_KEY("reg.n", "synthetic rows", reg_n, to_size, size_str),
      SSPG_KEY("reg.features", "synthetic feature count", reg_features, to_index, index_str),
      SSPG_KEY("reg.noise", "synthetic label noise std", reg_noise, to_double, fmt),
      SSPG_KEY("reg.test_fraction", "test share of the split", reg_test_fraction, to_double, fmt),
      SSPG_KEY("reg.upsilon", "test perturbation scale", reg_upsilon, to_double, fmt),
      Key{"reg.scale", "train | each: where scaler statistics come from",
          [](RunConfig& c, const std::string& v) { c.reg_scale = choice(v, {"train", "each"}); },
          [](const RunConfig& c) { return c.reg_scale; }},
      SSPG_KEY("reg.hidden", "hidden width of the MLP", reg_hidden, to_index, index_str),
      SSPG_KEY("reg.select_lr", "pick the learning rate from reg.lr_grid by perturbed RMSE", reg_select_lr, to_bool, fmt),
      SSPG_KEY("reg.lr_grid", "comma-separated learning rates", reg_lr_grid, to_list, list_str),
      SSPG_KEY("toy.n", "toy terms", toy_n, to_size, size_str),
      SSPG_KEY("toy.points", "toy support points per term", toy_points, to_size, size_str),
      SSPG_KEY("toy.dim", "toy dimension", toy_dim, to_index, index_str),
      SSPG_KEY("gradcheck.mu", "mu of the gradient check", gc_mu, to_double, fmt),
      SSPG_KEY("gradcheck.points", "random points of the gradient check", gc_points, to_int, inum),
      SSPG_KEY("gradcheck.h", "central difference step", gc_h, to_double, fmt),
      SSPG_KEY("gradcheck.support", "sampled support points per term", gc_support, to_int, inum),
      Key{"verify.fault", "none | lip: plant a wrong Lipschitz constant",
          [](RunConfig& c, const std::string& v) { c.verify_fault = choice(v, {"none", "lip"}); },
          [](const RunConfig& c) { return c.verify_fault; }},
  };
  return table;
}

#undef SSPG_KEY

const Key* find_key(const std::string& name) {
  for (const Key& k : key_table()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(std::string_view(t).substr(eq + 1));
    if (end == text.size()) break;
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = [] {
    const RunConfig d = default_config("newsvendor");
    std::vector<KeyInfo> out;
    for (const Key& k : key_table()) out.push_back({k.name, k.get(d), k.help});
    return out;
  }();
  return keys;
}

RunConfig default_config(const std::string& experiment) {
  RunConfig c;
  c.experiment = experiment;
  if (experiment == "newsvendor") return c;
  if (experiment == "regression") {
    c.iters = 500;
    c.schedule = "power";
    c.inner.iterations = 5;
    c.delta = 10.0;
    c.lambda_min = 0.0;
    c.init_lambda_lo = 1.0;
    c.init_lambda_hi = 10.0;
    c.sdro_lambda = 1.0;
    c.sdro_eta = 0.1;
    return c;
  }
  if (experiment == "toy") {
    c.iters = 500;
    c.schedule = "constant";
    c.mu0 = 0.1;
    c.stepsize = "theory";
    c.estimator = "exact";
    return c;
  }
  throw ValidationError("unknown experiment '" + experiment + "'");
}

RunConfig resolve_config(const ConfigMap& file, const ConfigMap& overrides) {
  ConfigMap merged = file;
  for (const auto& [k, v] : overrides) merged[k] = v;
  std::string experiment = "newsvendor";
  if (auto it = merged.find("experiment"); it != merged.end() && it->second != "auto") {
    experiment = it->second;
  }
  RunConfig cfg = default_config(experiment);
  for (const auto& [k, v] : merged) {
    const Key* key = find_key(k);
    if (key == nullptr) throw ValidationError("unknown config key '" + k + "'");
    if (v == "auto") {
      const RunConfig d = default_config(experiment);
      key->set(cfg, key->get(d));
      continue;
    }
    try {
      key->set(cfg, v);
    } catch (const std::invalid_argument& e) {
      throw ValidationError("config key '" + k + "': " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& c) {
  check(c.workers >= 1, "workers must be >= 1");
  check(c.init_lambda_lo <= c.init_lambda_hi, "init.lambda_lo must be <= init.lambda_hi");
  check(c.init_eta_lo > 0.0 && c.init_eta_lo <= c.init_eta_hi, "need 0 < init.eta_lo <= init.eta_hi");
  check(!c.init_eta || *c.init_eta > 0.0, "init.eta must be positive");
  check(!c.mu0 || (*c.mu0 >= kMinMu && std::isfinite(*c.mu0)), "mu0 must be >= 1e-12 and finite");
  check(!c.schedule_eps || *c.schedule_eps >= kMinMu, "schedule.eps must be >= 1e-12");
  check(c.sigma1 > 0.0 && c.sigma1 <= 1.0, "schedule.sigma1 must lie in (0, 1]");
  check(c.sigma2 > 0.0, "schedule.sigma2 must be positive");
  check(c.floor_ratio > 0.0 && c.floor_ratio <= 1.0, "schedule.floor_ratio must lie in (0, 1]");
  check(!c.restart_c2 || *c.restart_c2 > 0.0, "schedule.c2 must be positive");
  check(c.restart_delta > 0.0, "schedule.delta_bound must be positive");
  check(c.alpha > 0.0 && std::isfinite(c.alpha), "stepsize.alpha must be positive");
  check(c.gamma > 0.0 && c.gamma <= 1.0, "stepsize.gamma must lie in (0, 1]");
  check(c.period >= 1, "stepsize.period must be >= 1");
  check(!c.theory_c2 || *c.theory_c2 > 0.0, "stepsize.c2 must be positive");
  check(c.samples >= 1, "estimator.samples must be >= 1");
  check(c.noise_std >= 0.0 && std::isfinite(c.noise_std), "estimator.noise_std must be >= 0");
  check(c.eps_hat >= 0.0 && std::isfinite(c.eps_hat), "estimator.eps_hat must be >= 0");
  check(c.grid >= 2, "estimator.grid must be >= 2");
  try {
    validate_inner_config(c.inner);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  check(c.diag_every >= 0, "diag.every must be >= 0");
  check(c.high_accuracy_samples >= 1, "diag.high_accuracy_samples must be >= 1");
  check(c.delta > 0.0 && std::isfinite(c.delta), "delta must be positive");
  check(c.order >= 1, "p must be >= 1");
  check(c.lambda_min >= 0.0 && std::isfinite(c.lambda_min), "lambda_min must be >= 0");
  check(c.lambda_cap >= c.lambda_min, "lambda_cap must be >= lambda_min");
  check(c.sdro_lambda > 0.0 && c.sdro_eta > 0.0, "sdro.lambda and sdro.eta must be positive");
  check(std::isfinite(c.nv_v) && std::isfinite(c.nv_u), "nv.v and nv.u must be finite");
  check(c.nv_n >= 1, "nv.n must be >= 1");
  check(c.nv_rate > 0.0, "nv.rate must be positive");
  check(c.reg_n >= 2, "reg.n must be >= 2");
  check(c.reg_features >= 1, "reg.features must be >= 1");
  check(c.reg_noise >= 0.0, "reg.noise must be >= 0");
  check(c.reg_test_fraction > 0.0 && c.reg_test_fraction < 1.0, "reg.test_fraction must lie in (0, 1)");
  check(c.reg_upsilon >= 0.0, "reg.upsilon must be >= 0");
  check(c.reg_hidden >= 1, "reg.hidden must be >= 1");
  check(!c.reg_lr_grid.empty(), "reg.lr_grid must not be empty");
  for (double lr : c.reg_lr_grid) check(lr > 0.0, "reg.lr_grid entries must be positive");
  if (!c.reg_data.empty()) {
    check(std::filesystem::is_regular_file(c.reg_data), "reg.data file '" + c.reg_data + "' does not exist");
  }
  check(c.toy_n >= 1 && c.toy_points >= 1 && c.toy_dim >= 1, "toy sizes must be >= 1");
  check(c.gc_mu > 0.0, "gradcheck.mu must be positive");
  check(c.gc_points >= 1, "gradcheck.points must be >= 1");
  check(c.gc_h > 0.0, "gradcheck.h must be positive");
  check(c.gc_support >= 1, "gradcheck.support must be >= 1");
  check(!(c.experiment == "toy" && c.method == "sdro_fixed"), "sdro_fixed needs a problem with lambda");
  check(!(c.experiment == "toy" && c.method != "gdmax" && c.estimator != "exact"),
        "the toy instance has finite supports; use estimator = exact");
  check(!(c.method == "gdmax" && c.stepsize == "theory"), "gdmax has no mu; use a fixed or staged stepsize");
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : key_table()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace sspg::cli
