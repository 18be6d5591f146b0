#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "minifunc/errors.hpp"
#include "minifunc/functional.hpp"
#include "minifunc/lower_bounds.hpp"
#include "minifunc/poly_approx.hpp"
#include "minifunc/random.hpp"
#include "minifunc/risk_lab.hpp"

namespace minifunc::cli {

using nlohmann::json;

json RunConfig::to_json() const {
  return {{"command", command}, {"master_seed", master_seed}, {"params", params}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object() || !j.contains("command") || !j.at("command").is_string()) {
    throw InputError("run config needs a string field 'command'");
  }
  RunConfig cfg;
  cfg.command = j.at("command").get<std::string>();
  if (j.contains("master_seed")) {
    if (!j.at("master_seed").is_number_unsigned()) {
      throw InputError("run config field 'master_seed' must be an unsigned integer");
    }
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
  }
  if (j.contains("params")) {
    if (!j.at("params").is_object())
      throw InputError("run config field 'params' must be an object");
    cfg.params = j.at("params");
  }
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class Int>
bool parse_int(const std::string& text, Int& value) {
  const auto t = trim(text);
  if (t.empty()) return false;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  return ec == std::errc() && ptr == t.data() + t.size();
}

double parse_double(const std::string& text, const std::string& what) {
  const auto t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size())
    throw InputError(fmt::format("bad number '{}' for {}", text, what));
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

Histogram read_histogram(std::istream& in, std::optional<std::size_t> k_override) {
  std::map<std::int64_t, std::int64_t> counts;
  std::string line;
  std::size_t lineno = 0;
  std::optional<bool> csv;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!csv) {
      csv = t == "symbol,count";
      if (*csv) continue;
    }
    std::int64_t symbol = 0, count = 1;
    if (*csv) {
      const auto comma = t.find(',');
      if (comma == std::string::npos || !parse_int(t.substr(0, comma), symbol) ||
          !parse_int(t.substr(comma + 1), count)) {
        throw InputError(fmt::format("line {}: expected 'symbol,count', got '{}'", lineno, t));
      }
      if (count < 0) throw InputError(fmt::format("line {}: negative count {}", lineno, count));
      if (counts.count(symbol)) {
        throw InputError(fmt::format("line {}: symbol {} listed twice", lineno, symbol));
      }
    } else if (!parse_int(t, symbol)) {
      throw InputError(fmt::format("line {}: expected an integer symbol, got '{}'", lineno, t));
    }
    if (symbol < 1) {
      throw InputError(fmt::format("line {}: symbols are labels 1..k, got {}", lineno, symbol));
    }
    counts[symbol] += count;
  }
  if (counts.empty()) throw InputError("input holds no symbols");
  const auto max_symbol = static_cast<std::size_t>(counts.rbegin()->first);
  std::size_t k = max_symbol;
  if (k_override) {
    if (*k_override < max_symbol) {
      throw InputError(
          fmt::format("k = {} is smaller than the largest symbol {}", *k_override, max_symbol));
    }
    k = *k_override;
  }
  Histogram h;
  h.counts.assign(k, 0);
  for (const auto& [s, c] : counts) h.counts[static_cast<std::size_t>(s - 1)] = c;
  h.n_nominal = h.total();
  return h;
}

Histogram read_histogram_file(const std::string& path, std::optional<std::size_t> k_override) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open input '{}'", path));
  return read_histogram(in, k_override);
}

std::uint64_t seed_from_env() {
  const char* env = std::getenv("MINIFUNC_SEED");
  if (env == nullptr || *env == '\0') return 0;
  std::uint64_t v = 0;
  if (!parse_int(env, v)) {
    throw InputError(fmt::format("MINIFUNC_SEED='{}' is not an unsigned integer", env));
  }
  return v;
}

namespace {

struct Params {
  json& p;

  bool has(const char* key) const { return p.contains(key) && !p.at(key).is_null(); }

  template <class T>
  T get(const char* key) const {
    if (!has(key)) throw InputError(fmt::format("missing parameter '{}'", key));
    try {
      return p.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError(fmt::format("parameter '{}' has the wrong type", key));
    }
  }

  template <class T>
  T get_or(const char* key, T fallback) {
    if (!has(key)) p[key] = fallback;
    return get<T>(key);
  }
};

Functional resolve_phi(Params& prm) {
  if (!prm.has("phi")) throw InputError("missing parameter 'phi'");
  const json& v = prm.p.at("phi");
  Functional phi =
      v.is_string() ? Functional::parse(v.get<std::string>()) : Functional::from_json(v);
  prm.p["phi"] = phi.to_json();
  return phi;
}

Interval resolve_interval(Params& prm, const char* key) {
  const auto v = prm.get<std::vector<double>>(key);
  if (v.size() != 2 || !(v[0] < v[1])) {
    throw InputError(fmt::format("'{}' must be two increasing numbers lo,hi", key));
  }
  return Interval{v[0], v[1]};
}

EstimatorConfig resolve_estimator_config(Params& prm, double alpha, std::uint64_t seed) {
  EstimatorConfig cfg = default_config(alpha, seed);
  cfg.c1 = prm.get_or("c1", cfg.c1);
  cfg.c2 = prm.get_or("c2", cfg.c2);
  cfg.correction_order = prm.get_or("order", cfg.correction_order);
  return cfg;
}

json header(const RunConfig& cfg) { return {{"command", cfg.command}, {"config", cfg.to_json()}}; }

// The config is attached last so that defaults resolved along the way appear.
void write_json(std::ostream& out, const RunConfig& cfg, json j) {
  j["config"] = cfg.to_json();
  out << j.dump(2) << '\n';
}

void cmd_estimate(RunConfig& cfg, std::ostream& out) {
  Params prm{cfg.params};
  const Functional phi = resolve_phi(prm);
  std::optional<std::size_t> k;
  if (prm.has("k")) k = prm.get<std::size_t>("k");
  Histogram h = read_histogram_file(prm.get<std::string>("input"), k);
  h.model = parse_sampling_model(prm.get_or<std::string>("model", "multinomial"));
  h.n_nominal = prm.get_or<std::int64_t>("n", h.total());
  h.validate();
  prm.p["k"] = h.k();
  const std::string mode = prm.get_or<std::string>("mode", "composite");
  const bool unchecked = prm.get_or("unchecked", false);
  const EstimatorConfig ecfg = resolve_estimator_config(prm, phi.alpha(), cfg.master_seed);

  Estimate est;
  if (mode == "plugin") {
    est.value = plain_plugin_estimate(h, phi);
    est.branches.plugin = h.k();
  } else if (mode == "corrected") {
    est.value = corrected_plugin_estimate(h, phi, ecfg);
    est.branches.plugin = h.k();
  } else if (mode == "composite") {
    const CompositeEstimator composite(phi, ecfg, !unchecked);
    Rng rng = make_rng(cfg.master_seed, {0xe57u});
    est = composite.estimate(h, rng);
  } else {
    throw InputError(fmt::format("unknown mode '{}' (plugin, corrected, composite)", mode));
  }
  json j = header(cfg);
  j["estimate"] = est.value;
  j["branch_counts"] = {{"plugin", est.branches.plugin}, {"poly", est.branches.poly}};
  j["warnings"] = est.warnings;
  write_json(out, cfg, j);
}

void cmd_approx(RunConfig& cfg, std::ostream& out) {
  Params prm{cfg.params};
  const Functional phi = resolve_phi(prm);
  const int L = prm.get<int>("L");
  const Interval I = resolve_interval(prm, "interval");
  RemezOptions opts;
  opts.max_iterations = prm.get_or("max_iterations", opts.max_iterations);
  opts.tolerance = prm.get_or("tolerance", opts.tolerance);
  const ApproxResult r = remez_best_approx([&phi](double x) { return phi(x); }, L, I, opts);
  json j = header(cfg);
  j.update(to_json(r));
  write_json(out, cfg, j);
  if (!r.converged) {
    throw NumericalError(fmt::format("exchange did not converge in {} iterations", r.iterations));
  }
}

void cmd_check_speed(RunConfig& cfg, std::ostream& out) {
  Params prm{cfg.params};
  const Functional phi = resolve_phi(prm);
  const int ell = prm.get<int>("ell");
  const double alpha = prm.get_or("alpha", phi.alpha());
  const DivergenceSpeedReport rep = check_divergence_speed(phi, ell, alpha);
  json j = header(cfg);
  j.update(to_json(rep));
  write_json(out, cfg, j);
}

void cmd_lower_bound(RunConfig& cfg, std::ostream& out) {
  Params prm{cfg.params};
  const Functional phi = resolve_phi(prm);
  const std::string construction = prm.get_or<std::string>("construction", "two-point");
  json j = header(cfg);
  j["construction"] = construction;
  if (construction == "two-point") {
    const auto k = prm.get<std::size_t>("k");
    const double n = prm.get<double>("n");
    const double p = prm.get_or("p", 0.5);
    const double q = prm.get_or("q", p - 1.0 / std::sqrt(std::max(n, 1.0)));
    const TwoPointPair pair = two_point_pair(phi, k, p, q);
    j["bound_value"] = le_cam_bound(pair.P, pair.Q, phi, n);
    j["terms"] = {{"theta_gap", pair.theta_gap},
                  {"kl", divergence(pair.P, pair.Q, DivergenceKind::KL)},
                  {"kl_bound", pair.kl_bound},
                  {"chi2", divergence(pair.P, pair.Q, DivergenceKind::Chi2)}};
  } else if (construction == "hellinger") {
    const auto k = prm.get<std::size_t>("k");
    const double n = prm.get<double>("n");
    const double beta = prm.get_or("beta", 0.01);
    const double delta = prm.get_or("delta", beta);
    const auto [P, Q] = shift_pair(k, beta, delta);
    j["bound_value"] = hellinger_le_cam_bound(P, Q, phi, n);
    j["terms"] = {{"theta_gap", additive_functional(P, phi) - additive_functional(Q, phi)},
                  {"hellinger_sq", divergence(P, Q, DivergenceKind::Hellinger)},
                  {"tv", divergence(P, Q, DivergenceKind::TV)}};
  } else if (construction == "best-poly") {
    LowerBoundParams lb;
    lb.n = prm.get<double>("n");
    lb.k = prm.get<double>("k");
    lb.lambda = prm.get<double>("lambda");
    lb.L = prm.get<int>("L");
    lb.d = prm.get<double>("d");
    lb.alpha = prm.get_or("alpha", phi.alpha());
    lb.W = prm.get_or("W", 1.0);
    lb.W_prime = prm.get_or("W_prime", 1.0);
    const LowerBoundResult r = composite_lower_bound(phi, lb);
    j["bound_value"] = r.value;
    json terms = r.to_json()["terms"];
    terms["side_condition"] = r.side_condition;
    terms["approx_error"] = r.approx_error;
    terms["certified_d"] = r.certified_d;
    terms["gamma"] = r.gamma;
    j["terms"] = terms;
  } else if (construction == "poisson-tv") {
    const int L = prm.get<int>("L");
    const Interval I = resolve_interval(prm, "interval");
    const int grid = prm.get_or("grid", 50 * (L + 2));
    const MeasurePair pair = moment_matched_pair(phi, L, I, grid);
    const PoissonMixtureTv tv =
        poisson_mixture_tv(pair, prm.get<double>("n"), prm.get<double>("k"));
    j["bound_value"] = tv.bound;
    j["terms"] = {{"numeric_tv", tv.numeric_tv},
                  {"max_rate", tv.max_rate},
                  {"trunc", tv.trunc},
                  {"tail_mass", tv.tail_mass},
                  {"gap", pair.gap},
                  {"reference_gap", pair.reference_gap}};
    j["warnings"] = pair.warnings;
  } else {
    throw InputError(fmt::format(
        "unknown construction '{}' (two-point, hellinger, best-poly, poisson-tv)", construction));
  }
  write_json(out, cfg, j);
}

void cmd_priors(RunConfig& cfg, std::ostream& out) {
  Params prm{cfg.params};
  const Functional phi = resolve_phi(prm);
  const int L = prm.get<int>("L");
  MeasurePair pair;
  if (prm.has("gamma") || prm.has("eta")) {
    const double gamma = prm.get<double>("gamma");
    const double eta = prm.get<double>("eta");
    const int grid = prm.get_or("grid", 50 * (L + 2));
    pair = tilted_pair(phi, L, gamma, eta, grid);
  } else {
    const Interval I = resolve_interval(prm, "interval");
    const int grid = prm.get_or("grid", 50 * (L + 2));
    pair = moment_matched_pair(phi, L, I, grid);
  }
  std::ostringstream csv;
  csv << "x,w0,w1\n";
  for (std::size_t i = 0; i < pair.support.size(); ++i) {
    csv << fmt::format("{:.17g},{:.17g},{:.17g}\n", pair.support[i], pair.w0[i], pair.w1[i]);
  }
  if (!prm.has("out")) {
    out << csv.str();
    return;
  }
  const auto path = prm.get<std::string>("out");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError(fmt::format("cannot write '{}'", path));
  f << csv.str();
  json j = header(cfg);
  j["gap"] = pair.gap;
  j["reference_gap"] = pair.reference_gap;
  j["matched_orders"] = pair.matched_orders;
  j["moment_mismatch"] = pair.max_moment_mismatch();
  j["support_size"] = pair.support.size();
  j["warnings"] = pair.warnings;
  write_json(out, cfg, j);
}

void cmd_risk_sweep(RunConfig& cfg, std::ostream& out, int jobs) {
  Params prm{cfg.params};
  if (!prm.has("phi") && prm.has("alpha")) {
    prm.p["phi"] = Functional::power(prm.get<double>("alpha")).to_json();
    prm.p.erase("alpha");
  }
  const Functional phi = resolve_phi(prm);
  const std::string family = prm.get_or<std::string>("family", "uniform");
  const auto n_grid = prm.get<std::vector<std::int64_t>>("n_grid");
  const KRule rule = KRule::parse(prm.get_or<std::string>("k_rule", "prop:1"));
  RiskOptions opts;
  opts.reps = prm.get_or<std::int64_t>("reps", 1000);
  opts.seed = cfg.master_seed;
  opts.jobs = jobs;
  opts.model = parse_sampling_model(prm.get_or<std::string>("model", "multinomial"));
  const auto names = prm.get_or<std::vector<std::string>>(
      "estimators", std::vector<std::string>{"plugin", "corrected", "composite"});
  const bool unchecked = prm.get_or("unchecked", false);
  const EstimatorConfig ecfg = resolve_estimator_config(prm, phi.alpha(), cfg.master_seed);
  std::vector<EstimatorSpec> specs;
  for (const auto& name : names) specs.push_back({parse_estimator_kind(name), ecfg, !unchecked});
  if (!unchecked && std::find(names.begin(), names.end(), "composite") != names.end()) {
    // Fail before any simulation runs.
    const CompositeEstimator probe(phi, ecfg, true);
  }

  const SweepResult result = rate_sweep(family, phi, specs, n_grid, rule, opts);
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  if (!prm.has("out")) {
    out << csv.str();
    return;
  }
  const auto path = prm.get<std::string>("out");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError(fmt::format("cannot write '{}'", path));
  f << csv.str();
  json j = header(cfg);
  j["rows"] = result.rows.size();
  j["slopes"] = json::array();
  for (const auto& s : result.slopes) {
    j["slopes"].push_back(
        {{"estimator", s.estimator}, {"mse_slope", s.mse_slope}, {"theory_slope", s.theory_slope}});
  }
  write_json(out, cfg, j);
}

void execute_with_jobs(const RunConfig& in, std::ostream& out, int jobs) {
  RunConfig cfg = in;
  if (cfg.command == "estimate") {
    cmd_estimate(cfg, out);
  } else if (cfg.command == "approx") {
    cmd_approx(cfg, out);
  } else if (cfg.command == "check-speed") {
    cmd_check_speed(cfg, out);
  } else if (cfg.command == "lower-bound") {
    cmd_lower_bound(cfg, out);
  } else if (cfg.command == "priors") {
    cmd_priors(cfg, out);
  } else if (cfg.command == "risk-sweep") {
    cmd_risk_sweep(cfg, out, jobs);
  } else {
    throw InputError(fmt::format("unknown command '{}'", cfg.command));
  }
}

}  // namespace

void execute(const RunConfig& cfg, std::ostream& out) { execute_with_jobs(cfg, out, 1); }

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

namespace {

// Flag values are collected as strings and converted into typed params, so
// that every command shares one conversion path with the config-file route.
struct FlagSet {
  CLI::App* app;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void add(const std::string& name, const std::string& help) {
    app->add_option("--" + name, values[name], help);
  }
  void add_flag(const std::string& name, const std::string& help) {
    app->add_flag("--" + name, flags[name], help);
  }
  bool given(const std::string& name) const { return app->count("--" + name) > 0; }
};

std::string param_key(const std::string& flag) {
  std::string key = flag;
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

// Converts one flag value according to the parameter's type.
json convert(const std::string& key, const std::string& text) {
  static const std::map<std::string, char> kinds = {
      {"phi", 's'},       {"input", 's'},  {"model", 's'},    {"mode", 's'},
      {"family", 's'},    {"k_rule", 's'}, {"out", 's'},      {"construction", 's'},
      {"k", 'u'},         {"n", 'i'},      {"L", 'i'},        {"ell", 'i'},
      {"order", 'i'},     {"reps", 'i'},   {"grid", 'i'},     {"max_iterations", 'i'},
      {"c1", 'd'},        {"c2", 'd'},     {"alpha", 'd'},    {"tolerance", 'd'},
      {"p", 'd'},         {"q", 'd'},      {"beta", 'd'},     {"delta", 'd'},
      {"lambda", 'd'},    {"d", 'd'},      {"W", 'd'},        {"W_prime", 'd'},
      {"gamma", 'd'},     {"eta", 'd'},    {"interval", 'D'}, {"n_grid", 'I'},
      {"estimators", 'S'}};
  const char kind = kinds.at(key);
  switch (kind) {
    case 's':
      return text;
    case 'u': {
      std::uint64_t v = 0;
      if (!parse_int(text, v))
        throw InputError(fmt::format("--{}: '{}' is not a count", key, text));
      return v;
    }
    case 'i': {
      std::int64_t v = 0;
      if (!parse_int(text, v)) {
        // Sample sizes may be written as 1e4.
        const double d = parse_double(text, "--" + key);
        if (d != std::floor(d))
          throw InputError(fmt::format("--{}: '{}' is not an integer", key, text));
        v = static_cast<std::int64_t>(d);
      }
      return v;
    }
    case 'd':
      return parse_double(text, "--" + key);
    case 'D': {
      json arr = json::array();
      for (const auto& item : split_list(text)) arr.push_back(parse_double(item, "--" + key));
      return arr;
    }
    case 'I': {
      json arr = json::array();
      for (const auto& item : split_list(text)) arr.push_back(convert("n", item));
      return arr;
    }
    case 'S': {
      json arr = json::array();
      for (const auto& item : split_list(text)) arr.push_back(item);
      return arr;
    }
  }
  return text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimators, approximation and lower bounds for additive functionals"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  app.add_option("--seed", seed, "master seed (default: MINIFUNC_SEED or 0)");
  app.add_option("--jobs", jobs, "worker threads for risk-sweep; output does not depend on it");

  std::vector<FlagSet> sets;
  sets.reserve(8);
  auto command = [&](const std::string& name, const std::string& help,
                     const std::vector<std::pair<std::string, std::string>>& options,
                     const std::vector<std::pair<std::string, std::string>>& flags = {}) {
    sets.push_back({app.add_subcommand(name, help), {}, {}});
    for (const auto& [flag, text] : options) sets.back().add(flag, text);
    for (const auto& [flag, text] : flags) sets.back().add_flag(flag, text);
  };
  const std::pair<std::string, std::string> phi_opt{"phi", "shannon, power:<a> or JSON"};
  command("estimate", "estimate theta from a histogram or sample file",
          {phi_opt,
           {"input", "histogram CSV (symbol,count) or one symbol per line"},
           {"n", "nominal sample size"},
           {"k", "alphabet size"},
           {"model", "multinomial or poissonized"},
           {"mode", "composite, plugin or corrected"},
           {"c1", "degree constant"},
           {"c2", "threshold constant"},
           {"order", "2 or 4"}},
          {{"unchecked", "skip the constant conditions"}});
  command("approx", "minimax polynomial of phi on an interval",
          {phi_opt,
           {"L", "degree"},
           {"interval", "lo,hi"},
           {"max-iterations", "exchange cap"},
           {"tolerance", "levelling tolerance"}});
  command("risk-sweep", "Monte Carlo risk over a grid of sample sizes",
          {phi_opt,
           {"alpha", "shorthand for --phi power:<alpha>"},
           {"family", "uniform, zipf[:s], two_spike:p, dirichlet[:c]"},
           {"n-grid", "comma-separated sample sizes"},
           {"k-rule", "fixed:K, prop:c or pow:b"},
           {"reps", "repetitions per point"},
           {"estimators", "comma-separated list"},
           {"model", "multinomial or poissonized"},
           {"c1", "degree constant"},
           {"c2", "threshold constant"},
           {"order", "2 or 4"},
           {"out", "CSV path"}},
          {{"unchecked", "skip the constant conditions"}});
  command("lower-bound", "numeric lower-bound constructions",
          {phi_opt,
           {"construction", "two-point, hellinger, best-poly or poisson-tv"},
           {"n", "sample size"},
           {"k", "alphabet size"},
           {"p", "two-point p"},
           {"q", "two-point q"},
           {"beta", "shift base mass"},
           {"delta", "shift amount"},
           {"lambda", "support scale"},
           {"L", "degree"},
           {"d", "separation"},
           {"alpha", "divergence speed"},
           {"W", "lambda-term constant"},
           {"W-prime", "correction constant"},
           {"interval", "lo,hi"},
           {"grid", "LP grid size"}});
  command("check-speed", "grid certificate of the divergence speed",
          {phi_opt, {"ell", "derivative order"}, {"alpha", "exponent (default: phi's)"}});
  command("priors", "moment-matched measure pair as CSV x,w0,w1",
          {phi_opt,
           {"L", "matched moments"},
           {"interval", "lo,hi"},
           {"grid", "LP grid size"},
           {"gamma", "tilted pair gamma"},
           {"eta", "tilted pair eta"},
           {"out", "CSV path"}});
  auto* run_cmd = app.add_subcommand("run", "execute a saved run config (JSON)");
  std::string config_path;
  run_cmd->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "input error: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig cfg;
    if (run_cmd->parsed()) {
      std::ifstream f(config_path);
      if (!f) throw InputError(fmt::format("cannot open config '{}'", config_path));
      json j;
      try {
        j = json::parse(f);
      } catch (const json::parse_error& e) {
        throw InputError(fmt::format("config '{}': {}", config_path, e.what()));
      }
      cfg = RunConfig::from_json(j);
      if (seed) cfg.master_seed = *seed;
    } else {
      for (auto& set : sets) {
        if (!set.app->parsed()) continue;
        cfg.command = set.app->get_name();
        for (const auto& [flag, text] : set.values) {
          if (set.given(flag)) cfg.params[param_key(flag)] = convert(param_key(flag), text);
        }
        for (const auto& [flag, on] : set.flags) {
          if (on) cfg.params[param_key(flag)] = true;
        }
      }
      cfg.master_seed = seed ? *seed : seed_from_env();
    }
    execute_with_jobs(cfg, out, jobs);
    return 0;
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
}

}  // namespace minifunc::cli
