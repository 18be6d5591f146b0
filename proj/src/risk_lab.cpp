#include "minifunc/risk_lab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <random>
#include <thread>

#include "minifunc/errors.hpp"
#include "minifunc/numeric.hpp"
#include "minifunc/random.hpp"

namespace minifunc {

DistributionSpec DistributionSpec::uniform(std::size_t k) { return {Family::Uniform, k, 0.0, 0}; }

DistributionSpec DistributionSpec::zipf(std::size_t k, double s) { return {Family::Zipf, k, s, 0}; }

DistributionSpec DistributionSpec::two_spike(std::size_t k, double p) {
  return {Family::TwoSpike, k, p, 0};
}

DistributionSpec DistributionSpec::dirichlet(std::size_t k, double concentration,
                                             std::uint64_t seed) {
  return {Family::Dirichlet, k, concentration, seed};
}

DistributionSpec DistributionSpec::parse(const std::string& text, std::size_t k,
                                         std::uint64_t seed) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  double param = std::numeric_limits<double>::quiet_NaN();
  if (colon != std::string::npos) {
    const std::string arg = text.substr(colon + 1);
    std::size_t used = 0;
    try {
      param = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) {
      throw InputError(fmt::format("bad parameter '{}' in family '{}'", arg, text));
    }
  }
  if (name == "uniform") return uniform(k);
  if (name == "zipf") return zipf(k, std::isnan(param) ? 1.0 : param);
  if (name == "two_spike") {
    if (std::isnan(param)) throw InputError("two_spike needs a parameter, e.g. two_spike:0.5");
    return two_spike(k, param);
  }
  if (name == "dirichlet") {
    return dirichlet(k, std::isnan(param) ? 1.0 : param, seed);
  }
  throw InputError(fmt::format("unknown distribution family '{}'", text));
}

std::string DistributionSpec::family_name() const {
  switch (family) {
    case Family::Uniform:
      return "uniform";
    case Family::Zipf:
      return fmt::format("zipf:{}", param);
    case Family::TwoSpike:
      return fmt::format("two_spike:{}", param);
    case Family::Dirichlet:
      return fmt::format("dirichlet:{}", param);
  }
  return "unknown";
}

ProbabilityVector DistributionSpec::build() const {
  if (k == 0) throw ConfigError("distribution needs k >= 1");
  std::vector<double> p(k);
  switch (family) {
    case Family::Uniform:
      return ProbabilityVector::uniform(k);
    case Family::Zipf:
      for (std::size_t i = 0; i < k; ++i) p[i] = std::pow(static_cast<double>(i + 1), -param);
      break;
    case Family::TwoSpike: {
      if (k < 2 || !(param >= 0.0 && param <= 1.0)) {
        throw ConfigError("two_spike needs k >= 2 and p in [0, 1]");
      }
      std::fill(p.begin(), p.end(), param / static_cast<double>(k - 1));
      p[0] = 1.0 - param;
      break;
    }
    case Family::Dirichlet: {
      if (!(param > 0.0)) throw ConfigError("dirichlet concentration must be positive");
      Rng rng = make_rng(seed, {0xd1c7u, k});
      std::gamma_distribution<double> gamma(param, 1.0);
      for (auto& v : p) v = gamma(rng);
      break;
    }
  }
  const double total = compensated_sum(p);
  if (!(total > 0.0)) throw NumericalError("distribution has no mass");
  for (auto& v : p) v /= total;
  return ProbabilityVector(std::move(p), 1e-12);
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Plugin:
      return "plugin";
    case EstimatorKind::Corrected:
      return "corrected";
    case EstimatorKind::Composite:
      return "composite";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "plugin") return EstimatorKind::Plugin;
  if (text == "corrected") return EstimatorKind::Corrected;
  if (text == "composite") return EstimatorKind::Composite;
  throw InputError(fmt::format("unknown estimator '{}'", text));
}

namespace {

// Jackknife standard error of a statistic computed from leave-one-out values.
double jackknife_se(const std::vector<double>& loo) {
  const double R = static_cast<double>(loo.size());
  const double mean = compensated_sum(loo) / R;
  CompensatedSum s;
  for (double v : loo) s += (v - mean) * (v - mean);
  return std::sqrt((R - 1.0) / R * s.value());
}

[[noreturn]] void rethrow_with_rep(std::exception_ptr err, std::int64_t rep) {
  try {
    std::rethrow_exception(err);
  } catch (const InputError& e) {
    throw InputError(fmt::format("rep {}: {}", rep, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("rep {}: {}", rep, e.what()));
  } catch (const NumericalError& e) {
    throw NumericalError(fmt::format("rep {}: {}", rep, e.what()));
  } catch (const std::exception& e) {
    throw NumericalError(fmt::format("rep {}: {}", rep, e.what()));
  }
}

}  // namespace

RiskReport monte_carlo_risk(const ProbabilityVector& P, const Functional& phi,
                            const EstimatorSpec& estimator, std::int64_t n,
                            const RiskOptions& opts) {
  if (opts.reps < 100) throw ConfigError(fmt::format("reps must be >= 100; got {}", opts.reps));
  if (n < 0) throw ConfigError("sample size must be non-negative");

  std::unique_ptr<CompositeEstimator> composite;
  if (estimator.kind == EstimatorKind::Composite) {
    composite =
        std::make_unique<CompositeEstimator>(phi, estimator.config, estimator.enforce_conditions);
  }
  const auto k = P.size();
  const auto est_id = static_cast<std::uint64_t>(estimator.kind);

  RiskReport rep;
  rep.estimator = to_string(estimator.kind);
  rep.k = k;
  rep.n = n;
  rep.reps = opts.reps;
  rep.theta_true = additive_functional(P, phi);
  rep.estimates.assign(static_cast<std::size_t>(opts.reps), 0.0);

  std::atomic<std::int64_t> next{0};
  std::atomic<std::int64_t> first_error{std::numeric_limits<std::int64_t>::max()};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(opts.reps));

  auto worker = [&]() {
    for (;;) {
      const std::int64_t r = next.fetch_add(1);
      if (r >= opts.reps || r > first_error.load()) return;
      try {
        Rng rng = make_rng(
            opts.seed, {static_cast<std::uint64_t>(n), k, est_id, static_cast<std::uint64_t>(r)});
        const Histogram h = sample_histogram(P, n, opts.model, rng);
        double value = 0.0;
        switch (estimator.kind) {
          case EstimatorKind::Plugin:
            value = plain_plugin_estimate(h, phi);
            break;
          case EstimatorKind::Corrected:
            value = corrected_plugin_estimate(h, phi, estimator.config);
            break;
          case EstimatorKind::Composite:
            value = composite->estimate(h, rng).value;
            break;
        }
        if (!std::isfinite(value)) throw NumericalError("estimate is not finite");
        rep.estimates[static_cast<std::size_t>(r)] = value;
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
        std::int64_t cur = first_error.load();
        while (r < cur && !first_error.compare_exchange_weak(cur, r)) {
        }
      }
    }
  };

  int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp<int>(jobs, 1, static_cast<int>(std::min<std::int64_t>(opts.reps, 256)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error.load() != std::numeric_limits<std::int64_t>::max()) {
    const auto r = first_error.load();
    rethrow_with_rep(errors[static_cast<std::size_t>(r)], r);
  }

  // Reduction in rep order, so the result is independent of the job count.
  const double R = static_cast<double>(opts.reps);
  const double theta = rep.theta_true;
  std::vector<double> err(rep.estimates.size());
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = rep.estimates[i] - theta;
  CompensatedSum s1, s2, s3;
  for (double e : err) {
    s1 += e;
    s3 += e * e;
  }
  rep.bias = s1.value() / R;
  for (double e : err) {
    const double c = e - rep.bias;
    s2 += c * c;
  }
  rep.variance = s2.value() / R;
  rep.mse = s3.value() / R;

  // Leave-one-out statistics on the centred errors.
  CompensatedSum sq;
  std::vector<double> centred(err.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    centred[i] = err[i] - rep.bias;
    sq += centred[i] * centred[i];
  }
  const double S2 = sq.value();
  std::vector<double> loo_bias(err.size()), loo_var(err.size()), loo_mse(err.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double c = centred[i];
    const double shift = -c / (R - 1.0);  // mean of the others, relative to bias
    const double var = (S2 - c * c) / (R - 1.0) - shift * shift;
    const double b = rep.bias + shift;
    loo_bias[i] = b;
    loo_var[i] = var;
    loo_mse[i] = b * b + var;
  }
  rep.se_bias = jackknife_se(loo_bias);
  rep.se_variance = jackknife_se(loo_var);
  rep.se_mse = jackknife_se(loo_mse);
  return rep;
}

double theoretical_rate(double alpha, double n, double k) {
  if (!(alpha > 0.0)) {
    throw ConfigError(
        fmt::format("alpha = {} <= 0: no consistent estimator exists, so there is no rate", alpha));
  }
  if (alpha > 2.0) throw ConfigError(fmt::format("alpha = {} is outside (0, 2]", alpha));
  if (!(n > 1.0) || !(k >= 1.0)) throw ConfigError("theoretical rate needs n > 1 and k >= 1");
  const double poly = k * k / std::pow(n * std::log(n), 2.0 * alpha);
  if (alpha <= 0.5) return poly;
  if (alpha < 1.0) return poly + std::pow(k, 2.0 - 2.0 * alpha) / n;
  if (alpha == 1.0) return poly + std::log(k) * std::log(k) / n;
  if (alpha < 1.5) return poly + 1.0 / n;
  return 1.0 / n;
}

KRule KRule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw InputError(fmt::format("k rule '{}' must look like fixed:K, prop:c or pow:b", text));
  }
  const std::string name = text.substr(0, colon), arg = text.substr(colon + 1);
  KRule rule;
  std::size_t used = 0;
  try {
    rule.value = std::stod(arg, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != arg.size() || !(rule.value > 0.0)) {
    throw InputError(fmt::format("bad k rule parameter in '{}'", text));
  }
  if (name == "fixed") {
    rule.kind = Kind::Fixed;
  } else if (name == "prop") {
    rule.kind = Kind::Proportional;
  } else if (name == "pow") {
    rule.kind = Kind::Power;
  } else {
    throw InputError(fmt::format("unknown k rule '{}'", text));
  }
  return rule;
}

std::size_t KRule::operator()(std::int64_t n) const {
  double k = value;
  if (kind == Kind::Proportional) k = value * static_cast<double>(n);
  if (kind == Kind::Power) k = std::pow(static_cast<double>(n), value);
  return static_cast<std::size_t>(std::max(1.0, std::round(k)));
}

std::string KRule::to_string() const {
  const char* name = kind == Kind::Fixed ? "fixed" : (kind == Kind::Proportional ? "prop" : "pow");
  return fmt::format("{}:{}", name, value);
}

SweepResult rate_sweep(const std::string& family, const Functional& phi,
                       const std::vector<EstimatorSpec>& estimators,
                       const std::vector<std::int64_t>& n_grid, const KRule& k_rule,
                       const RiskOptions& opts) {
  if (n_grid.size() < 4) throw ConfigError("n grid needs at least 4 points");
  const auto [lo, hi] = std::minmax_element(n_grid.begin(), n_grid.end());
  if (*lo < 2 || static_cast<double>(*hi) < 10.0 * static_cast<double>(*lo)) {
    throw ConfigError("n grid must span at least one decade with n >= 2");
  }
  if (estimators.empty()) throw ConfigError("no estimators requested");

  SweepResult out;
  for (const auto& est : estimators) {
    std::vector<double> ns, mses, rates;
    for (const auto n : n_grid) {
      const std::size_t k = k_rule(n);
      const DistributionSpec spec = DistributionSpec::parse(family, k, opts.seed);
      const RiskReport r = monte_carlo_risk(spec.build(), phi, est, n, opts);
      double rate = std::numeric_limits<double>::quiet_NaN();
      try {
        rate = theoretical_rate(phi.alpha(), static_cast<double>(n), static_cast<double>(k));
      } catch (const ConfigError&) {
      }
      out.rows.push_back(
          {spec.family_name(), k, n, r.estimator, r.bias, r.variance, r.mse, r.se_mse, rate});
      ns.push_back(static_cast<double>(n));
      mses.push_back(r.mse);
      rates.push_back(rate);
    }
    out.slopes.push_back({to_string(est.kind), loglog_slope(ns, mses), loglog_slope(ns, rates)});
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "family,k,n,estimator,bias,var,mse,se,theory_rate\n";
  for (const auto& r : result.rows) {
    os << fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.family, r.k, r.n,
                      r.estimator, r.bias, r.variance, r.mse, r.se, r.theory_rate);
  }
}

nlohmann::json to_json(const RiskReport& r, bool with_estimates) {
  nlohmann::json j = {{"estimator", r.estimator},
                      {"k", r.k},
                      {"n", r.n},
                      {"reps", r.reps},
                      {"theta_true", r.theta_true},
                      {"bias", r.bias},
                      {"variance", r.variance},
                      {"mse", r.mse},
                      {"se_bias", r.se_bias},
                      {"se_variance", r.se_variance},
                      {"se_mse", r.se_mse}};
  if (with_estimates) j["estimates"] = r.estimates;
  return j;
}

}  // namespace minifunc
