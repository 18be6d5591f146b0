#pragma once

#include <cstdint>
#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "minifunc/estimators.hpp"
#include "minifunc/functional.hpp"

namespace minifunc {

enum class Family { Uniform, Zipf, TwoSpike, Dirichlet };

/// Test distributions over k symbols.
///   uniform
///   zipf(s):         p_i proportional to i^-s
///   two_spike(p):    (1-p, p/(k-1), ..., p/(k-1)), the two-point lower-bound shape
///   dirichlet(conc): one symmetric Dirichlet draw, seeded
struct DistributionSpec {
  Family family = Family::Uniform;
  std::size_t k = 0;
  double param = 0.0;
  std::uint64_t seed = 0;

  static DistributionSpec uniform(std::size_t k);
  static DistributionSpec zipf(std::size_t k, double s = 1.0);
  static DistributionSpec two_spike(std::size_t k, double p);
  static DistributionSpec dirichlet(std::size_t k, double concentration, std::uint64_t seed);

  /// "uniform", "zipf[:s]", "two_spike:p" or "dirichlet:conc". The seed is
  /// used by the Dirichlet family only.
  static DistributionSpec parse(const std::string& text, std::size_t k, std::uint64_t seed = 0);

  std::string family_name() const;
  ProbabilityVector build() const;
};

enum class EstimatorKind { Plugin, Corrected, Composite };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& text);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Plugin;
  EstimatorConfig config;
  bool enforce_conditions = true;  // composite only
};

struct RiskOptions {
  std::int64_t reps = 1000;
  std::uint64_t seed = 0;
  int jobs = 1;  // <= 0 means hardware concurrency
  SamplingModel model = SamplingModel::Multinomial;
};

struct RiskReport {
  std::string estimator;
  std::size_t k = 0;
  std::int64_t n = 0;
  std::int64_t reps = 0;
  double theta_true = 0.0;
  std::vector<double> estimates;
  double bias = 0.0;
  double variance = 0.0;  // divisor reps
  double mse = 0.0;
  double se_bias = 0.0;  // jackknife standard errors
  double se_variance = 0.0;
  double se_mse = 0.0;
};

/// reps independent sample-then-estimate cycles at P. Rep r draws from a
/// stream seeded by (seed, n, k, estimator, r), so results do not depend on
/// the number of worker threads. Throws ConfigError for reps < 100;
/// estimator failures are rethrown with the rep index.
RiskReport monte_carlo_risk(const ProbabilityVector& P, const Functional& phi,
                            const EstimatorSpec& estimator, std::int64_t n,
                            const RiskOptions& opts);

/// Minimax rate from the table of results (no absolute constant).
/// Throws ConfigError for alpha <= 0 (no consistent estimator exists) and
/// for alpha > 2.
double theoretical_rate(double alpha, double n, double k);

/// k as a function of n: "fixed:K", "prop:c" (round(c n)) or "pow:b" (round(n^b)).
struct KRule {
  enum class Kind { Fixed, Proportional, Power } kind = Kind::Fixed;
  double value = 0.0;

  static KRule parse(const std::string& text);
  std::size_t operator()(std::int64_t n) const;
  std::string to_string() const;
};

struct SweepRow {
  std::string family;
  std::size_t k = 0;
  std::int64_t n = 0;
  std::string estimator;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double se = 0.0;
  double theory_rate = 0.0;  // NaN when alpha is outside the table
};

struct SweepSlope {
  std::string estimator;
  double mse_slope = 0.0;     // log MSE vs log n
  double theory_slope = 0.0;  // same fit on theory_rate
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSlope> slopes;
};

/// Risk over every (n, estimator) pair with k = k_rule(n). Requires at least
/// four n values spanning a decade (ConfigError otherwise).
SweepResult rate_sweep(const std::string& family, const Functional& phi,
                       const std::vector<EstimatorSpec>& estimators,
                       const std::vector<std::int64_t>& n_grid, const KRule& k_rule,
                       const RiskOptions& opts);

/// Header family,k,n,estimator,bias,var,mse,se,theory_rate; numbers printed
/// with 17 significant digits.
void write_sweep_csv(std::ostream& os, const SweepResult& result);

nlohmann::json to_json(const RiskReport& report, bool with_estimates = false);

}  // namespace minifunc
