#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "minifunc/functional.hpp"
#include "minifunc/poly_approx.hpp"
#include "minifunc/random.hpp"

namespace minifunc {

enum class SamplingModel { Multinomial, Poissonized };

std::string to_string(SamplingModel model);
SamplingModel parse_sampling_model(const std::string& text);

/// Symbol counts N_1..N_k together with the nominal sample size.
/// Multinomial histograms must sum to n_nominal.
struct Histogram {
  std::vector<std::int64_t> counts;
  std::int64_t n_nominal = 0;
  SamplingModel model = SamplingModel::Multinomial;

  std::size_t k() const noexcept { return counts.size(); }
  std::int64_t total() const noexcept;
  /// Throws InputError on negative counts or a multinomial sum mismatch.
  void validate() const;
};

/// Estimation half (est) and selection half (sel) of a split histogram.
struct SplitHistograms {
  Histogram est;
  Histogram sel;
};

/// Constants of the composite estimator. With n the per-half sample size:
///   L           = floor(c1 ln n)
///   threshold   = c2 ln n            (expected-count units)
///   delta       = threshold / n      (truncation level of the plugin branch)
///   poly range  = [0, min(4 threshold / n, 1)]
struct EstimatorConfig {
  double c1 = 0.0;
  double c2 = 0.0;
  int correction_order = 2;
  std::uint64_t rng_seed = 0;

  int degree(double n) const;
  double threshold(double n) const;
  double delta(double n) const;
  Interval poly_interval(double n) const;

  nlohmann::json to_json() const;
};

struct ConfigViolation {
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Checks c2 > 8 alpha, c2^3 c1 <= 1/2 and
/// 2 - 3 c1 ln 2 - 2 sqrt(c1 c2) ln(2e) > alpha. Returns every violation
/// with both sides evaluated; an empty list means the config is admissible.
std::vector<ConfigViolation> validate_config(const EstimatorConfig& cfg, double alpha);

/// c2 = 8 alpha + 1; c1 = the largest value <= 1/(2 c2^3) for which the third
/// condition holds with margin 0.05 (geometric scan). Correction order 2 for
/// alpha <= 1, else 4.
EstimatorConfig default_config(double alpha, std::uint64_t seed = 0);

/// Multinomial draw of n samples from P, or independent Poisson(n p_i)
/// counts. The histogram's n_nominal is n in both cases.
Histogram sample_histogram(const ProbabilityVector& P, std::int64_t n, SamplingModel model,
                           Rng& rng);

/// Assigns every unit of every count to est or sel with probability 1/2.
/// Each half gets n_nominal / 2 (rounded down) as its nominal size; the
/// halves of a multinomial input are tagged poissonized since their sums
/// are random.
SplitHistograms split_samples(const Histogram& h, Rng& rng);

/// N (N-1) ... (N-m+1); 1 for m = 0, 0 for m > N.
double factorial_moment(std::int64_t N, int m);

struct ClampRange {
  double lo = 0.0;
  double hi = 0.0;

  double operator()(double x) const noexcept { return x < lo ? lo : (x > hi ? hi : x); }
};

/// Inf and sup of phi over I (16384-point scan, golden refinement).
ClampRange functional_range(const Functional& phi, Interval I);

/// Unbiased estimate of the approximating polynomial at N / n,
/// sum_m a_m prod_{j<m} (N - j)/n, clamped to the range of phi.
double best_poly_symbol_estimate(std::int64_t N, double n, const ApproxResult& approx,
                                 ClampRange clamp);

/// Bias-corrected plugin value bias_corrected_fn(phi, order, delta, n, N/n).
double plugin_symbol_estimate(std::int64_t N, double n, const Functional& phi,
                              const EstimatorConfig& cfg);

struct BranchCounts {
  std::size_t plugin = 0;
  std::size_t poly = 0;
};

struct Estimate {
  double value = 0.0;
  BranchCounts branches;
  std::vector<std::string> warnings;
};

/// Sample-split estimator: symbols whose selection count reaches
/// 2 * threshold go through the bias-corrected plugin, the rest through the
/// best-polynomial estimator. The minimax polynomial for each per-half sample
/// size is computed once and cached; the cache is safe for concurrent use.
class CompositeEstimator {
 public:
  /// Throws ConfigError when the config fails validation for phi.alpha(),
  /// unless enforce_conditions is false.
  CompositeEstimator(Functional phi, EstimatorConfig cfg, bool enforce_conditions = true);

  const Functional& functional() const noexcept { return phi_; }
  const EstimatorConfig& config() const noexcept { return cfg_; }

  /// Splits h (drawing Bernoulli(1/2) labels from rng) and estimates with
  /// per-half size n = h.n_nominal / 2.
  Estimate estimate(const Histogram& h, Rng& rng) const;

  /// Estimate from a pre-split pair; n is the per-half sample size.
  Estimate estimate_split(const SplitHistograms& split, double n) const;

  struct PolyBranch {
    ApproxResult approx;
    ClampRange clamp;
  };
  /// Cached minimax polynomial and clamp range for per-half size n.
  std::shared_ptr<const PolyBranch> poly_branch(double n) const;

 private:
  Functional phi_;
  EstimatorConfig cfg_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::shared_ptr<const PolyBranch>> cache_;
};

/// sum_i phi(N_i / n).
double plain_plugin_estimate(const Histogram& h, const Functional& phi);

/// sum_i plugin_symbol_estimate(N_i, n, phi, cfg) over the full histogram,
/// no split.
double corrected_plugin_estimate(const Histogram& h, const Functional& phi,
                                 const EstimatorConfig& cfg);

}  // namespace minifunc
