#include "minifunc/estimators.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "minifunc/errors.hpp"
#include "minifunc/numeric.hpp"

namespace minifunc {

std::string to_string(SamplingModel model) {
  return model == SamplingModel::Multinomial ? "multinomial" : "poissonized";
}

SamplingModel parse_sampling_model(const std::string& text) {
  if (text == "multinomial") return SamplingModel::Multinomial;
  if (text == "poissonized" || text == "poisson") return SamplingModel::Poissonized;
  throw InputError("unknown sampling model '" + text + "'");
}

std::int64_t Histogram::total() const noexcept {
  std::int64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void Histogram::validate() const {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw InputError(fmt::format("negative count at symbol index {}", i));
  }
  if (n_nominal < 0) throw InputError("nominal sample size is negative");
  if (model == SamplingModel::Multinomial && total() != n_nominal) {
    throw InputError(
        fmt::format("multinomial histogram sums to {} but n = {}", total(), n_nominal));
  }
}

int EstimatorConfig::degree(double n) const {
  if (!(n > 1.0)) return 0;
  return std::max(0, static_cast<int>(std::floor(c1 * std::log(n))));
}

double EstimatorConfig::threshold(double n) const {
  if (!(n > 1.0)) return 0.0;
  return c2 * std::log(n);
}

double EstimatorConfig::delta(double n) const { return threshold(n) / n; }

Interval EstimatorConfig::poly_interval(double n) const {
  return Interval{0.0, std::min(4.0 * threshold(n) / n, 1.0)};
}

nlohmann::json EstimatorConfig::to_json() const {
  return {{"c1", c1}, {"c2", c2}, {"correction_order", correction_order}, {"seed", rng_seed}};
}

namespace {
double condition3_lhs(double c1, double c2) {
  return 2.0 - 3.0 * c1 * std::numbers::ln2 -
         2.0 * std::sqrt(c1 * c2) * std::log(2.0 * std::numbers::e);
}
}  // namespace

std::vector<ConfigViolation> validate_config(const EstimatorConfig& cfg, double alpha) {
  std::vector<ConfigViolation> out;
  if (!(cfg.c1 > 0.0)) out.push_back({"c1 > 0", cfg.c1, 0.0});
  if (!(cfg.c2 > 0.0)) out.push_back({"c2 > 0", cfg.c2, 0.0});
  if (cfg.correction_order != 2 && cfg.correction_order != 4) {
    out.push_back({"correction_order in {2, 4}", static_cast<double>(cfg.correction_order), 0.0});
  }
  if (!(cfg.c2 > 8.0 * alpha)) out.push_back({"c2 > 8 alpha", cfg.c2, 8.0 * alpha});
  const double cube = cfg.c2 * cfg.c2 * cfg.c2 * cfg.c1;
  if (!(cube <= 0.5)) out.push_back({"c2^3 c1 <= 1/2", cube, 0.5});
  if (cfg.c1 >= 0.0 && cfg.c2 >= 0.0) {
    const double lhs = condition3_lhs(cfg.c1, cfg.c2);
    if (!(lhs > alpha)) out.push_back({"2 - 3 c1 ln 2 - 2 sqrt(c1 c2) ln(2e) > alpha", lhs, alpha});
  }
  return out;
}

EstimatorConfig default_config(double alpha, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.c2 = 8.0 * alpha + 1.0;
  cfg.c1 = 1.0 / (2.0 * cfg.c2 * cfg.c2 * cfg.c2);
  for (int i = 0; i < 2000 && !(condition3_lhs(cfg.c1, cfg.c2) > alpha + 0.05); ++i) {
    cfg.c1 *= 0.95;
  }
  cfg.correction_order = alpha <= 1.0 ? 2 : 4;
  cfg.rng_seed = seed;
  return cfg;
}

Histogram sample_histogram(const ProbabilityVector& P, std::int64_t n, SamplingModel model,
                           Rng& rng) {
  if (n < 0) throw ConfigError("sample size must be non-negative");
  Histogram h;
  h.counts.assign(P.size(), 0);
  h.n_nominal = n;
  h.model = model;
  if (model == SamplingModel::Poissonized) {
    for (std::size_t i = 0; i < P.size(); ++i) {
      const double mean = static_cast<double>(n) * P[i];
      if (mean > 0.0) h.counts[i] = std::poisson_distribution<std::int64_t>(mean)(rng);
    }
    return h;
  }
  // Multinomial through conditional binomials.
  std::int64_t left = n;
  double mass = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) mass += P[i];
  for (std::size_t i = 0; i < P.size() && left > 0; ++i) {
    if (P[i] <= 0.0) continue;
    const double q = mass > 0.0 ? std::min(1.0, P[i] / mass) : 1.0;
    std::int64_t c;
    if (q >= 1.0) {
      c = left;
    } else {
      c = std::binomial_distribution<std::int64_t>(left, q)(rng);
    }
    h.counts[i] = c;
    left -= c;
    mass -= P[i];
  }
  if (left > 0) {
    // Rounding in the running mass; give the remainder to the last atom.
    for (std::size_t i = P.size(); i-- > 0;) {
      if (P[i] > 0.0) {
        h.counts[i] += left;
        break;
      }
    }
  }
  return h;
}

SplitHistograms split_samples(const Histogram& h, Rng& rng) {
  SplitHistograms s;
  s.est.counts.assign(h.k(), 0);
  s.sel.counts.assign(h.k(), 0);
  s.est.n_nominal = s.sel.n_nominal = h.n_nominal / 2;
  s.est.model = s.sel.model = SamplingModel::Poissonized;
  for (std::size_t i = 0; i < h.k(); ++i) {
    const std::int64_t c = h.counts[i];
    if (c <= 0) continue;
    const std::int64_t a = std::binomial_distribution<std::int64_t>(c, 0.5)(rng);
    s.est.counts[i] = a;
    s.sel.counts[i] = c - a;
  }
  return s;
}

double factorial_moment(std::int64_t N, int m) {
  if (m < 0 || N < 0) throw ConfigError("factorial moment needs N >= 0 and m >= 0");
  if (m > N) return 0.0;
  double r = 1.0;
  for (int j = 0; j < m; ++j) r *= static_cast<double>(N - j);
  return r;
}

ClampRange functional_range(const Functional& phi, Interval I) {
  constexpr int kGrid = 16384;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int ilo = 0, ihi = 0;
  auto x_at = [&](int i) { return I.lo + I.width() * static_cast<double>(i) / (kGrid - 1); };
  for (int i = 0; i < kGrid; ++i) {
    const double v = phi(x_at(i));
    if (v < lo) {
      lo = v;
      ilo = i;
    }
    if (v > hi) {
      hi = v;
      ihi = i;
    }
  }
  auto refine = [&](int i, double sign) {
    const double a = x_at(std::max(0, i - 1)), b = x_at(std::min(kGrid - 1, i + 1));
    const double x = golden_section_max([&](double t) { return sign * phi(t); }, a, b);
    return phi(x);
  };
  lo = std::min(lo, refine(ilo, -1.0));
  hi = std::max(hi, refine(ihi, 1.0));
  return ClampRange{lo, hi};
}

double best_poly_symbol_estimate(std::int64_t N, double n, const ApproxResult& approx,
                                 ClampRange clamp) {
  const auto& a = approx.poly.coeffs();
  CompensatedSum acc;
  double moment = 1.0;  // prod_{j<m} (N - j) / n
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (m > 0) {
      moment *= static_cast<double>(N - static_cast<std::int64_t>(m) + 1) / n;
      if (moment == 0.0) break;
    }
    acc += a[m] * moment;
  }
  return clamp(acc.value());
}

double plugin_symbol_estimate(std::int64_t N, double n, const Functional& phi,
                              const EstimatorConfig& cfg) {
  const double p = static_cast<double>(N) / n;
  return bias_corrected_fn(phi, cfg.correction_order, cfg.delta(n), n, p);
}

CompositeEstimator::CompositeEstimator(Functional phi, EstimatorConfig cfg, bool enforce_conditions)
    : phi_(std::move(phi)), cfg_(cfg) {
  if (cfg_.correction_order != 2 && cfg_.correction_order != 4) {
    throw ConfigError("correction order must be 2 or 4");
  }
  if (!(cfg_.c1 > 0.0) || !(cfg_.c2 > 0.0)) throw ConfigError("c1 and c2 must be positive");
  if (phi_.max_deriv_order() < cfg_.correction_order) {
    throw ConfigError(fmt::format("order-{} correction needs derivatives up to {}, {} has {}",
                                  cfg_.correction_order, cfg_.correction_order, phi_.name(),
                                  phi_.max_deriv_order()));
  }
  if (enforce_conditions) {
    const auto v = validate_config(cfg_, phi_.alpha());
    if (!v.empty()) {
      std::string msg = "estimator constants violate:";
      for (const auto& x : v)
        msg += fmt::format(" [{}: {:.6g} vs {:.6g}]", x.condition, x.lhs, x.rhs);
      throw ConfigError(msg);
    }
  }
}

std::shared_ptr<const CompositeEstimator::PolyBranch> CompositeEstimator::poly_branch(
    double n) const {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(n); it != cache_.end()) return it->second;
  const Interval I = cfg_.poly_interval(n);
  const Functional& phi = phi_;
  auto branch = std::make_shared<PolyBranch>(
      PolyBranch{remez_best_approx([&phi](double x) { return phi(x); }, cfg_.degree(n), I),
                 functional_range(phi_, I)});
  cache_.emplace(n, branch);
  return branch;
}

Estimate CompositeEstimator::estimate(const Histogram& h, Rng& rng) const {
  h.validate();
  const auto split = split_samples(h, rng);
  return estimate_split(split, static_cast<double>(h.n_nominal) / 2.0);
}

Estimate CompositeEstimator::estimate_split(const SplitHistograms& split, double n) const {
  if (split.est.k() != split.sel.k()) throw InputError("split halves have different k");
  Estimate out;
  if (n < 3.0 || cfg_.threshold(n) >= n) {
    Histogram merged;
    merged.counts.resize(split.est.k());
    for (std::size_t i = 0; i < merged.k(); ++i) {
      merged.counts[i] = split.est.counts[i] + split.sel.counts[i];
    }
    merged.n_nominal = merged.total();
    merged.model = SamplingModel::Poissonized;
    out.warnings.push_back(
        fmt::format("per-half sample size {} too small for the split construction; "
                    "fell back to the plain plugin estimator",
                    n));
    if (merged.n_nominal == 0) {
      out.value = static_cast<double>(merged.k()) * phi_(0.0);
    } else {
      out.value = plain_plugin_estimate(merged, phi_);
    }
    out.branches.plugin = merged.k();
    return out;
  }

  const auto branch = poly_branch(n);
  if (!branch->approx.converged) {
    out.warnings.push_back(
        fmt::format("minimax polynomial (degree {}) did not converge; "
                    "using best iterate with sup error {:.6g}",
                    branch->approx.poly.degree(), branch->approx.sup_error));
  }
  if (branch->approx.poly.degree() == 0) {
    out.warnings.push_back("polynomial degree floor(c1 ln n) is 0 at this sample size");
  }
  const double cut = 2.0 * cfg_.threshold(n);
  CompensatedSum acc;
  for (std::size_t i = 0; i < split.est.k(); ++i) {
    const auto N = split.est.counts[i];
    if (static_cast<double>(split.sel.counts[i]) >= cut) {
      acc += plugin_symbol_estimate(N, n, phi_, cfg_);
      ++out.branches.plugin;
    } else {
      acc += best_poly_symbol_estimate(N, n, branch->approx, branch->clamp);
      ++out.branches.poly;
    }
  }
  out.value = acc.value();
  return out;
}

double plain_plugin_estimate(const Histogram& h, const Functional& phi) {
  if (h.n_nominal <= 0) throw ConfigError("plugin estimate needs n > 0");
  const double n = static_cast<double>(h.n_nominal);
  CompensatedSum acc;
  for (auto c : h.counts) acc += phi(static_cast<double>(c) / n);
  return acc.value();
}

double corrected_plugin_estimate(const Histogram& h, const Functional& phi,
                                 const EstimatorConfig& cfg) {
  if (h.n_nominal <= 0) throw ConfigError("plugin estimate needs n > 0");
  const double n = static_cast<double>(h.n_nominal);
  CompensatedSum acc;
  for (auto c : h.counts) acc += plugin_symbol_estimate(c, n, phi, cfg);
  return acc.value();
}

}  // namespace minifunc
