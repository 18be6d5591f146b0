#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "minifunc/errors.hpp"
#include "minifunc/estimators.hpp"
#include "minifunc/numeric.hpp"

using namespace minifunc;
using doctest::Approx;

namespace {

struct Moments {
  double mean = 0, var = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= x.size();
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= (x.size() - 1);
  return m;
}

// Config whose plugin truncation level is exactly delta at sample size n.
EstimatorConfig config_with_delta(double delta, double n, double c1 = 1.0, int order = 2) {
  EstimatorConfig c;
  c.c1 = c1;
  c.c2 = delta * n / std::log(n);
  c.correction_order = order;
  return c;
}

Histogram hist(std::vector<std::int64_t> counts, std::int64_t n,
               SamplingModel model = SamplingModel::Poissonized) {
  Histogram h;
  h.counts = std::move(counts);
  h.n_nominal = n;
  h.model = model;
  return h;
}

}  // namespace

TEST_CASE("config validation arithmetic") {
  EstimatorConfig c;
  c.c2 = 9;
  c.c1 = 1.0 / 1458;
  CHECK(validate_config(c, 1.0).empty());
  const double lhs = 2 - 3 * c.c1 * std::log(2.0) - 2 * std::sqrt(c.c1 * c.c2) * std::log(2 * M_E);
  CHECK(lhs == Approx(1.7325).epsilon(1e-3));

  c.c2 = 8;
  auto v = validate_config(c, 1.0);
  REQUIRE(!v.empty());
  CHECK(v[0].lhs == 8.0);
  CHECK(v[0].rhs == 8.0);

  c.c2 = 9;
  c.c1 = 0.01;
  v = validate_config(c, 0.5);
  bool cubic = false;
  for (const auto& x : v) {
    if (x.lhs == Approx(7.29)) cubic = true;
  }
  CHECK(cubic);
}

TEST_CASE("default constants pass validation") {
  for (double a : {0.3, 0.5, 1.0, 1.4}) {
    const auto c = default_config(a);
    CAPTURE(a);
    CHECK(validate_config(c, a).empty());
    CHECK(c.c2 == Approx(8 * a + 1));
    CHECK(c.c2 * c.c2 * c.c2 * c.c1 <= 0.5 + 1e-15);
    CHECK(c.correction_order == (a <= 1.0 ? 2 : 4));
  }
}

TEST_CASE("derived quantities of the config") {
  EstimatorConfig c;
  c.c1 = 1.5;
  c.c2 = 0.5;
  const double n = 1000;
  CHECK(c.degree(n) == static_cast<int>(std::floor(1.5 * std::log(n))));
  CHECK(c.threshold(n) == Approx(0.5 * std::log(n)));
  CHECK(c.delta(n) == Approx(0.5 * std::log(n) / n));
  CHECK(c.poly_interval(n).hi == Approx(2 * std::log(n) / n));
  c.c2 = 1000;
  CHECK(c.poly_interval(n).hi == 1.0);
}

TEST_CASE("sampling models") {
  Rng rng(1);
  const auto h =
      sample_histogram(ProbabilityVector::degenerate(3), 10, SamplingModel::Multinomial, rng);
  CHECK(h.counts == std::vector<std::int64_t>{10, 0, 0});
  const auto z =
      sample_histogram(ProbabilityVector::uniform(5), 0, SamplingModel::Poissonized, rng);
  CHECK(z.total() == 0);
  const auto zm =
      sample_histogram(ProbabilityVector::uniform(5), 0, SamplingModel::Multinomial, rng);
  CHECK(zm.total() == 0);

  std::vector<double> c0;
  for (int r = 0; r < 10000; ++r) {
    c0.push_back(static_cast<double>(
        sample_histogram(ProbabilityVector::uniform(2), 1000000, SamplingModel::Poissonized, rng)
            .counts[0]));
  }
  const auto m = moments(c0);
  CHECK(std::fabs(m.mean - 5e5) <= 3 * std::sqrt(5e5 / 1e4));
  CHECK(m.var == Approx(5e5).epsilon(0.05));

  // Multinomial: counts sum to n and each margin is Binomial(n, p).
  std::vector<double> c1;
  const ProbabilityVector P({0.1, 0.2, 0.7});
  for (int r = 0; r < 4000; ++r) {
    const auto hm = sample_histogram(P, 500, SamplingModel::Multinomial, rng);
    CHECK(hm.total() == 500);
    c1.push_back(static_cast<double>(hm.counts[1]));
  }
  const auto mb = moments(c1);
  CHECK(std::fabs(mb.mean - 100) <= 4 * std::sqrt(80.0 / 4000));
  CHECK(mb.var == Approx(80).epsilon(0.1));
}

TEST_CASE("histogram validation") {
  CHECK_THROWS_AS(hist({1, 2}, 4, SamplingModel::Multinomial).validate(), InputError);
  CHECK_THROWS_AS(hist({1, -2}, 4).validate(), InputError);
  CHECK_NOTHROW(hist({1, 3}, 4, SamplingModel::Multinomial).validate());
  CHECK_NOTHROW(hist({1, 2}, 4).validate());
}

TEST_CASE("sample splitting conserves counts") {
  Rng rng(2);
  const auto zero = split_samples(hist({0, 0, 0}, 10), rng);
  CHECK(zero.est.total() == 0);
  CHECK(zero.sel.total() == 0);
  const auto big = split_samples(hist({1000000, 3, 0, 17}, 1000020), rng);
  const std::vector<std::int64_t> in{1000000, 3, 0, 17};
  for (std::size_t i = 0; i < 4; ++i) CHECK(big.est.counts[i] + big.sel.counts[i] == in[i]);
  CHECK(big.est.n_nominal == 500010);
  CHECK(std::fabs(big.est.counts[0] - 5e5) < 5 * std::sqrt(2.5e5));
}

TEST_CASE("thinning a Poisson count gives independent halves") {
  Rng rng(3);
  std::poisson_distribution<std::int64_t> pois(2e4);
  std::vector<double> a, b;
  for (int r = 0; r < 10000; ++r) {
    const auto s = split_samples(hist({pois(rng)}, 20000), rng);
    a.push_back(static_cast<double>(s.est.counts[0]));
    b.push_back(static_cast<double>(s.sel.counts[0]));
  }
  const auto ma = moments(a), mb = moments(b);
  double cov = 0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
  cov /= a.size() - 1;
  // Standard error of a sample covariance of independent variables.
  const double se = std::sqrt(ma.var * mb.var / a.size());
  CHECK(std::fabs(cov) <= 3 * se);
  CHECK(ma.mean == Approx(1e4).epsilon(0.005));
  CHECK(ma.var == Approx(1e4).epsilon(0.05));
}

TEST_CASE("factorial moments") {
  CHECK(factorial_moment(5, 2) == 20);
  CHECK(factorial_moment(3, 5) == 0);
  CHECK(factorial_moment(7, 0) == 1);
  CHECK(factorial_moment(0, 0) == 1);
  CHECK(factorial_moment(20, 20) == Approx(std::tgamma(21.0)));
}

TEST_CASE("factorial moments are unbiased under Poisson sampling") {
  Rng rng(4);
  const double n = 1000, p = 0.004;
  std::poisson_distribution<std::int64_t> pois(n * p);
  const int reps = 200000;
  for (int m = 1; m <= 4; ++m) {
    std::vector<double> v(reps);
    Rng r2(100 + m);
    for (auto& x : v) x = factorial_moment(pois(r2), m) / std::pow(n, m);
    const auto mo = moments(v);
    CAPTURE(m);
    CHECK(std::fabs(mo.mean - std::pow(p, m)) <= 4 * std::sqrt(mo.var / reps));
  }
}

TEST_CASE("best-poly symbol estimate") {
  const Interval I{0, 0.1};
  const ApproxResult constant = remez_best_approx([](double) { return 0.3; }, 0, I);
  const ClampRange wide{0.0, 1.0};
  for (std::int64_t N : {0, 1, 7, 1000}) {
    CHECK(best_poly_symbol_estimate(N, 100, constant, wide) == Approx(0.3));
  }
  const RealFn sq = [](double x) { return std::sqrt(x); };
  const auto a = remez_best_approx(sq, 6, I);
  const ClampRange clamp{0.0, std::sqrt(0.1)};
  CHECK(best_poly_symbol_estimate(0, 100, a, clamp) == Approx(clamp(a.poly.coeffs()[0])));
  // Direct term-by-term evaluation with falling factorials.
  const double n = 200;
  for (std::int64_t N : {1, 3, 9}) {
    double s = 0;
    for (int m = 0; m <= 6; ++m) s += a.poly.coeffs()[m] * factorial_moment(N, m) / std::pow(n, m);
    CHECK(best_poly_symbol_estimate(N, n, a, ClampRange{-1e9, 1e9}) == Approx(s).epsilon(1e-9));
    CHECK(best_poly_symbol_estimate(N, n, a, clamp) == Approx(clamp(s)).epsilon(1e-9));
  }
}

TEST_CASE("best-poly estimate is unbiased for the polynomial") {
  const RealFn sq = [](double x) { return std::sqrt(x); };
  const auto a = remez_best_approx(sq, 4, {0, 0.05});
  const double n = 400, p = 0.01;
  Rng rng(8);
  std::poisson_distribution<std::int64_t> pois(n * p);
  const int reps = 400000;
  std::vector<double> v(reps);
  const ClampRange none{-1e300, 1e300};
  for (auto& x : v) x = best_poly_symbol_estimate(pois(rng), n, a, none);
  const auto mo = moments(v);
  CHECK(std::fabs(mo.mean - a.poly(p)) <= 4 * std::sqrt(mo.var / reps));
}

TEST_CASE("clamping never moves away from the range") {
  const ClampRange c{-0.5, 2.0};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5), w(-0.5, 2.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), v = w(rng);
    CHECK(std::fabs(c(x) - v) <= std::fabs(x - v));
  }
}

TEST_CASE("functional range over an interval") {
  const auto r = functional_range(Functional::shannon(), {0, 1});
  CHECK(r.lo == Approx(0.0).scale(1));
  CHECK(r.hi == Approx(std::exp(-1.0)).epsilon(1e-10));
  const auto r2 = functional_range(Functional::power(0.5), {0, 0.04});
  CHECK(r2.hi == Approx(0.2));
}

TEST_CASE("plugin symbol estimate") {
  const double n = 100;
  const auto c = config_with_delta(0.05, n);
  CHECK(c.delta(n) == Approx(0.05));
  CHECK(plugin_symbol_estimate(100, n, Functional::power(2.0), c) == Approx(0.99));
  CHECK(plugin_symbol_estimate(0, n, Functional::shannon(), c) ==
        Approx(0.149786614).epsilon(1e-8));
  CHECK(plugin_symbol_estimate(50, n, Functional::shannon(), c) ==
        Approx(0.351573590280).epsilon(1e-11));
}

TEST_CASE("plain plugin estimate") {
  CHECK(plain_plugin_estimate(hist({40, 0, 0}, 40), Functional::power(0.5)) == 1.0);
  CHECK(plain_plugin_estimate(hist({40, 0, 0}, 40), Functional::shannon()) == 0.0);
  CHECK(plain_plugin_estimate(hist(std::vector<std::int64_t>(50, 4), 200), Functional::shannon()) ==
        Approx(std::log(50.0)));
  Rng rng(10);
  double mean = 0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const auto h =
        sample_histogram(ProbabilityVector::uniform(100), 100, SamplingModel::Multinomial, rng);
    mean += plain_plugin_estimate(h, Functional::shannon()) / reps;
  }
  CHECK(mean < std::log(100.0));
}

TEST_CASE("composite selector routes symbols by the selection half") {
  const double n = 100;
  EstimatorConfig c;
  c.c1 = 1.0;
  c.c2 = 9.0;  // threshold 9 ln 100 = 41.4, cut at 82.9
  const CompositeEstimator est(Functional::shannon(), c, false);
  const auto branch = est.poly_branch(n);
  CHECK(branch->approx.poly.degree() == 4);

  // All selection counts at or above the cut: pure plugin.
  SplitHistograms all_plugin{hist({3, 50, 1, 46}, 100), hist({90, 90, 90, 90}, 100)};
  auto e = est.estimate_split(all_plugin, n);
  double expect = 0;
  for (auto N : all_plugin.est.counts) expect += plugin_symbol_estimate(N, n, est.functional(), c);
  CHECK(e.value == Approx(expect).epsilon(1e-14));
  CHECK(e.branches.plugin == 4);

  SplitHistograms all_poly{hist({3, 50, 1, 46}, 100), hist({0, 0, 0, 0}, 100)};
  e = est.estimate_split(all_poly, n);
  expect = 0;
  for (auto N : all_poly.est.counts) {
    expect += best_poly_symbol_estimate(N, n, branch->approx, branch->clamp);
  }
  CHECK(e.value == Approx(expect).epsilon(1e-14));
  CHECK(e.branches.poly == 4);

  // Mixed split at a lower threshold: symbols 2 and 4 reach 2 * threshold.
  EstimatorConfig c2 = c;
  c2.c2 = 4.0;  // cut at 8 ln 100 = 36.8
  const CompositeEstimator mixed(Functional::shannon(), c2, false);
  SplitHistograms split{hist({3, 50, 1, 46}, 100), hist({0, 40, 0, 40}, 100)};
  const auto b2 = mixed.poly_branch(n);
  e = mixed.estimate_split(split, n);
  expect = best_poly_symbol_estimate(3, n, b2->approx, b2->clamp) +
           plugin_symbol_estimate(50, n, mixed.functional(), c2) +
           best_poly_symbol_estimate(1, n, b2->approx, b2->clamp) +
           plugin_symbol_estimate(46, n, mixed.functional(), c2);
  CHECK(e.value == Approx(expect).epsilon(1e-14));
  CHECK(e.branches.plugin == 2);
  CHECK(e.branches.poly == 2);
}

TEST_CASE("composite estimate is invariant under relabeling") {
  EstimatorConfig c;
  c.c1 = 1.0;
  c.c2 = 1.0;
  const CompositeEstimator est(Functional::power(0.5), c, false);
  SplitHistograms s{hist({5, 0, 12, 1, 30, 2}, 500), hist({4, 1, 15, 0, 28, 3}, 500)};
  SplitHistograms t{hist({30, 2, 5, 12, 0, 1}, 500), hist({28, 3, 4, 15, 1, 0}, 500)};
  CHECK(est.estimate_split(s, 500).value ==
        Approx(est.estimate_split(t, 500).value).epsilon(1e-14));
}

TEST_CASE("fourth-order correction adds the documented terms") {
  const auto phi = Functional::power(1.2);
  const double n = 1000;
  const auto c2 = config_with_delta(0.01, n, 1.0, 2);
  const auto c4 = config_with_delta(0.01, n, 1.0, 4);
  const std::vector<std::int64_t> counts{30, 200, 770};
  double diff = 0, extra = 0;
  for (auto N : counts) {
    diff += plugin_symbol_estimate(N, n, phi, c4) - plugin_symbol_estimate(N, n, phi, c2);
    const double p = N / n;
    extra += p * truncated_deriv(phi, 3, 0.01, p) / (3 * n * n) +
             5 * p * truncated_deriv(phi, 4, 0.01, p) / (24 * n * n * n) +
             p * p * truncated_deriv(phi, 4, 0.01, p) / (8 * n * n);
  }
  CHECK(diff == Approx(extra).epsilon(1e-10));
}

TEST_CASE("composite estimator enforces the constant conditions") {
  EstimatorConfig bad;
  bad.c1 = 1.0;
  bad.c2 = 0.5;
  CHECK_THROWS_AS(CompositeEstimator(Functional::shannon(), bad), ConfigError);
  CHECK_NOTHROW(CompositeEstimator(Functional::shannon(), bad, false));
  CHECK_NOTHROW(CompositeEstimator(Functional::shannon(), default_config(1.0)));
}

TEST_CASE("tiny samples fall back to the plugin estimator") {
  EstimatorConfig c;
  c.c1 = 1.0;
  c.c2 = 1.0;
  const CompositeEstimator est(Functional::shannon(), c, false);
  SplitHistograms s{hist({1, 0, 1}, 2), hist({0, 1, 0}, 2)};
  const auto e = est.estimate_split(s, 2.0);
  CHECK(e.value == Approx(plain_plugin_estimate(hist({1, 1, 1}, 3), Functional::shannon())));
  CHECK(!e.warnings.empty());
}

TEST_CASE("composite estimate from an unsplit histogram") {
  EstimatorConfig c;
  c.c1 = 1.0;
  c.c2 = 0.5;
  const CompositeEstimator est(Functional::shannon(), c, false);
  Rng a(5), b(5);
  const auto h = hist({100, 3, 0, 50, 47}, 200, SamplingModel::Multinomial);
  const auto e = est.estimate(h, a);
  const auto split = split_samples(h, b);
  CHECK(e.value == est.estimate_split(split, 100).value);
}

TEST_CASE("poissonized and multinomial risks are comparable") {
  EstimatorConfig c;
  c.c1 = 1.0;
  c.c2 = 0.5;
  const CompositeEstimator est(Functional::shannon(), c, false);
  const auto P = ProbabilityVector::uniform(100);
  const double theta = std::log(100.0);
  double mse[2] = {0, 0};
  const int reps = 10000;
  Rng rng(12);
  for (int model = 0; model < 2; ++model) {
    for (int r = 0; r < reps; ++r) {
      const auto h = sample_histogram(
          P, 2000, model == 0 ? SamplingModel::Multinomial : SamplingModel::Poissonized, rng);
      const double d = est.estimate(h, rng).value - theta;
      mse[model] += d * d / reps;
    }
  }
  CHECK(mse[1] / mse[0] < 4.0);
  CHECK(mse[0] / mse[1] < 4.0);
}
