#include "minifunc/lower_bounds.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "minifunc/errors.hpp"
#include "minifunc/lp.hpp"
#include "minifunc/numeric.hpp"

namespace minifunc {

double divergence(const ProbabilityVector& P, const ProbabilityVector& Q, DivergenceKind kind) {
  if (P.size() != Q.size()) {
    throw InputError(fmt::format("dimension mismatch: {} vs {}", P.size(), Q.size()));
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = P[i], q = Q[i];
    switch (kind) {
      case DivergenceKind::KL:
        if (p == 0.0) break;
        if (q == 0.0) throw InputError(fmt::format("KL undefined: q[{}] = 0 < p[{}]", i, i));
        s += p * std::log(p / q);
        break;
      case DivergenceKind::Chi2:
        if (q == 0.0) {
          if (p == 0.0) break;
          throw InputError(fmt::format("chi2 undefined: q[{}] = 0 < p[{}]", i, i));
        }
        s += (p - q) * (p - q) / q;
        break;
      case DivergenceKind::Hellinger: {
        const double r = std::sqrt(p) - std::sqrt(q);
        s += 2.0 * r * r;
        break;
      }
      case DivergenceKind::TV:
        s += 0.5 * std::fabs(p - q);
        break;
    }
  }
  return std::max(0.0, s.value());
}

namespace {

ProbabilityVector spike_vector(std::size_t k, double p) {
  std::vector<double> v(k, p / static_cast<double>(k - 1));
  v[0] = 1.0 - p;
  return ProbabilityVector(std::move(v));
}

}  // namespace

TwoPointPair two_point_pair(const Functional& phi, std::size_t k, double p, double q) {
  if (k < 2) throw ConfigError("two-point pair needs k >= 2");
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0)) {
    throw ConfigError(fmt::format("two-point pair needs p, q in (0,1); got p={}, q={}", p, q));
  }
  TwoPointPair out{spike_vector(k, p), spike_vector(k, q), p, q, 0.0, 0.0};
  out.kl_bound = (p - q) * (p - q) / (2.0 * p * (1.0 - p));
  out.theta_gap = additive_functional(out.P, phi) - additive_functional(out.Q, phi);
  return out;
}

std::pair<ProbabilityVector, ProbabilityVector> shift_pair(std::size_t k, double beta,
                                                           double delta) {
  if (k < 2) throw ConfigError("shift pair needs k >= 2");
  if (!(beta > 0.0) || !(delta > 0.0) || beta + delta > 1.0) {
    throw ConfigError("shift pair needs beta, delta > 0 and beta + delta <= 1");
  }
  auto make = [k](double b) {
    std::vector<double> v(k, b / static_cast<double>(k - 1));
    v[k - 1] = 1.0 - b;
    return ProbabilityVector(std::move(v));
  };
  return {make(beta), make(beta + delta)};
}

double le_cam_bound(const ProbabilityVector& P, const ProbabilityVector& Q, const Functional& phi,
                    double n) {
  const double gap = additive_functional(P, phi) - additive_functional(Q, phi);
  if (gap == 0.0) return 0.0;
  return 0.25 * gap * gap * std::exp(-n * divergence(P, Q, DivergenceKind::KL));
}

double hellinger_le_cam_bound(const ProbabilityVector& P, const ProbabilityVector& Q,
                              const Functional& phi, double n) {
  const double gap = additive_functional(P, phi) - additive_functional(Q, phi);
  const double h2 = divergence(P, Q, DivergenceKind::Hellinger);
  const double base = std::clamp(1.0 - h2 / 4.0, 0.0, 1.0);
  const double inner = std::pow(base, 2.0 * n);
  return 0.5 * gap * gap * (1.0 - std::sqrt(1.0 - inner));
}

double MeasurePair::max_moment_mismatch() const {
  double worst = 0.0;
  for (int m = 1; m <= matched_orders; ++m) {
    CompensatedSum s;
    for (std::size_t i = 0; i < support.size(); ++i) {
      s += (w0[i] - w1[i]) * std::pow(support[i], m);
    }
    worst = std::max(worst, std::fabs(s.value()));
  }
  return worst;
}

namespace {

double chebyshev_t(int m, double t) {
  double a = 1.0, b = t;
  if (m == 0) return a;
  for (int j = 2; j <= m; ++j) {
    const double c = 2.0 * t * b - a;
    a = b;
    b = c;
  }
  return b;
}

void attach_reference(MeasurePair& pair, double reference) {
  pair.reference_gap = reference;
  if (reference > 1e-10) {
    pair.relative_mismatch = std::fabs(pair.gap - reference) / reference;
    if (pair.relative_mismatch > 0.05) {
      pair.warnings.push_back(
          fmt::format("LP gap {:.6g} differs from the minimax reference {:.6g} by {:.2f}%",
                      pair.gap, reference, 100.0 * pair.relative_mismatch));
    }
  } else if (pair.gap > 1e-8) {
    pair.warnings.push_back(
        fmt::format("LP gap {:.6g} but the minimax reference is numerically zero", pair.gap));
  }
}

}  // namespace

MeasurePair moment_matched_pair(const RealFn& f, int L, Interval I, int grid_size) {
  if (L < 1) throw ConfigError("moment matching needs L >= 1");
  if (grid_size < 50 * (L + 2)) {
    throw ConfigError(fmt::format("grid_size {} below 50 (L + 2) = {}", grid_size, 50 * (L + 2)));
  }
  if (!(I.hi > I.lo)) throw ConfigError("moment matching needs a non-degenerate interval");

  const int G = grid_size;
  std::vector<double> x(G), t(G), fx(G);
  for (int i = 0; i < G; ++i) {
    t[i] = -std::cos(std::numbers::pi * i / (G - 1));
    x[i] = i == 0 ? I.lo : (i == G - 1 ? I.hi : I.lo + 0.5 * (t[i] + 1.0) * I.width());
    fx[i] = f(x[i]);
    if (!std::isfinite(fx[i])) {
      throw NumericalError(fmt::format("function is not finite at x = {}", x[i]));
    }
  }

  // Variables: w0 (0..G-1), w1 (G..2G-1).
  const int rows = L + 2;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, 2 * G);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd c(2 * G);
  for (int i = 0; i < G; ++i) {
    A(0, i) = 1.0;
    A(1, G + i) = 1.0;
    for (int m = 1; m <= L; ++m) {
      const double Tm = chebyshev_t(m, t[i]);
      A(1 + m, i) = Tm;
      A(1 + m, G + i) = -Tm;
    }
    c(i) = fx[i];
    c(G + i) = -fx[i];
  }
  b(0) = 1.0;
  b(1) = 1.0;

  const LpResult lp = solve_lp(A, b, c);
  if (lp.status != LpStatus::Optimal) {
    throw NumericalError(fmt::format("moment-matching LP failed ({})",
                                     lp.status == LpStatus::Infeasible  ? "infeasible"
                                     : lp.status == LpStatus::Unbounded ? "unbounded"
                                                                        : "iteration limit"));
  }

  MeasurePair pair;
  pair.matched_orders = L;
  pair.interval = I;
  CompensatedSum gap;
  for (int i = 0; i < G; ++i) {
    const double a0 = lp.x(i), a1 = lp.x(G + i);
    if (a0 == 0.0 && a1 == 0.0) continue;
    pair.support.push_back(x[i]);
    pair.w0.push_back(a0);
    pair.w1.push_back(a1);
    gap += (a0 - a1) * fx[i];
  }
  // Renormalize away the solver's rounding.
  for (auto* w : {&pair.w0, &pair.w1}) {
    const double s = compensated_sum(*w);
    for (double& v : *w) v /= s;
  }
  pair.gap = std::max(0.0, gap.value());

  const ApproxResult best = remez_best_approx(f, L, I);
  attach_reference(pair, 2.0 * best.sup_error);
  return pair;
}

MeasurePair moment_matched_pair(const Functional& phi, int L, Interval I, int grid_size) {
  return moment_matched_pair([&phi](double x) { return phi(x); }, L, I, grid_size);
}

MeasurePair tilted_pair(const Functional& phi, int L, double gamma, double eta, int grid_size) {
  if (!(gamma > 0.0) || !(eta < 1.0) || gamma > eta) {
    throw ConfigError(
        fmt::format("tilted pair needs 0 < gamma <= eta < 1; got gamma={}, eta={}", gamma, eta));
  }
  if (std::fabs(phi(0.0)) > 0.0) {
    throw ConfigError(fmt::format("tilted pair needs phi(0) = 0; got {}", phi(0.0)));
  }
  if (grid_size <= 0) grid_size = 50 * (L + 2);
  const Interval rho_interval{gamma, gamma / eta};
  auto phi_star = [&phi](double x) { return phi(x) / x; };
  const MeasurePair rho = moment_matched_pair(phi_star, L, rho_interval, grid_size);

  MeasurePair pair;
  pair.matched_orders = L + 1;
  pair.interval = Interval{0.0, 1.0 / (eta * gamma)};
  pair.support.push_back(0.0);
  pair.w0.push_back(0.0);
  pair.w1.push_back(0.0);
  CompensatedSum m0, m1, gap;
  for (std::size_t i = 0; i < rho.support.size(); ++i) {
    const double u = rho.support[i];
    const double a0 = gamma / u * rho.w0[i];
    const double a1 = gamma / u * rho.w1[i];
    pair.support.push_back(u);
    pair.w0.push_back(a0);
    pair.w1.push_back(a1);
    m0 += a0;
    m1 += a1;
    gap += (a0 - a1) * phi(u);
  }
  pair.w0[0] = std::max(0.0, 1.0 - m0.value());
  pair.w1[0] = std::max(0.0, 1.0 - m1.value());
  pair.gap = std::max(0.0, gap.value());
  pair.warnings = rho.warnings;
  attach_reference(pair, gamma * rho.reference_gap);
  return pair;
}

std::int64_t default_poisson_trunc(double max_rate) {
  return static_cast<std::int64_t>(std::ceil(max_rate + 12.0 * std::sqrt(max_rate) + 50.0));
}

namespace {

double poisson_pmf(std::int64_t j, double rate) {
  if (rate == 0.0) return j == 0 ? 1.0 : 0.0;
  const double jj = static_cast<double>(j);
  return std::exp(jj * std::log(rate) - rate - std::lgamma(jj + 1.0));
}

double poisson_upper_tail(std::int64_t trunc, double rate) {
  if (rate == 0.0) return 0.0;
  CompensatedSum s;
  for (std::int64_t j = trunc + 1;; ++j) {
    const double p = poisson_pmf(j, rate);
    s += p;
    if (static_cast<double>(j) > rate && p < 1e-300 + 1e-20 * s.value()) break;
    if (j > trunc + 100000) break;
  }
  return s.value();
}

}  // namespace

PoissonMixtureTv poisson_mixture_tv(const MeasurePair& pair, double n, double k,
                                    std::optional<std::int64_t> trunc) {
  if (!(n >= 0.0) || !(k > 0.0)) throw ConfigError("poisson mixture needs n >= 0 and k > 0");
  PoissonMixtureTv out;
  std::vector<double> rates(pair.support.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    rates[i] = n * pair.support[i] / k;
    if (pair.w0[i] > 0.0 || pair.w1[i] > 0.0) out.max_rate = std::max(out.max_rate, rates[i]);
  }
  out.trunc = trunc.value_or(default_poisson_trunc(out.max_rate));
  out.tail_mass = poisson_upper_tail(out.trunc, out.max_rate);
  if (!(out.tail_mass < 1e-12)) {
    throw ConfigError(fmt::format(
        "truncation {} too small: Poisson tail mass {:.3g} at rate {:.6g} is not below 1e-12",
        out.trunc, out.tail_mass, out.max_rate));
  }
  CompensatedSum tv;
  for (std::int64_t j = 0; j <= out.trunc; ++j) {
    CompensatedSum diff;
    for (std::size_t i = 0; i < rates.size(); ++i) {
      const double dw = pair.w0[i] - pair.w1[i];
      if (dw != 0.0) diff += dw * poisson_pmf(j, rates[i]);
    }
    tv += std::fabs(diff.value());
  }
  out.numeric_tv = std::clamp(0.5 * tv.value(), 0.0, 1.0);

  const double L = pair.matched_orders;
  const double two_e_m = 2.0 * std::numbers::e * out.max_rate;
  out.bound = L > two_e_m ? std::pow(two_e_m / L, L) : std::numeric_limits<double>::infinity();
  return out;
}

nlohmann::json LowerBoundResult::to_json() const {
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [name, v] : terms) t[name] = v;
  return {{"bound_value", value},
          {"side_condition", side_condition},
          {"approx_error", approx_error},
          {"certified_d", certified_d},
          {"gamma", gamma},
          {"terms", t}};
}

LowerBoundResult composite_lower_bound(const Functional& phi, const LowerBoundParams& prm) {
  const double n = prm.n, k = prm.k, lam = prm.lambda, d = prm.d, a = prm.alpha;
  const int L = prm.L;
  if (!(a > 0.0 && a < 2.0)) {
    throw ConfigError(fmt::format("composite lower bound covers alpha in (0,2); got {}", a));
  }
  if (L < 1 || !(n > 0.0) || !(k >= 1.0) || !(lam > 0.0) || d < 0.0) {
    throw ConfigError("composite lower bound needs L >= 1, n > 0, k >= 1, lambda > 0, d >= 0");
  }

  LowerBoundResult out;
  std::string why;
  if (lam <= 1.0 / 12.0) {
    const double e =
        remez_best_approx([&phi](double x) { return phi(x); }, L, Interval{0.0, lam / k}).sup_error;
    const double lhs = 2.0 * k * e;
    if (lhs >= d) {
      out.side_condition = 1;
      out.approx_error = e;
      out.certified_d = lhs;
    } else {
      why += fmt::format("condition 1: 2 k E_L = {:.6g} < d = {:.6g}; ", lhs, d);
    }
  } else {
    why += fmt::format("condition 1: lambda = {:.6g} > 1/12; ", lam);
  }
  if (out.side_condition == 0) {
    const double gamma = lam / (2.0 * L * L * k);
    if (lam > std::sqrt(k) / 12.0) {
      why += fmt::format("condition 2: lambda = {:.6g} > sqrt(k)/12", lam);
    } else if (gamma * gamma * lam > k) {
      why += "condition 2: gamma^2 lambda > k";
    } else {
      const double e =
          remez_best_approx([&phi](double x) { return phi(x) / x; }, L, Interval{gamma, lam / k})
              .sup_error;
      const double lhs = 2.0 * k * gamma * e;
      if (lhs >= d) {
        out.side_condition = 2;
        out.approx_error = e;
        out.certified_d = lhs;
        out.gamma = gamma;
      } else {
        why += fmt::format("condition 2: 2 k gamma E_L(phi*) = {:.6g} < d = {:.6g}", lhs, d);
      }
    }
  }
  if (out.side_condition == 0) {
    throw ConfigError("no side condition of the lower bound holds: " + why);
  }

  const double tv_term = k * std::pow(2.0 * std::numbers::e * n * lam / (L * k), L);
  const double main = d * d / 32.0 * (7.0 / 8.0 - tv_term);
  out.terms.emplace_back("main", main);
  out.terms.emplace_back("poisson_tv", tv_term);
  const double W = prm.W, Wp = prm.W_prime, en = std::exp(-n / 32.0);
  if (a < 1.0) {
    out.terms.emplace_back("lambda_term", W * std::pow(k, 1.0 - 2.0 * a) * std::pow(lam, 2.0 * a));
    out.terms.emplace_back("exp_term", Wp * std::pow(k, 2.0 - 2.0 * a) * en);
    out.terms.emplace_back("epsilon_term", std::pow(4.0, 2.0 * a) * Wp *
                                               std::pow(k, 2.0 - 2.0 * a) * std::pow(k, -a) *
                                               std::pow(lam, 2.0 * a));
  } else if (a == 1.0) {
    const double lek = std::log(lam / (std::numbers::e * k));
    const double l2 = std::pow(std::log(std::numbers::e * k), 2);
    const double eps = 4.0 * lam / std::sqrt(k);
    out.terms.emplace_back("lambda_term", W * lam * lam * lek * lek / k);
    out.terms.emplace_back("exp_term", Wp * l2 * en);
    out.terms.emplace_back("epsilon_term", 16.0 * Wp * lam * lam / k * l2);
    out.terms.emplace_back("shift_term",
                           Wp * (1.0 + eps) * (1.0 + eps) * std::pow(std::log1p(eps), 2));
  } else {
    out.terms.emplace_back("lambda_term", W * std::pow(k, 1.0 - 2.0 * a) * std::pow(lam, 2.0 * a));
    out.terms.emplace_back("exp_term", Wp * en);
    out.terms.emplace_back("epsilon_term", 16.0 * Wp * lam * lam / (k * k));
  }
  double value = main;
  for (std::size_t i = 2; i < out.terms.size(); ++i) value -= out.terms[i].second;
  out.value = value;
  return out;
}

SimplexMaximum maximize_on_simplex(const RealFn& g, std::size_t k) {
  if (k < 1) throw ConfigError("simplex needs k >= 1");
  const double g0 = g(0.0);
  SimplexMaximum best;
  best.value = -std::numeric_limits<double>::infinity();
  auto consider = [&](double value, std::size_t z, std::size_t j, double a, std::size_t m,
                      double b) {
    if (value > best.value) {
      best.value = value;
      best.argmax.assign(j, a);
      best.argmax.insert(best.argmax.end(), m, b);
      best.argmax.insert(best.argmax.end(), z, 0.0);
      std::sort(best.argmax.begin(), best.argmax.end(), std::greater<>());
    }
  };
  for (std::size_t z = 0; z < k; ++z) {
    const std::size_t active = k - z;
    const double zeros = static_cast<double>(z) * g0;
    // One level: uniform over the active coordinates.
    const double u = 1.0 / static_cast<double>(active);
    consider(static_cast<double>(active) * g(u) + zeros, z, active, u, 0, 0.0);
    // Two levels: j coordinates at a, the other m share the rest equally.
    for (std::size_t j = 1; j < active; ++j) {
      const std::size_t m = active - j;
      const double jd = static_cast<double>(j), md = static_cast<double>(m);
      auto F = [&](double a) {
        return jd * g(a) + md * g(std::max(0.0, (1.0 - jd * a) / md)) + zeros;
      };
      const double hi = 1.0 / jd;
      constexpr int kScan = 256;
      int arg = 0;
      double fbest = -std::numeric_limits<double>::infinity();
      for (int s = 1; s < kScan; ++s) {
        const double v = F(hi * s / kScan);
        if (v > fbest) {
          fbest = v;
          arg = s;
        }
      }
      const double a = golden_section_max(F, hi * (arg - 1) / kScan, hi * (arg + 1) / kScan);
      consider(F(a), z, j, a, m, std::max(0.0, (1.0 - jd * a) / md));
      consider(fbest, z, j, hi * arg / kScan, m, std::max(0.0, (1.0 - jd * hi * arg / kScan) / md));
    }
  }
  return best;
}

}  // namespace minifunc
