#include "minifunc/functional.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "minifunc/errors.hpp"
#include "minifunc/numeric.hpp"

namespace minifunc {
namespace {

// a(a-1)...(a-l+1)
double falling_power(double a, int l) {
  double r = 1.0;
  for (int j = 0; j < l; ++j) r *= (a - j);
  return r;
}

double factorial(int m) {
  double r = 1.0;
  for (int j = 2; j <= m; ++j) r *= j;
  return r;
}

}  // namespace

Functional Functional::power(double alpha) {
  Functional f;
  f.kind_ = FunctionalKind::Power;
  f.name_ = fmt::format("power:{}", alpha);
  f.alpha_ = alpha;
  f.exponent_ = alpha;
  f.max_order_ = 6;
  f.eval_ = std::make_shared<const EvalFn>([alpha](double p) {
    if (p == 0.0) {
      if (alpha > 0.0) return 0.0;
      if (alpha == 0.0) return 1.0;
      return std::numeric_limits<double>::infinity();
    }
    return std::pow(p, alpha);
  });
  f.deriv_ = std::make_shared<const DerivFn>(
      [alpha](int l, double p) { return falling_power(alpha, l) * std::pow(p, alpha - l); });
  return f;
}

Functional Functional::shannon() {
  Functional f;
  f.kind_ = FunctionalKind::Shannon;
  f.name_ = "shannon";
  f.alpha_ = 1.0;
  f.exponent_ = 1.0;
  f.max_order_ = 6;
  f.eval_ = std::make_shared<const EvalFn>([](double p) {
    if (p == 0.0) return 0.0;
    return -p * std::log(p);
  });
  f.deriv_ = std::make_shared<const DerivFn>([](int l, double p) {
    if (l == 1) return -std::log(p) - 1.0;
    const double sign = (l % 2 == 0) ? -1.0 : 1.0;
    return sign * factorial(l - 2) * std::pow(p, 1.0 - l);
  });
  return f;
}

Functional Functional::custom(std::string name, EvalFn eval, DerivFn deriv, double alpha,
                              int max_deriv_order) {
  if (!eval) throw ConfigError("custom functional needs an eval callback");
  if (max_deriv_order > 0 && !deriv) {
    throw ConfigError("custom functional declares derivatives but supplies no callback");
  }
  Functional f;
  f.kind_ = FunctionalKind::Custom;
  f.name_ = std::move(name);
  f.alpha_ = alpha;
  f.exponent_ = alpha;
  f.max_order_ = max_deriv_order;
  f.eval_ = std::make_shared<const EvalFn>(std::move(eval));
  if (deriv) f.deriv_ = std::make_shared<const DerivFn>(std::move(deriv));
  return f;
}

double Functional::eval(double p) const { return (*eval_)(p); }

double Functional::deriv(int order, double p) const {
  if (order < 1 || order > max_order_) {
    throw ConfigError(
        fmt::format("derivative order {} outside [1, {}] for {}", order, max_order_, name_));
  }
  return (*deriv_)(order, p);
}

Functional Functional::plus_affine(double c, double slope, double centre) const {
  const Functional base = *this;
  auto eval = [base, c, slope, centre](double p) {
    return base.eval(p) + c + slope * (p - centre);
  };
  auto deriv = [base, slope](int l, double p) {
    return l == 1 ? base.deriv(1, p) + slope : base.deriv(l, p);
  };
  return custom(fmt::format("{}+affine", name_), eval, deriv, alpha_, max_order_);
}

nlohmann::json Functional::to_json() const {
  switch (kind_) {
    case FunctionalKind::Power:
      return {{"kind", "power"}, {"alpha", exponent_}};
    case FunctionalKind::Shannon:
      return {{"kind", "shannon"}};
    case FunctionalKind::Custom:
      break;
  }
  throw ConfigError("custom functional '" + name_ + "' has no serialized form");
}

Functional Functional::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InputError("functional JSON needs a string field 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "shannon") return shannon();
  if (kind == "power") {
    if (!j.contains("alpha") || !j.at("alpha").is_number()) {
      throw InputError("power functional needs a numeric 'alpha'");
    }
    return power(j.at("alpha").get<double>());
  }
  throw InputError("unknown functional kind '" + kind + "'");
}

Functional Functional::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  if (!text.empty() && text.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("functional JSON: ") + e.what());
    }
    return from_json(j);
  }
  if (text == "shannon") return shannon();
  constexpr std::string_view kPrefix = "power:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string rest(text.substr(kPrefix.size()));
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != rest.size()) {
      throw InputError("cannot parse power exponent in '" + std::string(text) + "'");
    }
    return power(a);
  }
  throw InputError("unknown functional '" + std::string(text) + "'");
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs, double tolerance)
    : probs_(std::move(probs)), tolerance_(tolerance) {
  if (probs_.empty()) throw InputError("probability vector is empty");
  if (!(tolerance_ >= 0.0)) throw InputError("simplex tolerance must be non-negative");
  CompensatedSum total;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i])) {
      throw InputError(fmt::format("probability entry {} is {}", i, probs_[i]));
    }
    total += probs_[i];
  }
  if (std::fabs(total.value() - 1.0) > tolerance_) {
    throw InputError(
        fmt::format("probabilities sum to {:.17g}, outside 1 +/- {}", total.value(), tolerance_));
  }
}

ProbabilityVector ProbabilityVector::uniform(std::size_t k) {
  if (k == 0) throw InputError("uniform distribution needs k >= 1");
  return ProbabilityVector(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbabilityVector ProbabilityVector::degenerate(std::size_t k, std::size_t at) {
  if (at >= k) throw InputError("degenerate atom outside the alphabet");
  std::vector<double> p(k, 0.0);
  p[at] = 1.0;
  return ProbabilityVector(std::move(p));
}

double additive_functional(const ProbabilityVector& P, const Functional& phi) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double v = phi(P[i]);
    if (!std::isfinite(v)) {
      throw NumericalError(fmt::format("phi is not finite at index {} (p = {:.17g})", i, P[i]));
    }
    acc += v;
  }
  return acc.value();
}

namespace {
void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ConfigError(fmt::format("truncation level {} outside (0, 1)", delta));
  }
}
}  // namespace

double truncated_eval(const Functional& phi, double delta, double p) {
  check_delta(delta);
  if (p < delta) return phi(delta);
  if (p > 1.0) return phi(1.0);
  return phi(p);
}

double truncated_deriv(const Functional& phi, int order, double delta, double p) {
  if (order < 1 || order > phi.max_deriv_order()) {
    throw ConfigError(
        fmt::format("derivative order {} outside [1, {}]", order, phi.max_deriv_order()));
  }
  check_delta(delta);
  if (p < delta || p > 1.0) return 0.0;
  // Built-ins are smooth at 1; the value there is the left limit.
  return phi.deriv(order, p);
}

double bias_corrected_fn(const Functional& phi, int order, double delta, double n, double p) {
  if (order != 2 && order != 4) {
    throw ConfigError(fmt::format("bias correction order must be 2 or 4, got {}", order));
  }
  if (!(n > 0.0)) throw ConfigError("bias correction needs n > 0");
  CompensatedSum acc;
  acc += truncated_eval(phi, delta, p);
  acc += -p / (2.0 * n) * truncated_deriv(phi, 2, delta, p);
  if (order == 4) {
    const double n2 = n * n;
    const double t4 = truncated_deriv(phi, 4, delta, p);
    acc += p / (3.0 * n2) * truncated_deriv(phi, 3, delta, p);
    acc += 5.0 * p / (24.0 * n2 * n) * t4;
    acc += p * p / (8.0 * n2) * t4;
  }
  return acc.value();
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> divergence_speed_grid() { return log_grid(1e-8, 1.0 - 1e-8, 4096); }

DivergenceSpeedReport check_divergence_speed(const Functional& phi, int ell, double alpha,
                                             std::span<const double> grid) {
  DivergenceSpeedReport rep;
  rep.ell = ell;
  rep.alpha = alpha;
  if (ell < 1 || ell > phi.max_deriv_order()) {
    rep.reason = fmt::format("order {} not available (max {})", ell, phi.max_deriv_order());
    return rep;
  }
  std::vector<double> pts(grid.begin(), grid.end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::remove_if(pts.begin(), pts.end(), [](double p) { return !(p > 0.0 && p < 1.0); }),
            pts.end());
  if (pts.size() < 2) {
    rep.reason = "grid has fewer than two interior points";
    return rep;
  }

  auto magnitude = [&](double p) { return std::fabs(phi.deriv(ell, p)); };
  auto scale = [&](double p) { return std::pow(p, alpha - ell); };

  const double p0 = pts.front();
  rep.W = magnitude(p0) / scale(p0);
  if (!(rep.W > 0.0) || !std::isfinite(rep.W)) {
    rep.reason = "limit ratio at the smallest grid point is not a positive finite number";
    rep.witness = p0;
    return rep;
  }

  // The ratio must have settled over the lowest decade of the grid.
  const auto decade_it = std::lower_bound(pts.begin(), pts.end(), 10.0 * p0);
  const double p1 = decade_it == pts.end() ? pts.back() : *decade_it;
  const double ratio1 = magnitude(p1) / scale(p1);
  if (std::fabs(ratio1 - rep.W) > 1e-3 * rep.W) {
    rep.reason = fmt::format("ratio |phi^({})| p^({}-alpha) not settled: {:.6g} vs {:.6g}", ell,
                             ell, rep.W, ratio1);
    rep.witness = p1;
    return rep;
  }

  // Residual r = |phi^(l)| - W p^(alpha-l). Rounding noise proportional to
  // the envelope is not a slack.
  auto residual = [&](double p) {
    const double env = rep.W * scale(p);
    const double r = magnitude(p) - env;
    return std::fabs(r) <= 1e-9 * env ? 0.0 : r;
  };
  double c = 0.0, cp = 0.0;
  for (double p : pts) {
    const double r = residual(p);
    if (!std::isfinite(r)) {
      rep.reason = "non-finite derivative on the grid";
      rep.witness = p;
      return rep;
    }
    c = std::max(c, r);
    cp = std::max(cp, -r);
  }
  rep.c = c;
  rep.c_prime = cp;

  // Slack must stay bounded: the residual may not keep growing at the
  // small end of the grid.
  const double r0 = std::fabs(residual(p0));
  const double r1 = std::fabs(residual(p1));
  const double floor_tol = 1e-9 * rep.W * scale(p0);
  if (r0 > 2.0 * r1 + floor_tol && r0 > 1e-12) {
    rep.reason = fmt::format("slack grows toward 0: |r({:.3g})| = {:.6g}, |r({:.3g})| = {:.6g}", p0,
                             r0, p1, r1);
    rep.witness = p0;
    return rep;
  }
  rep.holds = true;
  return rep;
}

DivergenceSpeedReport check_divergence_speed(const Functional& phi, int ell, double alpha) {
  const auto grid = divergence_speed_grid();
  return check_divergence_speed(phi, ell, alpha, grid);
}

nlohmann::json to_json(const DivergenceSpeedReport& report) {
  nlohmann::json j = {{"ell", report.ell}, {"alpha", report.alpha},     {"W", report.W},
                      {"c", report.c},     {"c_prime", report.c_prime}, {"holds", report.holds}};
  j["witness"] = report.witness ? nlohmann::json(*report.witness) : nlohmann::json(nullptr);
  j["reason"] = report.reason;
  return j;
}

}  // namespace minifunc
