#pragma once

#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace minifunc {

enum class FunctionalKind { Power, Shannon, Custom };

/// The per-symbol function phi of an additive functional sum_i phi(p_i),
/// with analytic derivatives and its divergence-speed exponent alpha.
///
/// Built-ins:
///   Power(a):  phi(p) = p^a,     phi^(l)(p) = a(a-1)...(a-l+1) p^(a-l)
///   Shannon:   phi(p) = -p ln p, phi'(p) = -ln p - 1,
///              phi^(l)(p) = -(-1)^l (l-2)! p^(1-l) for l >= 2
///
/// phi(0) is the right limit at zero. Custom functionals must supply it as
/// part of their eval callback and must supply derivatives analytically.
class Functional {
 public:
  using EvalFn = std::function<double(double)>;
  using DerivFn = std::function<double(int, double)>;

  static Functional power(double alpha);
  static Functional shannon();
  static Functional custom(std::string name, EvalFn eval, DerivFn deriv, double alpha,
                           int max_deriv_order);

  FunctionalKind kind() const noexcept { return kind_; }
  /// Divergence-speed exponent.
  double alpha() const noexcept { return alpha_; }
  /// Exponent parameter of Power; alpha() for the others.
  double power_exponent() const noexcept { return exponent_; }
  int max_deriv_order() const noexcept { return max_order_; }
  const std::string& name() const noexcept { return name_; }

  double eval(double p) const;
  double operator()(double p) const { return eval(p); }

  /// Throws ConfigError when order is outside [1, max_deriv_order()].
  double deriv(int order, double p) const;

  /// Adds c + slope * (p - centre) to phi. Derivatives of order >= 2 are
  /// unchanged; the divergence speed is preserved.
  Functional plus_affine(double c, double slope, double centre) const;

  /// {"kind":"power","alpha":a} or {"kind":"shannon"}. Custom functionals
  /// have no serialized form and throw ConfigError.
  nlohmann::json to_json() const;
  static Functional from_json(const nlohmann::json& j);

  /// Accepts JSON text, "shannon", or "power:<alpha>".
  static Functional parse(std::string_view text);

 private:
  Functional() = default;

  FunctionalKind kind_ = FunctionalKind::Shannon;
  std::string name_;
  double alpha_ = 1.0;
  double exponent_ = 1.0;
  int max_order_ = 6;
  std::shared_ptr<const EvalFn> eval_;
  std::shared_ptr<const DerivFn> deriv_;
};

/// A point of the (possibly relaxed) probability simplex:
/// entries >= 0 and |sum - 1| <= tolerance.
class ProbabilityVector {
 public:
  explicit ProbabilityVector(std::vector<double> probs, double tolerance = 1e-12);

  static ProbabilityVector uniform(std::size_t k);
  static ProbabilityVector degenerate(std::size_t k, std::size_t at = 0);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> values() const noexcept { return probs_; }
  double tolerance() const noexcept { return tolerance_; }

 private:
  std::vector<double> probs_;
  double tolerance_;
};

/// theta(P; phi) = sum_i phi(p_i), compensated summation.
double additive_functional(const ProbabilityVector& P, const Functional& phi);

/// T_delta[phi](p): phi(delta) below delta, phi(p) on [delta,1], phi(1) above 1.
double truncated_eval(const Functional& phi, double delta, double p);

/// Derivative companion of truncated_eval: zero outside [delta, 1].
double truncated_deriv(const Functional& phi, int order, double delta, double p);

/// Truncated Miller-type surrogate of order 2 or 4 evaluated at p.
///   order 2: T[phi] - p/(2n) T2
///   order 4: order 2 + p/(3n^2) T3 + 5p/(24n^3) T4 + p^2/(8n^2) T4
double bias_corrected_fn(const Functional& phi, int order, double delta, double n, double p);

struct DivergenceSpeedReport {
  int ell = 0;
  double alpha = 0.0;
  double W = 0.0;
  double c = 0.0;        // upper slack
  double c_prime = 0.0;  // lower slack
  bool holds = false;
  std::optional<double> witness;  // grid point where the sandwich broke down
  std::string reason;
};

/// Log-spaced grid on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t points);

/// Default certificate grid: 4096 log-spaced points on [1e-8, 1 - 1e-8].
std::vector<double> divergence_speed_grid();

/// Fits W, c, c' of W p^(alpha-l) - c' <= |phi^(l)(p)| <= W p^(alpha-l) + c
/// on the grid. W is the limit ratio |phi^(l)| p^(l-alpha) at the small end
/// of the grid. A grid certificate, not a proof.
DivergenceSpeedReport check_divergence_speed(const Functional& phi, int ell, double alpha,
                                             std::span<const double> grid);
DivergenceSpeedReport check_divergence_speed(const Functional& phi, int ell, double alpha);

nlohmann::json to_json(const DivergenceSpeedReport& report);

}  // namespace minifunc
