#pragma once

#include <functional>
#include <json.hpp>
#include <span>
#include <vector>

#include "minifunc/functional.hpp"

namespace minifunc {

using RealFn = std::function<double(double)>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const noexcept { return hi - lo; }
  double mid() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Polynomial in the monomial basis, sum_m coeffs[m] x^m, attached to the
/// interval it was built for.
class Polynomial {
 public:
  Polynomial(std::vector<double> coeffs, Interval interval);

  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  const Interval& interval() const noexcept { return interval_; }
  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }

  double operator()(double x) const;  // Horner

 private:
  std::vector<double> coeffs_;
  Interval interval_;
};

/// Best uniform approximation returned by the exchange algorithm.
///
/// The exchange is carried out in the Chebyshev basis of the interval mapped
/// onto [-1, 1]; `chebyshev` keeps those coefficients and eval() uses them.
/// `poly` is the same polynomial expanded in monomials of x, which is what
/// the factorial-moment estimator consumes. For large degrees on short
/// intervals the monomial form is poorly conditioned, so numerical checks
/// should go through eval().
struct ApproxResult {
  Polynomial poly;
  std::vector<double> chebyshev;
  double sup_error = 0.0;
  std::vector<double> alternation_points;
  int iterations = 0;
  bool converged = false;

  double eval(double x) const;
};

struct RemezOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  // on max|r| / min|r(reference)| - 1
};

/// Centered L-th difference sum_m (-1)^(L-m) C(L,m) f(x + (L/2 - m) h),
/// or 0 when x -/+ hL/2 leaves I.
double finite_difference(const RealFn& f, int L, double h, double x, Interval I);

enum class SmoothnessWeight { Unit, SqrtSemicircle };

/// Grid supremum of |finite_difference| with step h * weight(x), over 64
/// log-spaced h in (0, t] and 4096 uniform x in I. A lower estimate of the
/// true modulus. Diagnostic only.
double modulus_of_smoothness(const RealFn& f, int L, double t, Interval I,
                             SmoothnessWeight weight = SmoothnessWeight::Unit);

/// Bernstein polynomial B_L[f] = sum_v f(v/L) C(L,v) x^v (1-x)^(L-v) on [0,1].
struct BernsteinApprox {
  Polynomial poly;                  // monomial expansion
  std::vector<double> node_values;  // f(v/L), v = 0..L

  /// De Casteljau evaluation of the Bernstein form. Accurate for every
  /// supported degree, unlike Horner on the monomial expansion.
  double eval(double x) const;
};

/// Throws ConfigError for L < 1 or L > 64.
BernsteinApprox bernstein_approx(const RealFn& f, int L);

/// Minimax polynomial of degree L for f on I (Remez exchange, Chebyshev-node
/// start). Non-converged results still carry the best iterate.
/// Throws NumericalError when f is not finite on I.
ApproxResult remez_best_approx(const RealFn& f, int L, Interval I, RemezOptions opts = {});

/// Sup-norm of f - g over I estimated on a cosine-spaced grid with golden
/// refinement around the largest cell.
double sup_distance(const RealFn& f, const RealFn& g, Interval I, int grid = 4096);

struct ApproxCurveEntry {
  int L = 0;
  double lambda = 0.0;
  double error = 0.0;
  bool converged = false;
};

struct ApproxCurve {
  std::vector<ApproxCurveEntry> entries;
  std::vector<double> slope_vs_L;       // one per lambda value
  std::vector<double> slope_vs_lambda;  // one per L value
};

/// E_L(phi, [0, lambda]) for every (L, lambda) pair with log-log slopes.
ApproxCurve approx_error_curve(const Functional& phi, std::span<const int> L_values,
                               std::span<const double> lambda_values);

nlohmann::json to_json(const ApproxResult& r);

}  // namespace minifunc
