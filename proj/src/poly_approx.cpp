#include "minifunc/poly_approx.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "minifunc/errors.hpp"
#include "minifunc/numeric.hpp"

namespace minifunc {

Polynomial::Polynomial(std::vector<double> coeffs, Interval interval)
    : coeffs_(std::move(coeffs)), interval_(interval) {
  if (coeffs_.empty()) throw ConfigError("polynomial needs at least one coefficient");
  if (!(interval_.lo < interval_.hi)) throw ConfigError("polynomial interval must have lo < hi");
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

namespace {

// Clenshaw recurrence for sum_j c_j T_j(t).
double chebyshev_eval(const std::vector<double>& c, double t) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = c.size(); j-- > 1;) {
    const double b0 = 2.0 * t * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c[0];
}

double to_unit(const Interval& I, double x) { return (2.0 * x - I.lo - I.hi) / I.width(); }
double from_unit(const Interval& I, double t) { return I.mid() + 0.5 * I.width() * t; }

// Monomial coefficients in x of sum_j c_j T_j((x - mid) / half).
std::vector<double> chebyshev_to_monomial(const std::vector<double>& c, const Interval& I) {
  using LD = long double;
  const std::size_t n = c.size();
  const LD b = 2.0L / static_cast<LD>(I.width());
  const LD a = -static_cast<LD>(I.lo + I.hi) / static_cast<LD>(I.width());
  std::vector<LD> prev(n, 0.0L), cur(n, 0.0L), out(n, 0.0L);
  prev[0] = 1.0L;  // T_0
  out[0] += c[0];
  if (n > 1) {
    cur[0] = a;
    cur[1] = b;  // T_1 = a + b x
    for (std::size_t m = 0; m < n; ++m) out[m] += static_cast<LD>(c[1]) * cur[m];
  }
  for (std::size_t j = 2; j < n; ++j) {
    std::vector<LD> next(n, 0.0L);
    for (std::size_t m = 0; m < n; ++m) {
      LD v = 2.0L * a * cur[m] - prev[m];
      if (m > 0) v += 2.0L * b * cur[m - 1];
      next[m] = v;
    }
    for (std::size_t m = 0; m < n; ++m) out[m] += static_cast<LD>(c[j]) * next[m];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return std::vector<double>(out.begin(), out.end());
}

struct Extremum {
  double t;
  double r;
};

}  // namespace

double ApproxResult::eval(double x) const {
  return chebyshev_eval(chebyshev, to_unit(poly.interval(), x));
}

double finite_difference(const RealFn& f, int L, double h, double x, Interval I) {
  if (L < 1 || !(h > 0.0)) return 0.0;
  const double half_span = 0.5 * h * L;
  if (!I.contains(x - half_span) || !I.contains(x + half_span)) return 0.0;
  CompensatedSum acc;
  double binom = 1.0;  // C(L, m)
  for (int m = 0; m <= L; ++m) {
    const double sign = ((L - m) % 2 == 0) ? 1.0 : -1.0;
    acc += sign * binom * f(x + (0.5 * L - m) * h);
    binom = binom * (L - m) / (m + 1);
  }
  return acc.value();
}

double modulus_of_smoothness(const RealFn& f, int L, double t, Interval I,
                             SmoothnessWeight weight) {
  if (!(t > 0.0)) throw ConfigError("modulus of smoothness needs t > 0");
  constexpr int kSteps = 64;
  constexpr int kPoints = 4096;
  const auto hs = log_grid(t * 1e-4, t, kSteps);
  double best = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = I.lo + I.width() * static_cast<double>(i) / (kPoints - 1);
    double w = 1.0;
    if (weight == SmoothnessWeight::SqrtSemicircle) w = std::sqrt(std::max(0.0, 1.0 - x * x));
    if (w == 0.0) continue;
    for (double h : hs) best = std::max(best, std::fabs(finite_difference(f, L, h * w, x, I)));
  }
  return best;
}

double BernsteinApprox::eval(double x) const {
  std::vector<double> b = node_values;
  const double y = 1.0 - x;
  for (std::size_t r = 1; r < b.size(); ++r) {
    for (std::size_t v = 0; v + r < b.size(); ++v) b[v] = y * b[v] + x * b[v + 1];
  }
  return b[0];
}

BernsteinApprox bernstein_approx(const RealFn& f, int L) {
  if (L < 1) throw ConfigError("Bernstein degree must be >= 1");
  if (L > 64) {
    throw ConfigError(
        fmt::format("Bernstein degree {} > 64: monomial expansion would overflow binomials", L));
  }
  std::vector<double> nodes(L + 1);
  for (int v = 0; v <= L; ++v) nodes[v] = f(static_cast<double>(v) / L);

  using LD = long double;
  // C(L, m) C(m, v) = C(L, v) C(L - v, m - v)
  std::vector<std::vector<LD>> binom(L + 1, std::vector<LD>(L + 1, 0.0L));
  for (int i = 0; i <= L; ++i) {
    binom[i][0] = 1.0L;
    for (int j = 1; j <= i; ++j)
      binom[i][j] = binom[i - 1][j - 1] + (j <= i - 1 ? binom[i - 1][j] : 0.0L);
  }
  std::vector<double> coeffs(L + 1);
  for (int m = 0; m <= L; ++m) {
    LD acc = 0.0L;
    for (int v = 0; v <= m; ++v) {
      const LD sign = ((m - v) % 2 == 0) ? 1.0L : -1.0L;
      acc += sign * binom[L][m] * binom[m][v] * static_cast<LD>(nodes[v]);
    }
    coeffs[m] = static_cast<double>(acc);
  }
  return BernsteinApprox{Polynomial(std::move(coeffs), Interval{0.0, 1.0}), std::move(nodes)};
}

double sup_distance(const RealFn& f, const RealFn& g, Interval I, int grid) {
  auto err = [&](double x) { return std::fabs(f(x) - g(x)); };
  double best = -1.0;
  int best_i = 0;
  std::vector<double> xs(grid);
  for (int i = 0; i < grid; ++i) {
    const double t = -std::cos(std::numbers::pi * i / (grid - 1));
    xs[i] = std::clamp(from_unit(I, t), I.lo, I.hi);
    const double e = err(xs[i]);
    if (e > best) {
      best = e;
      best_i = i;
    }
  }
  const double lo = xs[std::max(0, best_i - 1)];
  const double hi = xs[std::min(grid - 1, best_i + 1)];
  const double x = golden_section_max(err, lo, hi);
  return std::max(best, err(x));
}

ApproxResult remez_best_approx(const RealFn& f, int L, Interval I, RemezOptions opts) {
  if (L < 0) throw ConfigError("approximation degree must be >= 0");
  if (!(I.lo < I.hi)) throw ConfigError("approximation interval must have lo < hi");
  const int n_ref = L + 2;

  auto fx = [&](double t) {
    const double x = std::clamp(from_unit(I, t), I.lo, I.hi);
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw NumericalError(fmt::format("f is not finite at x = {:.17g}", x));
    }
    return v;
  };

  // Chebyshev extrema of T_{L+1}, ascending.
  std::vector<double> ref(n_ref);
  for (int i = 0; i < n_ref; ++i) ref[i] = -std::cos(std::numbers::pi * i / (L + 1));

  double f_scale = 0.0;
  for (int i = 0; i <= 64; ++i)
    f_scale = std::max(f_scale, std::fabs(fx(-std::cos(std::numbers::pi * i / 64))));
  const double exact_tol = 1e-14 * (1.0 + f_scale);

  std::vector<double> coef(L + 1, 0.0);
  auto residual = [&](double t) { return fx(t) - chebyshev_eval(coef, t); };

  // Global sup of |r| over a cosine grid, refined around the best cell.
  const int scan_points = std::max(1024, 64 * n_ref);
  std::vector<double> scan(scan_points);
  for (int i = 0; i < scan_points; ++i)
    scan[i] = -std::cos(std::numbers::pi * i / (scan_points - 1));
  auto global_max = [&]() {
    double best = -1.0;
    int bi = 0;
    for (int i = 0; i < scan_points; ++i) {
      const double a = std::fabs(residual(scan[i]));
      if (a > best) {
        best = a;
        bi = i;
      }
    }
    const double lo = scan[std::max(0, bi - 1)], hi = scan[std::min(scan_points - 1, bi + 1)];
    const double t = golden_section_max([&](double s) { return std::fabs(residual(s)); }, lo, hi);
    const double rt = residual(t);
    if (std::fabs(rt) > best) return Extremum{t, rt};
    return Extremum{scan[bi], residual(scan[bi])};
  };

  ApproxResult out{Polynomial({0.0}, I), {}, 0.0, {}, 0, false};
  double best_error = std::numeric_limits<double>::infinity();
  std::vector<double> best_coef, best_ref;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    out.iterations = iter;
    Eigen::MatrixXd A(n_ref, n_ref);
    Eigen::VectorXd rhs(n_ref);
    for (int i = 0; i < n_ref; ++i) {
      double tm1 = 1.0, tj = ref[i];
      for (int j = 0; j <= L; ++j) {
        double v;
        if (j == 0) {
          v = 1.0;
        } else if (j == 1) {
          v = ref[i];
        } else {
          v = 2.0 * ref[i] * tj - tm1;
          tm1 = tj;
          tj = v;
        }
        A(i, j) = v;
      }
      A(i, L + 1) = (i % 2 == 0) ? 1.0 : -1.0;
      rhs(i) = fx(ref[i]);
    }
    const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
    for (int j = 0; j <= L; ++j) coef[j] = sol(j);
    const double level = sol(L + 1);

    const Extremum gmax = global_max();
    const double sup = std::fabs(gmax.r);
    if (sup < best_error) {
      best_error = sup;
      best_coef = coef;
      best_ref = ref;
    }
    if (sup <= exact_tol) {
      out.converged = true;
      break;
    }
    if (!std::isfinite(level)) break;

    // Zeros of r between consecutive reference points, then one signed
    // extremum per cell between zeros.
    std::vector<double> rref(n_ref);
    for (int i = 0; i < n_ref; ++i) rref[i] = residual(ref[i]);
    std::vector<double> bounds{-1.0};
    for (int i = 0; i + 1 < n_ref; ++i) {
      double a = ref[i], b = ref[i + 1];
      double ra = rref[i];
      if (ra * rref[i + 1] > 0.0) {
        bounds.push_back(0.5 * (a + b));
        continue;
      }
      for (int k = 0; k < 100 && b - a > 1e-16; ++k) {
        const double m = 0.5 * (a + b);
        const double rm = residual(m);
        if ((rm > 0.0) == (ra > 0.0)) {
          a = m;
          ra = rm;
        } else {
          b = m;
        }
      }
      bounds.push_back(0.5 * (a + b));
    }
    bounds.push_back(1.0);

    std::vector<double> next(n_ref);
    std::vector<double> rnext(n_ref);
    for (int i = 0; i < n_ref; ++i) {
      const double s = rref[i] >= 0.0 ? 1.0 : -1.0;
      const double lo = bounds[i], hi = bounds[i + 1];
      auto signed_r = [&](double t) { return s * residual(t); };
      constexpr int kCell = 16;
      double bt = ref[i], bv = signed_r(ref[i]);
      int bk = -1;
      for (int k = 0; k <= kCell; ++k) {
        const double t = lo + (hi - lo) * k / kCell;
        const double v = signed_r(t);
        if (v > bv) {
          bv = v;
          bt = t;
          bk = k;
        }
      }
      double clo, chi;
      if (bk >= 0) {
        clo = lo + (hi - lo) * std::max(0, bk - 1) / kCell;
        chi = lo + (hi - lo) * std::min(kCell, bk + 1) / kCell;
      } else {
        const double w = (hi - lo) / kCell;
        clo = std::max(lo, bt - w);
        chi = std::min(hi, bt + w);
      }
      const double t = golden_section_max(signed_r, clo, chi);
      const double v = signed_r(t);
      if (v > bv) {
        bv = v;
        bt = t;
      }
      next[i] = bt;
      rnext[i] = s * bv;
    }

    // Single-point exchange when the global extremum is not represented.
    double ref_max = 0.0;
    for (double r : rnext) ref_max = std::max(ref_max, std::fabs(r));
    if (sup > ref_max * (1.0 + 1e-12)) {
      const double t = gmax.t;
      const double r = gmax.r;
      auto same = [&](int i) { return (rnext[i] >= 0.0) == (r >= 0.0); };
      if (t < next.front()) {
        if (same(0)) {
          next[0] = t;
          rnext[0] = r;
        } else {
          next.insert(next.begin(), t);
          rnext.insert(rnext.begin(), r);
          next.pop_back();
          rnext.pop_back();
        }
      } else if (t > next.back()) {
        if (same(n_ref - 1)) {
          next.back() = t;
          rnext.back() = r;
        } else {
          next.push_back(t);
          rnext.push_back(r);
          next.erase(next.begin());
          rnext.erase(rnext.begin());
        }
      } else {
        const auto it = std::upper_bound(next.begin(), next.end(), t);
        const int j = static_cast<int>(it - next.begin());  // next[j-1] <= t < next[j]
        if (same(j - 1)) {
          next[j - 1] = t;
          rnext[j - 1] = r;
        } else {
          next[j] = t;
          rnext[j] = r;
        }
      }
    }

    double ref_min = std::numeric_limits<double>::infinity();
    for (double r : rnext) ref_min = std::min(ref_min, std::fabs(r));
    ref = std::move(next);
    std::sort(ref.begin(), ref.end());

    // The scan refines a single cell; near convergence the extrema are almost
    // level, so the refined per-cell extrema can exceed it.
    if (ref_min > 0.0 && std::max(sup, ref_max) / ref_min - 1.0 < opts.tolerance) {
      out.converged = true;
      break;
    }
  }

  // Report the final iterate if converged, otherwise the best one seen.
  if (!out.converged) {
    coef = best_coef;
    ref = best_ref;
  }
  // Refresh the reference against the returned coefficients.
  const Extremum gmax = global_max();
  out.sup_error = std::fabs(gmax.r);
  for (double t : ref) out.sup_error = std::max(out.sup_error, std::fabs(residual(t)));
  out.chebyshev = coef;
  out.alternation_points.resize(n_ref);
  for (int i = 0; i < n_ref; ++i)
    out.alternation_points[i] = std::clamp(from_unit(I, ref[i]), I.lo, I.hi);
  std::sort(out.alternation_points.begin(), out.alternation_points.end());
  out.poly = Polynomial(chebyshev_to_monomial(coef, I), I);
  return out;
}

ApproxCurve approx_error_curve(const Functional& phi, std::span<const int> L_values,
                               std::span<const double> lambda_values) {
  ApproxCurve curve;
  const RealFn f = [&phi](double x) { return phi(x); };
  for (double lambda : lambda_values) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
      throw ConfigError(fmt::format("lambda {} outside (0, 1]", lambda));
    }
  }
  for (int L : L_values) {
    if (L < 1) throw ConfigError("approx_error_curve needs L >= 1");
  }
  for (double lambda : lambda_values) {
    for (int L : L_values) {
      const auto r = remez_best_approx(f, L, Interval{0.0, lambda});
      curve.entries.push_back({L, lambda, r.sup_error, r.converged});
    }
  }
  const std::size_t nL = L_values.size();
  for (std::size_t li = 0; li < lambda_values.size(); ++li) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < nL; ++j) {
      xs.push_back(L_values[j]);
      ys.push_back(curve.entries[li * nL + j].error);
    }
    curve.slope_vs_L.push_back(loglog_slope(xs, ys));
  }
  for (std::size_t j = 0; j < nL; ++j) {
    std::vector<double> xs, ys;
    for (std::size_t li = 0; li < lambda_values.size(); ++li) {
      xs.push_back(lambda_values[li]);
      ys.push_back(curve.entries[li * nL + j].error);
    }
    curve.slope_vs_lambda.push_back(loglog_slope(xs, ys));
  }
  return curve;
}

nlohmann::json to_json(const ApproxResult& r) {
  return {{"coeffs", r.poly.coeffs()},  {"interval", {r.poly.interval().lo, r.poly.interval().hi}},
          {"sup_error", r.sup_error},   {"alternation_points", r.alternation_points},
          {"iterations", r.iterations}, {"converged", r.converged}};
}

}  // namespace minifunc
