#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minifunc/functional.hpp"
#include "minifunc/poly_approx.hpp"

namespace minifunc {

enum class DivergenceKind { KL, Chi2, Hellinger, TV };

/// Standard f-divergences between two distributions of equal dimension.
///   KL(P,Q)   = sum p ln(p/q)
///   chi2(P,Q) = sum (p - q)^2 / q
///   H^2(P,Q)  = 2 sum (sqrt p - sqrt q)^2   (ranges over [0, 4])
///   TV(P,Q)   = 1/2 sum |p - q|
/// KL and chi2 throw InputError when some q_i = 0 < p_i.
double divergence(const ProbabilityVector& P, const ProbabilityVector& Q, DivergenceKind kind);

/// P = (1-p, p/(k-1), ..., p/(k-1)) and Q likewise with q.
struct TwoPointPair {
  ProbabilityVector P;
  ProbabilityVector Q;
  double p = 0.0;
  double q = 0.0;
  double kl_bound = 0.0;   // (p - q)^2 / (2 p (1 - p))
  double theta_gap = 0.0;  // theta(P) - theta(Q)
};

/// Throws ConfigError unless k >= 2 and p, q lie in (0, 1).
TwoPointPair two_point_pair(const Functional& phi, std::size_t k, double p, double q);

/// P = (b/(k-1), ..., b/(k-1), 1-b), Q the same with b + delta. TV(P,Q) = delta.
std::pair<ProbabilityVector, ProbabilityVector> shift_pair(std::size_t k, double beta,
                                                           double delta);

/// 1/4 (theta(P) - theta(Q))^2 exp(-n KL(P,Q)).
double le_cam_bound(const ProbabilityVector& P, const ProbabilityVector& Q, const Functional& phi,
                    double n);

/// 1/2 (theta(P) - theta(Q))^2 (1 - sqrt(1 - (1 - H^2/4)^(2n))).
double hellinger_le_cam_bound(const ProbabilityVector& P, const ProbabilityVector& Q,
                              const Functional& phi, double n);

/// Two discrete probability measures on a common support whose first
/// matched_orders moments agree.
struct MeasurePair {
  std::vector<double> support;
  std::vector<double> w0;
  std::vector<double> w1;
  int matched_orders = 0;
  double gap = 0.0;  // E_w0[phi] - E_w1[phi]
  Interval interval;
  double reference_gap = 0.0;      // twice the Remez error (times the tilt factor)
  double relative_mismatch = 0.0;  // |gap - reference_gap| / reference_gap, 0 if undefined
  std::vector<std::string> warnings;

  /// max_{1<=m<=matched_orders} |sum (w0 - w1) x^m|
  double max_moment_mismatch() const;
};

/// LP for max E_w0[f] - E_w1[f] over weight pairs on a Chebyshev-spaced grid
/// of I with moments 1..L equal. The result keeps only grid points carrying
/// mass. Throws ConfigError for L < 1 or grid_size < 50 (L + 2), and
/// NumericalError when the LP solver fails.
MeasurePair moment_matched_pair(const RealFn& f, int L, Interval I, int grid_size);
MeasurePair moment_matched_pair(const Functional& phi, int L, Interval I, int grid_size);

/// Measures on [0, 1/(eta gamma)] with first moment gamma, moments 2..L+1
/// equal and gap 2 gamma E_L(phi*, [gamma, gamma/eta]), phi*(x) = phi(x)/x.
/// Built from a matched pair for phi* on [gamma, gamma/eta] reweighted by
/// gamma/u with the leftover mass at 0. Requires 0 < gamma <= eta < 1 and
/// phi(0) = 0 (ConfigError otherwise).
MeasurePair tilted_pair(const Functional& phi, int L, double gamma, double eta, int grid_size = 0);

struct PoissonMixtureTv {
  double numeric_tv = 0.0;
  double bound = 0.0;  // (2eM/L)^L, +inf unless L > 2eM
  double max_rate = 0.0;
  std::int64_t trunc = 0;
  double tail_mass = 0.0;
};

/// Default truncation point for Poisson sums at rate M: M + 12 sqrt(M) + 50.
std::int64_t default_poisson_trunc(double max_rate);

/// TV between the Poisson mixtures with rates n x / k under w0 and w1.
/// trunc defaults to default_poisson_trunc. Throws ConfigError when the
/// Poisson tail beyond trunc at the largest rate is 1e-12 or more.
PoissonMixtureTv poisson_mixture_tv(const MeasurePair& pair, double n, double k,
                                    std::optional<std::int64_t> trunc = std::nullopt);

struct LowerBoundParams {
  double n = 0.0;
  double k = 0.0;
  double lambda = 0.0;
  int L = 1;
  double d = 0.0;
  double alpha = 1.0;
  double W = 1.0;        // fitted constant of the lambda term
  double W_prime = 1.0;  // fitted constant of the remaining corrections
};

struct LowerBoundResult {
  double value = 0.0;
  int side_condition = 0;     // 1 or 2
  double approx_error = 0.0;  // E_L used to verify the side condition
  double certified_d = 0.0;   // 2 k E_L  or  2 k gamma E_L(phi*)
  double gamma = 0.0;
  std::vector<std::pair<std::string, double>> terms;

  nlohmann::json to_json() const;
};

/// Best-polynomial lower bound on the minimax risk at sample size n/2:
///   d^2/32 (7/8 - k (2 e n lambda / (L k))^L) minus the alpha-branch
/// corrections with caller-supplied W and W'. Verifies one of
///   (1) lambda <= 1/12 and 2 k E_L(phi, [0, lambda/k]) >= d
///   (2) lambda <= sqrt(k)/12, gamma = lambda/(2 L^2 k), gamma^2 lambda <= k and
///       2 k gamma E_L(phi*, [gamma, lambda/k]) >= d
/// and throws ConfigError listing both when neither holds, or when alpha is
/// outside (0, 2).
LowerBoundResult composite_lower_bound(const Functional& phi, const LowerBoundParams& params);

struct SimplexMaximum {
  double value = 0.0;
  std::vector<double> argmax;  // sorted descending
};

/// Maximum of sum_i g(p_i) over the k-simplex, searched over every
/// configuration with at most two distinct nonzero levels (plus zeros). The
/// uniform point and all vertices are included exactly.
SimplexMaximum maximize_on_simplex(const RealFn& g, std::size_t k);

}  // namespace minifunc
