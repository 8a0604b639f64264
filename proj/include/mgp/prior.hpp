#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mgp/specfun.hpp"
#include "mgp/streams.hpp"

namespace mgp {

/// Raised when E(X^m) does not exist for the requested exponent.
class MomentNotFinite : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Knobs of the multiplicative gamma process.
///
/// The first column increment is Ga(a1, 1), later increments Ga(a2, 1);
/// `upsilon` is the degrees of freedom of the local precisions.
struct MgpHyperparams {
  double a1 = 2.0;
  double a2 = 3.0;
  int k = 5;
  double upsilon = 3.0;

  void validate() const;
};

/// tau_h = delta_1 * ... * delta_h
struct PrecisionPath {
  std::vector<double> tau;
  std::vector<double> delta;
};

/// theta_h = vartheta_1 * ... * vartheta_h = 1 / tau_h
struct VariancePath {
  std::vector<double> theta;
  std::vector<double> vartheta;
};

struct LoadingDraw {
  double lambda;
  double phi;
  double tau;
};

PrecisionPath sample_precision_path(const MgpHyperparams& hp, Rng& rng);

/// Draws the increments as Ga variates and inverts them, so for equal
/// stream state this is exactly the elementwise reciprocal of
/// sample_precision_path.
VariancePath sample_variance_path(const MgpHyperparams& hp, Rng& rng);

VariancePath to_variance_path(const PrecisionPath& path);

/// lambda ~ N(0, 1 / (phi * tau))
LoadingDraw sample_loading(double phi, double tau, Rng& rng);

/// Column-major bundle of n sampled variance paths; theta(h) is the
/// contiguous sample of theta_h across paths.
class PathEnsemble {
 public:
  PathEnsemble(int k, std::size_t n);

  int k() const noexcept { return k_; }
  std::size_t size() const noexcept { return n_; }

  /// h is 1-based, 1 <= h <= k.
  std::span<const double> theta(int h) const;
  std::span<double> theta(int h);

 private:
  int k_;
  std::size_t n_;
  std::vector<double> theta_;
};

/// n independent variance paths, chunk-seeded from `seed`.
PathEnsemble sample_variance_paths(const MgpHyperparams& hp, std::size_t n, std::uint64_t seed,
                                   unsigned workers = worker_count());

/// E(vartheta^m) = Gamma(a - m) / Gamma(a) for vartheta ~ Inv-Ga(a, 1), 0 < m < a.
double inv_gamma_moment(double a, double m);

/// E(theta_h^m), the product of one Inv-Ga(a1, 1) and h - 1 Inv-Ga(a2, 1) moments.
double theta_moment(int h, double m, const MgpHyperparams& hp);

/// E(tau_h) = a1 * a2^(h - 1)
double tau_mean(int h, const MgpHyperparams& hp);

/// Density of theta_{h+1} given theta_{h-1}, two Inv-Ga(a2) steps apart:
///   2 b^a2 / Gamma(a2)^2 * theta^(-a2-1) * K_0(2 sqrt(b / theta)),  b = theta_{h-1}.
double log_two_step_conditional_density(double theta, double theta_prev2, double a2);
double two_step_conditional_density(double theta, double theta_prev2, double a2);

/// Marginal density of theta_2 = vartheta_1 * vartheta_2:
///   2 theta^(-a1-1) theta^((a1-a2)/2) / (Gamma(a1) Gamma(a2)) * K_{a1-a2}(2 / sqrt(theta)).
double log_theta2_marginal_density(double theta, const MgpHyperparams& hp);
double theta2_marginal_density(double theta, const MgpHyperparams& hp);

/// Exponent m* in (0, a2) with Gamma(a2 - m*) > Gamma(a2). For a1 >= a2 the
/// power function theta^m* then has E(theta_{h+1}^m*) > E(theta_h^m*) at
/// every h, so the theta_h cannot be stochastically decreasing.
///
/// Bisects for the lower edge m0 of the feasible set {m : Gamma(a2 - m) > Gamma(a2)}
/// and returns the midpoint of (m0, a2).
double moment_order_witness(const MgpHyperparams& hp);

/// E(theta_{h+1}^m) - E(theta_h^m) from the moment formula.
double moment_step_difference(int h, double m, const MgpHyperparams& hp);

/// Fraction of n sampled paths that land in the box
/// |theta_h - target_h| < eps / k for every h.
double full_support_probe(std::span<const double> target, double eps, std::size_t n,
                          const MgpHyperparams& hp, std::uint64_t seed,
                          unsigned workers = worker_count());

}  // namespace mgp
