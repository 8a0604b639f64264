#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the library routine it is meant to
// check.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mgp/factor_model.hpp"

namespace mgp::oracle {

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by exp-sinh quadrature.
double bessel_k_quadrature(double nu, double x);

/// Q(a, x) = int_x^inf t^(a-1) e^-t dt / Gamma(a) by quadrature.
double reg_gamma_q_quadrature(double a, double x);

/// int_lo^hi f(t) dt for a density given as a callable, adaptive Gauss-Kronrod.
double integrate(const std::function<double(double)>& f, double lo, double hi);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

McEstimate mean_and_se(std::span<const double> xs);

/// Standard error by non-overlapping batch means.
double batch_means_se(std::span<const double> xs, std::size_t batches = 50);

/// E(theta_2^m) - E(theta_1^m) by importance sampling the gamma increments.
///
/// delta_i is drawn from Ga(b_i, 1) with b_i = 1.5 (a_i - m) instead of
/// Ga(a_i, 1). The weighted integrand then has finite variance even where
/// theta^m itself has none.
McEstimate moment_step_difference_is(double a1, double a2, double m, std::size_t n,
                                     std::uint64_t seed);

/// E(theta_h^m) by plain Monte Carlo over prior draws.
McEstimate theta_moment_mc(const MgpHyperparams& hp, int h, double m, std::size_t n,
                           std::uint64_t seed);

/// One functional compared between the marginal-conditional and
/// successive-conditional simulators of the joint (parameters, data) law.
struct GewekeRow {
  std::string name;
  McEstimate marginal;
  McEstimate successive;
  double z = 0.0;
};

/// Runs both simulators and reports z-scores per tracked functional.
std::vector<GewekeRow> geweke_test(const FactorModelConfig& cfg, ColumnPrior prior,
                                   std::size_t marginal_draws, std::size_t successive_steps,
                                   std::uint64_t seed);

}  // namespace mgp::oracle
