#include "support.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mgp::oracle {

double bessel_k_quadrature(double nu, double x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double t) {
    const double e = -x * std::cosh(t) + std::fabs(nu) * t;
    // cosh(nu t) = (e^{nu t} + e^{-nu t}) / 2, kept in exponent form
    return 0.5 * (std::exp(e) + std::exp(-x * std::cosh(t) - std::fabs(nu) * t));
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

double reg_gamma_q_quadrature(double a, double x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double lg = std::lgamma(a);
  auto f = [&](double u) {
    const double t = x + u;
    return std::exp((a - 1.0) * std::log(t) - t - lg);
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

McEstimate mean_and_se(std::span<const double> xs) {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t i = 0;
  for (double x : xs) {
    ++i;
    const double d = x - mean;
    mean += d / static_cast<double>(i);
    m2 += d * (x - mean);
  }
  const double n = static_cast<double>(xs.size());
  return {mean, n > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0};
}

double batch_means_se(std::span<const double> xs, std::size_t batches) {
  const std::size_t len = xs.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    means.push_back(s / static_cast<double>(len));
  }
  return mean_and_se(means).std_error;
}

McEstimate moment_step_difference_is(double a1, double a2, double m, std::size_t n,
                                     std::uint64_t seed) {
  const double b1 = 1.5 * (a1 - m);
  const double b2 = 1.5 * (a2 - m);
  // log of Ga(a,1)/Ga(b,1) density ratio at x, without the x-free part
  const double c1 = std::lgamma(b1) - std::lgamma(a1);
  const double c2 = std::lgamma(b2) - std::lgamma(a2);
  Rng rng = make_stream(seed, 0);
  std::vector<double> terms(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double d1 = draw_gamma(rng, b1, 1.0);
    const double d2 = draw_gamma(rng, b2, 1.0);
    const double f1 = std::exp(c1 + (a1 - b1 - m) * std::log(d1));  // w1 * theta_1^m
    const double f2 = std::exp(c2 + (a2 - b2 - m) * std::log(d2));  // w2 * vartheta_2^m
    terms[r] = f1 * (f2 - 1.0);
  }
  return mean_and_se(terms);
}

McEstimate theta_moment_mc(const MgpHyperparams& hp, int h, double m, std::size_t n,
                           std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  std::vector<double> xs(n);
  for (std::size_t r = 0; r < n; ++r) {
    double theta = 1.0 / draw_gamma(rng, hp.a1, 1.0);
    for (int l = 2; l <= h; ++l) theta /= draw_gamma(rng, hp.a2, 1.0);
    xs[r] = std::pow(theta, m);
  }
  return mean_and_se(xs);
}

namespace {

struct Functional {
  std::string name;
  std::function<double(const GibbsState&)> fn;
};

std::vector<Functional> tracked_functionals(const GibbsState& probe) {
  std::vector<Functional> f{
      {"lambda_11^2", [](const GibbsState& s) { return s.Lambda(0, 0) * s.Lambda(0, 0); }},
      {"lambda_12^2", [](const GibbsState& s) { return s.Lambda(0, 1) * s.Lambda(0, 1); }},
      {"sigma2_inv_1", [](const GibbsState& s) { return s.sigma2_inv(0); }},
      {"phi_11", [](const GibbsState& s) { return s.Phi(0, 0); }},
      {"tau_1", [](const GibbsState& s) { return s.tau(0); }},
      {"omega_11", [](const GibbsState& s) { return s.omega()(0, 0); }},
      {"eta_11^2", [](const GibbsState& s) { return s.Eta(0, 0) * s.Eta(0, 0); }},
  };
  if (probe.tau.size() > 1) {
    f.push_back({"tau_2", [](const GibbsState& s) { return s.tau(1); }});
  }
  if (probe.Lambda.rows() > 1) {
    f.push_back({"omega_21", [](const GibbsState& s) { return s.omega()(1, 0); }});
  }
  return f;
}

}  // namespace

std::vector<GewekeRow> geweke_test(const FactorModelConfig& cfg, ColumnPrior prior,
                                   std::size_t marginal_draws, std::size_t successive_steps,
                                   std::uint64_t seed) {
  Rng marginal_rng = make_stream(seed, 0);
  Rng successive_rng = make_stream(seed, 1);

  GibbsState state = sample_prior_state(cfg, prior, successive_rng);
  const auto functionals = tracked_functionals(state);
  const std::size_t nf = functionals.size();

  std::vector<std::vector<double>> marginal(nf, std::vector<double>(marginal_draws));
  for (std::size_t r = 0; r < marginal_draws; ++r) {
    const GibbsState s = sample_prior_state(cfg, prior, marginal_rng);
    for (std::size_t f = 0; f < nf; ++f) marginal[f][r] = functionals[f].fn(s);
  }

  std::vector<std::vector<double>> successive(nf, std::vector<double>(successive_steps));
  Eigen::MatrixXd Y = simulate_data_given_state(state, successive_rng);
  for (std::size_t t = 0; t < successive_steps; ++t) {
    gibbs_step(state, Y, cfg, prior, successive_rng);
    Y = simulate_data_given_state(state, successive_rng);
    for (std::size_t f = 0; f < nf; ++f) successive[f][t] = functionals[f].fn(state);
  }

  std::vector<GewekeRow> rows;
  for (std::size_t f = 0; f < nf; ++f) {
    GewekeRow row;
    row.name = functionals[f].name;
    row.marginal = mean_and_se(marginal[f]);
    row.successive = {mean_and_se(successive[f]).mean, batch_means_se(successive[f])};
    row.z = (row.successive.mean - row.marginal.mean) /
            std::hypot(row.marginal.std_error, row.successive.std_error);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mgp::oracle
