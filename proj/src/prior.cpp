#include "mgp/prior.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgp {

namespace {

// Densities below exp(-700) are reported as exactly zero.
constexpr double kLogUnderflow = -700.0;

void check_h(int h, const char* fn) {
  if (h < 1) throw DomainError(std::string(fn) + ": column index must be >= 1");
}

double draw_increment(const MgpHyperparams& hp, int column, Rng& rng) {
  const double shape = column == 0 ? hp.a1 : hp.a2;
  double d = draw_gamma(rng, shape, 1.0);
  // Ga variates with small shape can underflow to 0; keep the chain positive.
  if (d < std::numeric_limits<double>::min()) d = std::numeric_limits<double>::min();
  return d;
}

}  // namespace

void MgpHyperparams::validate() const {
  auto bad = [](double v) { return !(v > 0.0) || !std::isfinite(v); };
  if (bad(a1)) throw DomainError("hyperparameter a1 must be finite and > 0");
  if (bad(a2)) throw DomainError("hyperparameter a2 must be finite and > 0");
  if (k < 1) throw DomainError("truncation k must be >= 1");
  if (bad(upsilon)) throw DomainError("hyperparameter upsilon must be finite and > 0");
}

PrecisionPath sample_precision_path(const MgpHyperparams& hp, Rng& rng) {
  hp.validate();
  PrecisionPath path;
  path.tau.resize(hp.k);
  path.delta.resize(hp.k);
  double running = 1.0;
  for (int h = 0; h < hp.k; ++h) {
    path.delta[h] = draw_increment(hp, h, rng);
    running *= path.delta[h];
    path.tau[h] = running;
  }
  return path;
}

VariancePath sample_variance_path(const MgpHyperparams& hp, Rng& rng) {
  hp.validate();
  VariancePath path;
  path.theta.resize(hp.k);
  path.vartheta.resize(hp.k);
  double tau = 1.0;
  for (int h = 0; h < hp.k; ++h) {
    const double delta = draw_increment(hp, h, rng);
    tau *= delta;
    path.vartheta[h] = 1.0 / delta;
    path.theta[h] = 1.0 / tau;
  }
  return path;
}

VariancePath to_variance_path(const PrecisionPath& path) {
  VariancePath out;
  out.theta.reserve(path.tau.size());
  out.vartheta.reserve(path.delta.size());
  for (double t : path.tau) out.theta.push_back(1.0 / t);
  for (double d : path.delta) out.vartheta.push_back(1.0 / d);
  return out;
}

LoadingDraw sample_loading(double phi, double tau, Rng& rng) {
  PositiveReal{phi};
  PositiveReal{tau};
  return {draw_normal(rng) / std::sqrt(phi * tau), phi, tau};
}

PathEnsemble::PathEnsemble(int k, std::size_t n)
    : k_(k), n_(n), theta_(static_cast<std::size_t>(k) * n) {
  if (k < 1) throw DomainError("PathEnsemble: k must be >= 1");
}

std::span<const double> PathEnsemble::theta(int h) const {
  if (h < 1 || h > k_) throw DomainError("PathEnsemble: column index out of range");
  return {theta_.data() + static_cast<std::size_t>(h - 1) * n_, n_};
}

std::span<double> PathEnsemble::theta(int h) {
  if (h < 1 || h > k_) throw DomainError("PathEnsemble: column index out of range");
  return {theta_.data() + static_cast<std::size_t>(h - 1) * n_, n_};
}

PathEnsemble sample_variance_paths(const MgpHyperparams& hp, std::size_t n, std::uint64_t seed,
                                   unsigned workers) {
  hp.validate();
  PathEnsemble paths(hp.k, n);
  std::vector<std::span<double>> cols;
  for (int h = 1; h <= hp.k; ++h) cols.push_back(paths.theta(h));
  for_each_chunk(n, seed, workers, [&](std::size_t, std::size_t begin, std::size_t end, Rng& rng) {
    for (std::size_t r = begin; r < end; ++r) {
      double tau = 1.0;
      for (int h = 0; h < hp.k; ++h) {
        tau *= draw_increment(hp, h, rng);
        cols[h][r] = 1.0 / tau;
      }
    }
  });
  return paths;
}

double inv_gamma_moment(double a, double m) {
  PositiveReal{a};
  if (!(m > 0.0)) throw DomainError("inv_gamma_moment: exponent m must be > 0");
  if (m >= a) {
    throw MomentNotFinite("inv_gamma_moment: E(X^m) is infinite for m >= a (m=" +
                          std::to_string(m) + ", a=" + std::to_string(a) + ")");
  }
  return std::exp(log_gamma(a - m) - log_gamma(a));
}

double theta_moment(int h, double m, const MgpHyperparams& hp) {
  check_h(h, "theta_moment");
  hp.validate();
  const double first = std::log(inv_gamma_moment(hp.a1, m));
  const double rest = h > 1 ? (h - 1) * std::log(inv_gamma_moment(hp.a2, m)) : 0.0;
  return std::exp(first + rest);
}

double tau_mean(int h, const MgpHyperparams& hp) {
  check_h(h, "tau_mean");
  return hp.a1 * std::pow(hp.a2, h - 1);
}

double log_two_step_conditional_density(double theta, double theta_prev2, double a2) {
  PositiveReal{theta};
  PositiveReal{theta_prev2};
  PositiveReal{a2};
  return std::numbers::ln2 + a2 * std::log(theta_prev2) - 2.0 * log_gamma(a2) -
         (a2 + 1.0) * std::log(theta) + log_bessel_k(0.0, 2.0 * std::sqrt(theta_prev2 / theta));
}

double two_step_conditional_density(double theta, double theta_prev2, double a2) {
  const double lf = log_two_step_conditional_density(theta, theta_prev2, a2);
  return lf < kLogUnderflow ? 0.0 : std::exp(lf);
}

double log_theta2_marginal_density(double theta, const MgpHyperparams& hp) {
  PositiveReal{theta};
  hp.validate();
  const double lt = std::log(theta);
  return std::numbers::ln2 - (hp.a1 + 1.0) * lt + 0.5 * (hp.a1 - hp.a2) * lt -
         log_gamma(hp.a1) - log_gamma(hp.a2) +
         log_bessel_k(hp.a1 - hp.a2, 2.0 / std::sqrt(theta));
}

double theta2_marginal_density(double theta, const MgpHyperparams& hp) {
  const double lf = log_theta2_marginal_density(theta, hp);
  return lf < kLogUnderflow ? 0.0 : std::exp(lf);
}

double moment_order_witness(const MgpHyperparams& hp) {
  hp.validate();
  const double a2 = hp.a2;
  if (hp.a1 < a2 || a2 <= 1.0) {
    throw DomainError("moment_order_witness: requires a1 >= a2 > 1");
  }
  const double log_gamma_a2 = log_gamma(a2);
  auto feasible = [&](double m) { return log_gamma(a2 - m) > log_gamma_a2; };

  // Gamma diverges at 0+, so m just below a2 is always feasible.
  double hi = a2 * (1.0 - 1e-9);
  if (!feasible(hi)) throw std::runtime_error("moment_order_witness: search failed");
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * a2; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  const double m = 0.5 * (hi + a2);
  if (!(m > 0.0 && m < a2) || !feasible(m)) {
    throw std::runtime_error("moment_order_witness: search failed");
  }
  return m;
}

double moment_step_difference(int h, double m, const MgpHyperparams& hp) {
  return theta_moment(h + 1, m, hp) - theta_moment(h, m, hp);
}

double full_support_probe(std::span<const double> target, double eps, std::size_t n,
                          const MgpHyperparams& hp, std::uint64_t seed, unsigned workers) {
  if (!(eps > 0.0)) throw DomainError("full_support_probe: eps must be > 0");
  if (target.size() != static_cast<std::size_t>(hp.k)) {
    throw DomainError("full_support_probe: target length must equal k");
  }
  for (double t : target) PositiveReal{t};
  if (n == 0) return 0.0;
  hp.validate();
  const double radius = eps / hp.k;
  std::atomic<std::size_t> hits{0};
  for_each_chunk(n, seed, workers, [&](std::size_t, std::size_t begin, std::size_t end, Rng& rng) {
    std::size_t local = 0;
    for (std::size_t r = begin; r < end; ++r) {
      double tau = 1.0;
      bool inside = true;
      // Draw the whole path even after leaving the box so the stream layout
      // does not depend on the target.
      for (int h = 0; h < hp.k; ++h) {
        tau *= draw_increment(hp, h, rng);
        inside = inside && std::fabs(1.0 / tau - target[h]) < radius;
      }
      local += inside ? 1 : 0;
    }
    hits += local;
  });
  return static_cast<double>(hits.load()) / static_cast<double>(n);
}

}  // namespace mgp
