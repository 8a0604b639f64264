#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mgp/prior.hpp"
#include "support.hpp"

using namespace mgp;

TEST(Hyperparams, Validation) {
  EXPECT_NO_THROW((MgpHyperparams{2, 3, 5, 3}.validate()));
  EXPECT_THROW((MgpHyperparams{0, 3, 5, 3}.validate()), DomainError);
  EXPECT_THROW((MgpHyperparams{2, -1, 5, 3}.validate()), DomainError);
  EXPECT_THROW((MgpHyperparams{2, 3, 0, 3}.validate()), DomainError);
  EXPECT_THROW((MgpHyperparams{2, std::nan(""), 5, 3}.validate()), DomainError);
}

TEST(Moments, ExactValues) {
  EXPECT_NEAR(theta_moment(3, 1.0, {2, 3, 5, 3}), 0.25, 1e-14);
  EXPECT_NEAR(theta_moment(1, 1.0, {2, 3, 5, 3}), 1.0, 1e-14);
  EXPECT_NEAR(inv_gamma_moment(3.0, 2.0), 0.5, 1e-14);
  EXPECT_NEAR(tau_mean(1, {2, 3, 5, 3}), 2.0, 1e-14);
  EXPECT_NEAR(tau_mean(4, {2, 3, 5, 3}), 54.0, 1e-12);
}

TEST(Moments, InfiniteMomentsAreReported) {
  EXPECT_THROW(inv_gamma_moment(1.0, 1.0), MomentNotFinite);
  EXPECT_THROW(theta_moment(2, 1.0, {2, 1, 5, 3}), MomentNotFinite);
  EXPECT_THROW(theta_moment(1, 1.5, {1, 3, 5, 3}), MomentNotFinite);
  EXPECT_THROW(inv_gamma_moment(2.0, 0.0), DomainError);
}

TEST(Moments, MeanCanRiseWhileTauMeanRises) {
  // a2 slightly above 1: E(tau_h) grows with h and so does E(theta_h).
  const MgpHyperparams hp{1.5, 1.1, 4, 3};
  for (int h = 1; h < 4; ++h) {
    EXPECT_GT(tau_mean(h + 1, hp), tau_mean(h, hp));
    EXPECT_GT(theta_moment(h + 1, 1.0, hp), theta_moment(h, 1.0, hp));
  }
}

TEST(Moments, AgreeWithMonteCarlo) {
  struct Case {
    MgpHyperparams hp;
    int h;
    double m;
  };
  const Case cases[] = {{{2, 3, 4, 3}, 3, 0.5}, {{4, 4, 4, 3}, 2, 1.0}, {{3, 5, 4, 3}, 4, 0.7}};
  std::uint64_t seed = 11;
  for (const auto& c : cases) {
    const auto mc = oracle::theta_moment_mc(c.hp, c.h, c.m, 400000, seed++);
    EXPECT_NEAR(mc.mean, theta_moment(c.h, c.m, c.hp), 4.0 * mc.std_error);
  }
}

TEST(Sampling, VariancePathIsReciprocalOfPrecisionPath) {
  const MgpHyperparams hp{2, 3, 6, 3};
  Rng r1 = make_stream(5, 0);
  Rng r2 = make_stream(5, 0);
  for (int i = 0; i < 100; ++i) {
    const auto prec = sample_precision_path(hp, r1);
    const auto var = sample_variance_path(hp, r2);
    const auto conv = to_variance_path(prec);
    for (int h = 0; h < hp.k; ++h) {
      EXPECT_NEAR(var.theta[h] * prec.tau[h], 1.0, 1e-13);
      EXPECT_DOUBLE_EQ(conv.theta[h], 1.0 / prec.tau[h]);
      if (h > 0) EXPECT_NEAR(var.theta[h], var.theta[h - 1] * var.vartheta[h], 1e-12 * var.theta[h]);
    }
  }
}

TEST(Sampling, EnsembleDoesNotDependOnWorkerCount) {
  const MgpHyperparams hp{1, 1.1, 3, 3};
  const std::size_t n = 3 * kChunkSize + 17;
  const auto one = sample_variance_paths(hp, n, 99, 1);
  const auto three = sample_variance_paths(hp, n, 99, 3);
  for (int h = 1; h <= 3; ++h) {
    EXPECT_TRUE(std::equal(one.theta(h).begin(), one.theta(h).end(), three.theta(h).begin()));
  }
}

TEST(Sampling, SeedChangesDraws) {
  const MgpHyperparams hp{1, 1.1, 2, 3};
  const auto a = sample_variance_paths(hp, 10, 1, 1);
  const auto b = sample_variance_paths(hp, 10, 2, 1);
  EXPECT_NE(a.theta(1)[0], b.theta(1)[0]);
}

TEST(Sampling, IncrementsAreIndependentOfPreviousColumn) {
  // theta_{h+1} / theta_h should be uncorrelated with theta_h on the log scale.
  const MgpHyperparams hp{2, 3, 3, 3};
  const auto paths = sample_variance_paths(hp, 200000, 3, 1);
  std::vector<double> x, y;
  for (std::size_t r = 0; r < paths.size(); ++r) {
    x.push_back(std::log(paths.theta(2)[r]));
    y.push_back(std::log(paths.theta(3)[r] / paths.theta(2)[r]));
  }
  const auto mx = oracle::mean_and_se(x).mean;
  const auto my = oracle::mean_and_se(y).mean;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_LT(std::fabs(sxy / std::sqrt(sxx * syy)), 4.0 / std::sqrt(static_cast<double>(x.size())));
}

TEST(Sampling, LoadingVarianceMatchesPrecision) {
  Rng rng = make_stream(8, 0);
  std::vector<double> sq;
  for (int i = 0; i < 200000; ++i) {
    const double l = sample_loading(2.0, 4.0, rng).lambda;
    sq.push_back(l * l);
  }
  const auto est = oracle::mean_and_se(sq);
  EXPECT_NEAR(est.mean, 1.0 / 8.0, 4.0 * est.std_error);
}

namespace {

double inv_gamma_pdf(double a, double b, double t) { return std::exp(inv_gamma_log_pdf(a, b, t)); }

// Mass of a density over (0, inf), substituting t = e^u.
double total_mass(const std::function<double(double)>& f) {
  return oracle::integrate([&](double u) { return f(std::exp(u)) * std::exp(u); }, -30.0, 30.0);
}

}  // namespace

TEST(Densities, TwoStepConditionalMatchesMixtureIntegral) {
  for (double a2 : {0.5, 1.0, 2.5}) {
    for (double b : {0.1, 1.0, 10.0}) {
      for (double t : {0.01, 0.3, 2.0, 50.0}) {
        // int f_{Inv-Ga(a2, s)}(t) f_{Inv-Ga(a2, b)}(s) ds over s = e^u
        const double ref = oracle::integrate(
            [&](double u) {
              const double s = std::exp(u);
              return inv_gamma_pdf(a2, s, t) * inv_gamma_pdf(a2, b, s) * s;
            },
            -40.0, 40.0);
        EXPECT_NEAR(two_step_conditional_density(t, b, a2) / ref, 1.0, 1e-7)
            << "a2=" << a2 << " b=" << b << " t=" << t;
      }
    }
  }
}

TEST(Densities, MarginalMatchesMixtureIntegral) {
  for (double a1 : {0.5, 1.0, 3.0}) {
    for (double a2 : {0.5, 1.1, 2.0}) {
      const MgpHyperparams hp{a1, a2, 2, 3};
      for (double t : {0.02, 0.5, 3.0, 40.0}) {
        const double ref = oracle::integrate(
            [&](double u) {
              const double s = std::exp(u);
              return inv_gamma_pdf(a2, s, t) * inv_gamma_pdf(a1, 1.0, s) * s;
            },
            -40.0, 40.0);
        EXPECT_NEAR(theta2_marginal_density(t, hp) / ref, 1.0, 1e-7)
            << "a1=" << a1 << " a2=" << a2 << " t=" << t;
      }
    }
  }
}

TEST(Densities, IntegrateToOne) {
  const MgpHyperparams hp{2, 3, 2, 3};
  EXPECT_NEAR(total_mass([&](double t) { return theta2_marginal_density(t, hp); }), 1.0, 1e-8);
  EXPECT_NEAR(total_mass([&](double t) { return two_step_conditional_density(t, 0.5, 1.7); }), 1.0,
              1e-8);
}

TEST(Densities, MarginalCdfMatchesSampler) {
  const MgpHyperparams hp{1, 1.1, 2, 3};
  const auto paths = sample_variance_paths(hp, 400000, 21, 1);
  std::vector<double> s(paths.theta(2).begin(), paths.theta(2).end());
  std::sort(s.begin(), s.end());
  double worst = 0.0;
  for (double t : {0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double cdf = oracle::integrate(
        [&](double u) { return theta2_marginal_density(std::exp(u), hp) * std::exp(u); }, -30.0,
        std::log(t));
    const double emp =
        static_cast<double>(std::upper_bound(s.begin(), s.end(), t) - s.begin()) / s.size();
    worst = std::max(worst, std::fabs(cdf - emp));
  }
  EXPECT_LT(worst, 0.01);
}

TEST(Densities, UnderflowIsClean) {
  const MgpHyperparams hp{3, 3, 2, 3};
  EXPECT_EQ(theta2_marginal_density(1e-9, hp), 0.0);
  EXPECT_TRUE(std::isfinite(log_theta2_marginal_density(1e-9, hp)));
  EXPECT_TRUE(std::isfinite(log_two_step_conditional_density(1e-9, 1.0, 3.0)));
}

TEST(Witness, SatisfiesMomentOrder) {
  for (double a : {1.1, 1.5, 2.0, 3.0}) {
    const MgpHyperparams hp{a, a, 3, 3};
    const double m = moment_order_witness(hp);
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, a);
    EXPECT_GT(std::tgamma(a - m), std::tgamma(a));
    EXPECT_GT(moment_step_difference(1, m, hp), 0.0);
    EXPECT_GT(moment_step_difference(2, m, hp), 0.0);
  }
}

TEST(Witness, HoldsWhenFirstShapeIsLarger) {
  const MgpHyperparams hp{5, 2, 3, 3};
  const double m = moment_order_witness(hp);
  EXPECT_GT(moment_step_difference(1, m, hp), 0.0);
}

TEST(Witness, ImportanceSampledDifferenceAgrees) {
  const MgpHyperparams hp{2, 2, 2, 3};
  const double m = moment_order_witness(hp);
  const auto est = oracle::moment_step_difference_is(2, 2, m, 400000, 4);
  EXPECT_NEAR(est.mean, moment_step_difference(1, m, hp), 4.0 * est.std_error);
  EXPECT_GT(est.mean, 3.0 * est.std_error);
}

TEST(Witness, PreconditionEnforced) {
  EXPECT_THROW(moment_order_witness({1, 2, 3, 3}), DomainError);
  EXPECT_THROW(moment_order_witness({1, 1, 3, 3}), DomainError);
}

TEST(SupportProbe, HitsNearbyTargets) {
  const MgpHyperparams hp{3, 3, 3, 3};
  const double targets[] = {0.5, 0.25, 0.12};
  const double f = full_support_probe(targets, 0.3, 200000, hp, 1, 1);
  EXPECT_GT(f, 0.0);
  EXPECT_LT(f, 1.0);
  EXPECT_EQ(f, full_support_probe(targets, 0.3, 200000, hp, 1, 2));
}

TEST(SupportProbe, ShrinkingBoxLowersFrequency) {
  const MgpHyperparams hp{3, 3, 3, 3};
  const double targets[] = {0.5, 0.25, 0.12};
  EXPECT_GE(full_support_probe(targets, 0.6, 100000, hp, 1, 1),
            full_support_probe(targets, 0.2, 100000, hp, 1, 1));
}

TEST(SupportProbe, ValidatesArguments) {
  const MgpHyperparams hp{3, 3, 3, 3};
  const double wrong_length[] = {0.5, 0.25};
  EXPECT_THROW(full_support_probe(wrong_length, 0.3, 10, hp, 1, 1), DomainError);
  const double targets[] = {0.5, 0.25, 0.1};
  EXPECT_THROW(full_support_probe(targets, 0.0, 10, hp, 1, 1), DomainError);
}
