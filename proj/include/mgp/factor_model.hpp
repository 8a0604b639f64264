#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgp/prior.hpp"
#include "mgp/streams.hpp"

namespace mgp {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column-precision prior used by the sampler.
enum class ColumnPrior {
  multiplicative_gamma,  // tau_h = prod_{l<=h} delta_l
  independent_gamma,     // tau_h ~ Ga(2, 2) independently (no shrinkage baseline)
};

inline constexpr double kBaselineShape = 2.0;
inline constexpr double kBaselineRate = 2.0;

struct FactorModelConfig {
  int p = 10;
  int n = 100;
  int k0 = 2;
  int k_trunc = 10;
  MgpHyperparams hp{2.0, 3.0, 10, 3.0};  // hp.k is ignored; k_trunc is the truncation
  double a_sigma = 1.0;
  double b_sigma = 0.3;
  int iterations = 35000;  // total sweeps, burn-in included
  int burnin = 5000;
  std::uint64_t seed = 1;

  void validate() const;
  int retained() const noexcept { return iterations - burnin; }
};

struct SyntheticDataset {
  Eigen::MatrixXd Y;        // n x p
  Eigen::MatrixXd Lambda0;  // p x k0
  Eigen::MatrixXd Omega0;   // Lambda0 Lambda0' + I
};

/// Lambda0 entries iid N(0, 1); rows of Y iid N_p(0, Lambda0 Lambda0' + I).
SyntheticDataset simulate_dataset(int p, int n, int k0, std::uint64_t seed);

struct GibbsState {
  Eigen::MatrixXd Lambda;      // p x k
  Eigen::MatrixXd Eta;         // n x k
  Eigen::VectorXd sigma2_inv;  // p
  Eigen::MatrixXd Phi;         // p x k
  Eigen::VectorXd delta;       // k
  Eigen::VectorXd tau;         // k, cumulative products of delta

  /// Lambda Lambda' + diag(1 / sigma2_inv)
  Eigen::MatrixXd omega() const;
};

/// Lambda = 0, unit precisions, Eta ~ N(0, I).
GibbsState initial_state(const FactorModelConfig& cfg, Rng& rng);

/// One draw of every parameter from the prior.
GibbsState sample_prior_state(const FactorModelConfig& cfg, ColumnPrior prior, Rng& rng);

/// y_i = Lambda eta_i + e_i,  e_i ~ N(0, diag(1 / sigma2_inv)).
Eigen::MatrixXd simulate_data_given_state(const GibbsState& state, Rng& rng);

/// One sweep of conjugate updates in order: factors, loading rows, residual
/// precisions, local precisions, column precisions.
void gibbs_step(GibbsState& state, const Eigen::MatrixXd& Y, const FactorModelConfig& cfg,
                ColumnPrior prior, Rng& rng);

struct ConcentrationReport {
  std::string label;
  ColumnPrior prior = ColumnPrior::multiplicative_gamma;
  FactorModelConfig config;
  Eigen::MatrixXd d;           // p x p, lower triangle holds d_js, upper is 0
  Eigen::MatrixXd omega_mean;  // posterior mean of Omega
  Eigen::MatrixXd omega_true;  // Omega0 of the dataset the chain ran on
  double median_d = 0.0;
  int retained = 0;
  double ess_omega11 = 0.0;
  double ess_omega21 = 0.0;
  bool jensen_holds = true;
};

/// Called with each retained state and its Omega.
using SweepObserver = std::function<void(const GibbsState&, const Eigen::MatrixXd&)>;

ConcentrationReport run_chain(const FactorModelConfig& cfg, const SyntheticDataset& data,
                              ColumnPrior prior = ColumnPrior::multiplicative_gamma,
                              const SweepObserver& observer = {});

ConcentrationReport run_baseline_chain(const FactorModelConfig& cfg, const SyntheticDataset& data,
                                       const SweepObserver& observer = {});

/// Median of the lower triangle (diagonal included).
double lower_triangle_median(const Eigen::MatrixXd& m);

/// Geyer initial-monotone-sequence effective sample size.
double effective_sample_size(std::span<const double> trace);

std::string setting_label(const MgpHyperparams& hp, ColumnPrior prior);

struct PriorSetting {
  std::string label;
  MgpHyperparams hp;
  ColumnPrior prior = ColumnPrior::multiplicative_gamma;
};

struct ComparisonCell {
  int setting = 0;
  int k0 = 0;
  int replicate = 0;
  ConcentrationReport report;
};

struct BestCounts {
  int k0 = 0;
  int replicate = -1;           // -1 for the replicate average
  std::vector<double> counts;   // per setting, entries of Omega won
};

struct SettingsComparison {
  std::vector<PriorSetting> settings;
  std::vector<int> k0_values;
  int replicates = 1;
  std::vector<ComparisonCell> cells;
  std::vector<BestCounts> best_counts;

  const ConcentrationReport& report(int setting, int k0, int replicate) const;
  /// Median over replicates of each replicate's median d.
  double median_of_medians(int setting, int k0) const;
};

/// Winner per entry of Omega; ties go to the lowest setting index.
std::vector<int> best_counts(std::span<const ConcentrationReport* const> reports);

/// Runs every (setting, k0, replicate) chain. Replicate r of a given k0 uses
/// one dataset shared by all settings. base.k0 and base.seed are overridden.
SettingsComparison compare_settings(const std::vector<PriorSetting>& settings,
                                    const std::vector<int>& k0_values, int replicates,
                                    const FactorModelConfig& base, std::uint64_t seed,
                                    unsigned workers = worker_count());

}  // namespace mgp
