#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgp/prior.hpp"

namespace mgp {

// ---------------------------------------------------------------------------
// Quantile tables

struct QuantileRow {
  int h = 1;
  std::vector<double> tau;    // quantiles of tau_h at QuantileTable::probs
  std::vector<double> theta;  // quantiles of theta_h
  double lambda_iqr = 0.0;    // Q3 - Q1 of lambda_{jh} with phi = 1
};

struct QuantileTable {
  MgpHyperparams hp;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<double> probs;
  std::vector<QuantileRow> rows;
};

/// Linear-interpolation (type 7) sample quantile. Reorders `data`.
double empirical_quantile(std::vector<double>& data, double prob);

/// Empirical quantiles of tau_h, theta_h and the loading IQR per column
/// from n prior draws.
QuantileTable estimate_quantile_table(const MgpHyperparams& hp, std::span<const double> probs,
                                      std::size_t n, std::uint64_t seed,
                                      unsigned workers = worker_count());

// ---------------------------------------------------------------------------
// CDF gap F_{theta_{h+1}}(t) - F_{theta_h}(t)
//
// Both CDFs are Rao-Blackwellized through the Markov step
// theta_{h+1} | theta_h ~ Inv-Ga(a2, theta_h):
//   h = 1:  mean_r Q(a2, theta_1^r / t) - Q(a1, 1 / t)
//   h >= 2: mean_r Q(a2, theta_h^r / t) - mean_r Q(a2, theta_{h-1}^r / t)

struct GapEstimate {
  double gap = 0.0;
  double std_error = 0.0;
};

/// Exact per-sample estimate with its Monte Carlo standard error.
GapEstimate cdf_gap_estimate(int h, double theta, const MgpHyperparams& hp,
                             const PathEnsemble& paths);

double cdf_gap(int h, double theta, const MgpHyperparams& hp, const PathEnsemble& paths);

/// Fast evaluator of the same estimator for root finding.
///
/// Each column's log theta sample is collapsed into bins of width
/// `bin_width`; a bin contributes its count times the conditional CDF at the
/// bin's mean log theta. The induced error is second order in the bin width
/// (about 1e-7 at the default), far below the Monte Carlo error.
class GapEvaluator {
 public:
  GapEvaluator(const MgpHyperparams& hp, const PathEnsemble& paths, double bin_width = 1e-3);

  /// mean_r Q(a2, theta_h^r / t) = estimate of F_{theta_{h+1}}(t)
  double next_column_cdf(int h, double theta) const;
  double gap(int h, double theta) const;

  const MgpHyperparams& hp() const noexcept { return hp_; }
  const PathEnsemble& paths() const noexcept { return *paths_; }
  std::size_t bins(int h) const { return columns_.at(h - 1).log_theta.size(); }

 private:
  struct Column {
    std::vector<double> log_theta;
    std::vector<double> weight;
  };
  MgpHyperparams hp_;
  const PathEnsemble* paths_;
  std::vector<Column> columns_;
};

// ---------------------------------------------------------------------------
// Shrinkage regions

struct SolverOptions {
  double cap = 100.0;
  double tol = 0.01;           // relative bisection resolution
  double scan_floor = 1e-4;
  int scan_points = 200;
  double noise_sigmas = 3.0;
};

/// theta-bar for one transition h -> h+1.
struct ShrinkageBound {
  int h = 1;
  std::optional<double> bound;  // empty: gap nonnegative on all of (0, cap]
  double cap = 100.0;
  bool indeterminate = false;   // crossing not resolved from Monte Carlo noise
  double gap_at_crossing = 0.0;
  double se_at_crossing = 0.0;
  double min_z = 0.0;           // most negative gap past the crossing, in standard errors
  int sign_changes = 0;

  bool exceeds_cap() const noexcept { return !bound.has_value(); }
};

struct ShrinkageRegion {
  MgpHyperparams hp;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double cap = 100.0;
  double tol = 0.01;
  std::vector<ShrinkageBound> bounds;  // h = 1 .. k-1
  std::optional<double> intersection;  // empty: exceeds cap

  bool exceeds_cap() const noexcept { return !intersection.has_value(); }
  bool any_indeterminate() const;
};

/// Log-grid sign scan over [scan_floor, cap], then bisection on the first
/// sign change. Uses the evaluator's sample for every theta. The bound is
/// flagged indeterminate when the gap never falls more than noise_sigmas
/// standard errors below zero past the crossing, or when the sign pattern
/// oscillates with a crossing gap inside that band.
ShrinkageBound solve_shrinkage_bound(int h, const GapEvaluator& evaluator,
                                     const SolverOptions& options = {});

/// Samples n paths from `seed` and solves for a single transition.
ShrinkageBound solve_shrinkage_bound(int h, const MgpHyperparams& hp, std::size_t n,
                                     std::uint64_t seed, const SolverOptions& options = {});

/// All transitions on one shared sample, plus their intersection.
ShrinkageRegion shrinkage_region(const MgpHyperparams& hp, std::size_t n, std::uint64_t seed,
                                 const SolverOptions& options = {});

// ---------------------------------------------------------------------------
// Density ratios near zero

enum class RatioVerdict { pass, fail, below_precision };

std::string to_string(RatioVerdict v);

struct RatioTrace {
  std::optional<double> theta_prev2;  // conditioning value; empty for the h = 1 marginal
  std::vector<double> log_ratio;      // ln f_{h+1}(t) - ln f_h(t) per grid point
  RatioVerdict verdict = RatioVerdict::fail;
};

struct RatioCheck {
  int h = 1;
  std::vector<double> grid;
  std::vector<RatioTrace> traces;
  RatioVerdict verdict = RatioVerdict::fail;
};

inline constexpr double kDefaultPrev2Values[] = {0.1, 1.0, 10.0};

/// Density ratio f_{theta_{h+1}} / f_{theta_h} along a grid decreasing to 0.
///
/// h = 1 uses the closed-form marginal of theta_2 against Inv-Ga(a1, 1).
/// h >= 2 uses the two-step conditional density against Inv-Ga(a2, b) for
/// each conditioning value b. A trace passes when, from some grid point on
/// covering at least half the grid through its end, the ratio exceeds 1 and
/// grows at every step. Ratios are formed in log-space; a non-finite log
/// ratio is reported as below precision rather than as a failure.
RatioCheck small_theta_ratio_check(const MgpHyperparams& hp, int h, std::span<const double> grid,
                                   std::span<const double> theta_prev2_values = kDefaultPrev2Values);

/// Grid 10^-1, 10^-1.5, ..., 10^-6.
std::vector<double> default_ratio_grid();

}  // namespace mgp
