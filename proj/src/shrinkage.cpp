#include "mgp/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mgp {

namespace {

// Bins stop contributing once a term falls below this fraction of the running
// total. Later bins have larger arguments and smaller Q, and the cutoff is
// relative so sums deep in the lower tail keep their magnitude.
constexpr double kNegligibleTail = 1e-17;

// Upper bound on bins per column; the width grows if a sample spans more.
constexpr std::size_t kMaxBins = 1u << 24;

void check_transition(int h, const PathEnsemble& paths, const char* fn) {
  if (h < 1 || h > paths.k() - 1) {
    throw DomainError(std::string(fn) + ": transition h must satisfy 1 <= h <= k-1 (h=" +
                      std::to_string(h) + ", k=" + std::to_string(paths.k()) + ")");
  }
}

}  // namespace

double empirical_quantile(std::vector<double>& data, double prob) {
  if (data.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("empirical_quantile: prob outside [0,1]");
  const double pos = prob * static_cast<double>(data.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(lo), data.end());
  const double x_lo = data[lo];
  if (frac == 0.0 || lo + 1 >= data.size()) return x_lo;
  const double x_hi =
      *std::min_element(data.begin() + static_cast<std::ptrdiff_t>(lo) + 1, data.end());
  return x_lo + frac * (x_hi - x_lo);
}

QuantileTable estimate_quantile_table(const MgpHyperparams& hp, std::span<const double> probs,
                                      std::size_t n, std::uint64_t seed, unsigned workers) {
  hp.validate();
  if (n < 10000) throw DomainError("estimate_quantile_table: need n >= 10^4 samples");
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("estimate_quantile_table: probs must lie in (0,1)");
  }

  const auto k = static_cast<std::size_t>(hp.k);
  std::vector<double> tau(k * n);
  std::vector<double> lambda(k * n);
  for_each_chunk(n, seed, workers, [&](std::size_t, std::size_t begin, std::size_t end, Rng& rng) {
    for (std::size_t r = begin; r < end; ++r) {
      const PrecisionPath path = sample_precision_path(hp, rng);
      for (std::size_t h = 0; h < k; ++h) {
        tau[h * n + r] = path.tau[h];
        lambda[h * n + r] = sample_loading(1.0, path.tau[h], rng).lambda;
      }
    }
  });

  QuantileTable table{hp, n, seed, {probs.begin(), probs.end()}, {}};
  std::vector<double> column(n);
  for (std::size_t h = 0; h < k; ++h) {
    QuantileRow row;
    row.h = static_cast<int>(h) + 1;
    const auto first = tau.begin() + static_cast<std::ptrdiff_t>(h * n);
    column.assign(first, first + static_cast<std::ptrdiff_t>(n));
    for (double p : probs) row.tau.push_back(empirical_quantile(column, p));
    std::transform(first, first + static_cast<std::ptrdiff_t>(n), column.begin(),
                   [](double t) { return 1.0 / t; });
    for (double p : probs) row.theta.push_back(empirical_quantile(column, p));
    const auto lfirst = lambda.begin() + static_cast<std::ptrdiff_t>(h * n);
    column.assign(lfirst, lfirst + static_cast<std::ptrdiff_t>(n));
    const double q1 = empirical_quantile(column, 0.25);
    const double q3 = empirical_quantile(column, 0.75);
    row.lambda_iqr = q3 - q1;
    table.rows.push_back(std::move(row));
  }
  return table;
}

GapEstimate cdf_gap_estimate(int h, double theta, const MgpHyperparams& hp,
                             const PathEnsemble& paths) {
  check_transition(h, paths, "cdf_gap");
  PositiveReal{theta};
  const std::size_t n = paths.size();
  if (n < 2) throw DomainError("cdf_gap: need at least two sampled paths");

  const auto upper = paths.theta(h);
  const auto lower = h > 1 ? paths.theta(h - 1) : upper;
  const double baseline = h == 1 ? reg_gamma_q(hp.a1, 1.0 / theta) : 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double d = reg_gamma_q(hp.a2, upper[r] / theta);
    if (h > 1) d -= reg_gamma_q(hp.a2, lower[r] / theta);
    const double delta = d - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (d - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean - baseline, std::sqrt(var / static_cast<double>(n))};
}

double cdf_gap(int h, double theta, const MgpHyperparams& hp, const PathEnsemble& paths) {
  return cdf_gap_estimate(h, theta, hp, paths).gap;
}

GapEvaluator::GapEvaluator(const MgpHyperparams& hp, const PathEnsemble& paths, double bin_width)
    : hp_(hp), paths_(&paths) {
  hp.validate();
  if (!(bin_width > 0.0)) throw DomainError("GapEvaluator: bin width must be > 0");
  if (paths.size() == 0) throw DomainError("GapEvaluator: empty path sample");
  const double inv_n = 1.0 / static_cast<double>(paths.size());

  for (int h = 1; h < paths.k(); ++h) {
    const auto sample = paths.theta(h);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double t : sample) {
      const double u = std::log(t);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
    double width = bin_width;
    while ((hi - lo) / width + 1.0 > static_cast<double>(kMaxBins)) width *= 2.0;
    const auto nbins = static_cast<std::size_t>((hi - lo) / width) + 1;
    std::vector<double> sum(nbins, 0.0);
    std::vector<double> count(nbins, 0.0);
    for (double t : sample) {
      const double u = std::log(t);
      const auto b = std::min(nbins - 1, static_cast<std::size_t>((u - lo) / width));
      sum[b] += u;
      count[b] += 1.0;
    }
    Column col;
    for (std::size_t b = 0; b < nbins; ++b) {
      if (count[b] == 0.0) continue;
      col.log_theta.push_back(sum[b] / count[b]);
      col.weight.push_back(count[b] * inv_n);
    }
    columns_.push_back(std::move(col));
  }
}

double GapEvaluator::next_column_cdf(int h, double theta) const {
  check_transition(h, *paths_, "GapEvaluator");
  PositiveReal{theta};
  const Column& col = columns_[h - 1];
  const double log_t = std::log(theta);
  double total = 0.0;
  // Bins ascend in log theta, so Q(a2, theta_h / t) descends.
  for (std::size_t b = 0; b < col.log_theta.size(); ++b) {
    const double q = reg_gamma_q(hp_.a2, std::exp(col.log_theta[b] - log_t));
    if (q == 0.0 || q < kNegligibleTail * total) break;
    total += col.weight[b] * q;
  }
  return total;
}

double GapEvaluator::gap(int h, double theta) const {
  const double next = next_column_cdf(h, theta);
  const double current = h == 1 ? reg_gamma_q(hp_.a1, 1.0 / theta) : next_column_cdf(h - 1, theta);
  return next - current;
}

bool ShrinkageRegion::any_indeterminate() const {
  return std::any_of(bounds.begin(), bounds.end(),
                     [](const ShrinkageBound& b) { return b.indeterminate; });
}

ShrinkageBound solve_shrinkage_bound(int h, const GapEvaluator& evaluator,
                                     const SolverOptions& options) {
  check_transition(h, evaluator.paths(), "solve_shrinkage_bound");
  if (!(options.cap > 0.0)) throw DomainError("solve_shrinkage_bound: cap must be > 0");
  if (!(options.tol > 0.0)) throw DomainError("solve_shrinkage_bound: tol must be > 0");
  if (options.scan_points < 2) throw DomainError("solve_shrinkage_bound: need >= 2 scan points");

  ShrinkageBound result;
  result.h = h;
  result.cap = options.cap;

  const double floor = std::min(options.scan_floor, options.cap * 1e-3);
  const double log_lo = std::log(floor);
  const double step = (std::log(options.cap) - log_lo) / (options.scan_points - 1);
  std::vector<double> grid(options.scan_points);
  std::vector<double> gaps(options.scan_points);
  for (int i = 0; i < options.scan_points; ++i) {
    grid[i] = i + 1 == options.scan_points ? options.cap : std::exp(log_lo + step * i);
    gaps[i] = evaluator.gap(h, grid[i]);
  }

  int first_negative = -1;
  for (int i = 0; i < options.scan_points; ++i) {
    if (gaps[i] < 0.0 && first_negative < 0) first_negative = i;
    if (i > 0 && (gaps[i] < 0.0) != (gaps[i - 1] < 0.0)) ++result.sign_changes;
  }
  if (first_negative < 0) return result;

  double hi = grid[first_negative];
  double lo = first_negative > 0 ? grid[first_negative - 1] : hi * 1e-3;
  while (hi - lo > options.tol * hi) {
    const double mid = std::sqrt(lo * hi);
    (evaluator.gap(h, mid) >= 0.0 ? lo : hi) = mid;
  }
  result.bound = lo;

  const GapEstimate at_crossing =
      cdf_gap_estimate(h, grid[first_negative], evaluator.hp(), evaluator.paths());
  result.gap_at_crossing = at_crossing.gap;
  result.se_at_crossing = at_crossing.std_error;
  // A real loss of order drives the gap clearly below zero somewhere past
  // the crossing; a sample-noise crossing never leaves the error band.
  const auto deepest = std::min_element(gaps.begin() + first_negative, gaps.end()) - gaps.begin();
  const GapEstimate at_deepest =
      cdf_gap_estimate(h, grid[deepest], evaluator.hp(), evaluator.paths());
  result.min_z = at_deepest.std_error > 0.0 ? at_deepest.gap / at_deepest.std_error : 0.0;
  const bool oscillates = result.sign_changes > 1 &&
                          std::fabs(at_crossing.gap) < options.noise_sigmas * at_crossing.std_error;
  result.indeterminate = oscillates || result.min_z > -options.noise_sigmas;
  return result;
}

ShrinkageBound solve_shrinkage_bound(int h, const MgpHyperparams& hp, std::size_t n,
                                     std::uint64_t seed, const SolverOptions& options) {
  const PathEnsemble paths = sample_variance_paths(hp, n, seed);
  const GapEvaluator evaluator(hp, paths);
  return solve_shrinkage_bound(h, evaluator, options);
}

ShrinkageRegion shrinkage_region(const MgpHyperparams& hp, std::size_t n, std::uint64_t seed,
                                 const SolverOptions& options) {
  hp.validate();
  if (hp.k < 2) throw DomainError("shrinkage_region: need k >= 2");
  const PathEnsemble paths = sample_variance_paths(hp, n, seed);
  const GapEvaluator evaluator(hp, paths);

  ShrinkageRegion region;
  region.hp = hp;
  region.n = n;
  region.seed = seed;
  region.cap = options.cap;
  region.tol = options.tol;
  for (int h = 1; h < hp.k; ++h) {
    region.bounds.push_back(solve_shrinkage_bound(h, evaluator, options));
    const auto& b = region.bounds.back().bound;
    if (b && (!region.intersection || *b < *region.intersection)) region.intersection = b;
  }
  return region;
}

std::string to_string(RatioVerdict v) {
  switch (v) {
    case RatioVerdict::pass: return "pass";
    case RatioVerdict::fail: return "fail";
    case RatioVerdict::below_precision: return "below-precision";
  }
  return "unknown";
}

namespace {

RatioVerdict judge_trace(const std::vector<double>& log_ratio) {
  for (double r : log_ratio) {
    if (!std::isfinite(r)) return RatioVerdict::below_precision;
  }
  const std::size_t n = log_ratio.size();
  std::size_t start = n;
  while (start > 0) {
    const std::size_t j = start - 1;
    if (!(log_ratio[j] > 0.0)) break;
    if (j + 1 < n && !(log_ratio[j + 1] > log_ratio[j])) break;
    start = j;
  }
  const std::size_t tail = n - start;
  return n > 0 && 2 * tail >= n ? RatioVerdict::pass : RatioVerdict::fail;
}

}  // namespace

RatioCheck small_theta_ratio_check(const MgpHyperparams& hp, int h, std::span<const double> grid,
                                   std::span<const double> theta_prev2_values) {
  hp.validate();
  if (h < 1) throw DomainError("small_theta_ratio_check: h must be >= 1");
  if (grid.empty()) throw DomainError("small_theta_ratio_check: empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    PositiveReal{grid[i]};
    if (i > 0 && !(grid[i] < grid[i - 1])) {
      throw DomainError("small_theta_ratio_check: grid must decrease toward 0");
    }
  }

  RatioCheck check;
  check.h = h;
  check.grid.assign(grid.begin(), grid.end());

  if (h == 1) {
    RatioTrace trace;
    for (double t : grid) {
      trace.log_ratio.push_back(log_theta2_marginal_density(t, hp) -
                                inv_gamma_log_pdf(hp.a1, 1.0, t));
    }
    trace.verdict = judge_trace(trace.log_ratio);
    check.traces.push_back(std::move(trace));
  } else {
    if (theta_prev2_values.empty()) {
      throw DomainError("small_theta_ratio_check: need conditioning values for h >= 2");
    }
    for (double b : theta_prev2_values) {
      RatioTrace trace;
      trace.theta_prev2 = b;
      for (double t : grid) {
        trace.log_ratio.push_back(log_two_step_conditional_density(t, b, hp.a2) -
                                  inv_gamma_log_pdf(hp.a2, b, t));
      }
      trace.verdict = judge_trace(trace.log_ratio);
      check.traces.push_back(std::move(trace));
    }
  }

  const bool any_fail = std::any_of(check.traces.begin(), check.traces.end(),
                                    [](const RatioTrace& t) { return t.verdict == RatioVerdict::fail; });
  const bool any_low =
      std::any_of(check.traces.begin(), check.traces.end(),
                  [](const RatioTrace& t) { return t.verdict == RatioVerdict::below_precision; });
  check.verdict = any_fail ? RatioVerdict::fail
                  : any_low ? RatioVerdict::below_precision
                            : RatioVerdict::pass;
  return check;
}

std::vector<double> default_ratio_grid() {
  std::vector<double> grid;
  for (int i = 2; i <= 12; ++i) grid.push_back(std::pow(10.0, -0.5 * i));
  return grid;
}

}  // namespace mgp
