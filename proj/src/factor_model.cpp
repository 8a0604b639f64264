#include "mgp/factor_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace mgp {

namespace {

constexpr double kJitter = 1e-10;

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = draw_normal(rng);
  }
  return m;
}

std::string describe(const GibbsState& s) {
  std::ostringstream os;
  os << "tau=[" << s.tau.transpose() << "] sigma2_inv=[" << s.sigma2_inv.transpose()
     << "] max|Lambda|=" << s.Lambda.cwiseAbs().maxCoeff()
     << " min(Phi)=" << s.Phi.minCoeff();
  return os.str();
}

// Upper Cholesky factor U of a symmetric precision (P = U'U), retrying once
// with a diagonal jitter.
Eigen::LLT<Eigen::MatrixXd> factor_precision(Eigen::MatrixXd precision, const GibbsState& s,
                                             const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() == Eigen::Success) return llt;
  precision.diagonal().array() += kJitter;
  llt.compute(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string("gibbs_step: ") + what +
                         " precision is not positive definite; state: " + describe(s));
  }
  return llt;
}

void refresh_tau(GibbsState& s) {
  double running = 1.0;
  for (Eigen::Index h = 0; h < s.delta.size(); ++h) {
    running *= s.delta(h);
    s.tau(h) = running;
  }
}

}  // namespace

void FactorModelConfig::validate() const {
  std::vector<std::string> errors;
  if (p < 1) errors.push_back("p must be >= 1");
  if (n < 1) errors.push_back("n must be >= 1");
  if (k0 < 0) errors.push_back("k0 must be >= 0");
  if (k_trunc < 1) errors.push_back("k_trunc must be >= 1");
  if (!(a_sigma > 0.0)) errors.push_back("a_sigma must be > 0");
  if (!(b_sigma > 0.0)) errors.push_back("b_sigma must be > 0");
  if (burnin < 0) errors.push_back("burnin must be >= 0");
  if (iterations <= burnin) errors.push_back("iterations must exceed burnin");
  try {
    MgpHyperparams check = hp;
    check.k = std::max(1, k_trunc);
    check.validate();
  } catch (const DomainError& e) {
    errors.emplace_back(e.what());
  }
  if (!errors.empty()) {
    std::string msg = "invalid factor model config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw DomainError(msg);
  }
}

SyntheticDataset simulate_dataset(int p, int n, int k0, std::uint64_t seed) {
  if (p < 1 || n < 1 || k0 < 0) throw DomainError("simulate_dataset: need p, n >= 1 and k0 >= 0");
  Rng rng = make_stream(seed, 0);
  SyntheticDataset data;
  data.Lambda0 = normal_matrix(p, k0, rng);
  data.Omega0 = data.Lambda0 * data.Lambda0.transpose();
  data.Omega0.diagonal().array() += 1.0;
  const Eigen::MatrixXd eta = normal_matrix(n, k0, rng);
  const Eigen::MatrixXd noise = normal_matrix(n, p, rng);
  data.Y = eta * data.Lambda0.transpose() + noise;
  return data;
}

Eigen::MatrixXd GibbsState::omega() const {
  Eigen::MatrixXd om = Lambda * Lambda.transpose();
  om.diagonal() += sigma2_inv.cwiseInverse();
  return om;
}

GibbsState initial_state(const FactorModelConfig& cfg, Rng& rng) {
  cfg.validate();
  const int p = cfg.p;
  const int k = cfg.k_trunc;
  GibbsState s;
  s.Lambda = Eigen::MatrixXd::Zero(p, k);
  s.Eta = normal_matrix(cfg.n, k, rng);
  s.sigma2_inv = Eigen::VectorXd::Ones(p);
  s.Phi = Eigen::MatrixXd::Ones(p, k);
  s.delta = Eigen::VectorXd::Ones(k);
  s.tau = Eigen::VectorXd::Ones(k);
  return s;
}

GibbsState sample_prior_state(const FactorModelConfig& cfg, ColumnPrior prior, Rng& rng) {
  cfg.validate();
  const int p = cfg.p;
  const int k = cfg.k_trunc;
  const double ups = cfg.hp.upsilon;
  GibbsState s;
  s.delta.resize(k);
  s.tau.resize(k);
  if (prior == ColumnPrior::multiplicative_gamma) {
    for (int h = 0; h < k; ++h) s.delta(h) = draw_gamma(rng, h == 0 ? cfg.hp.a1 : cfg.hp.a2, 1.0);
    refresh_tau(s);
  } else {
    for (int h = 0; h < k; ++h) s.tau(h) = draw_gamma(rng, kBaselineShape, kBaselineRate);
    for (int h = 0; h < k; ++h) s.delta(h) = h == 0 ? s.tau(0) : s.tau(h) / s.tau(h - 1);
  }
  s.Phi.resize(p, k);
  s.Lambda.resize(p, k);
  for (int h = 0; h < k; ++h) {
    for (int j = 0; j < p; ++j) {
      s.Phi(j, h) = draw_gamma(rng, 0.5 * ups, 0.5 * ups);
      s.Lambda(j, h) = draw_normal(rng) / std::sqrt(s.Phi(j, h) * s.tau(h));
    }
  }
  s.sigma2_inv.resize(p);
  for (int j = 0; j < p; ++j) s.sigma2_inv(j) = draw_gamma(rng, cfg.a_sigma, cfg.b_sigma);
  s.Eta = normal_matrix(cfg.n, k, rng);
  return s;
}

Eigen::MatrixXd simulate_data_given_state(const GibbsState& state, Rng& rng) {
  const Eigen::Index n = state.Eta.rows();
  const Eigen::Index p = state.Lambda.rows();
  Eigen::MatrixXd noise = normal_matrix(n, p, rng);
  noise *= state.sigma2_inv.cwiseSqrt().cwiseInverse().asDiagonal();
  return state.Eta * state.Lambda.transpose() + noise;
}

void gibbs_step(GibbsState& s, const Eigen::MatrixXd& Y, const FactorModelConfig& cfg,
                ColumnPrior prior, Rng& rng) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index p = Y.cols();
  const Eigen::Index k = s.Lambda.cols();

  // (i) eta_i ~ N(P^-1 Lambda' Sigma^-1 y_i, P^-1), P = I + Lambda' Sigma^-1 Lambda
  {
    const Eigen::MatrixXd lt_sinv = s.Lambda.transpose() * s.sigma2_inv.asDiagonal();
    Eigen::MatrixXd precision = lt_sinv * s.Lambda;
    precision.diagonal().array() += 1.0;
    const auto llt = factor_precision(precision, s, "factor");
    Eigen::MatrixXd draw = llt.solve(lt_sinv * Y.transpose());
    draw += llt.matrixU().solve(normal_matrix(k, n, rng));
    s.Eta = draw.transpose();
  }

  // (ii) lambda_j ~ N(Q^-1 s_j Eta' y_j, Q^-1), Q = diag(phi_j . tau) + s_j Eta' Eta
  {
    const Eigen::MatrixXd ete = s.Eta.transpose() * s.Eta;
    const Eigen::MatrixXd ety = s.Eta.transpose() * Y;
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::MatrixXd precision = s.sigma2_inv(j) * ete;
      precision.diagonal() += s.Phi.row(j).transpose().cwiseProduct(s.tau);
      const auto llt = factor_precision(precision, s, "loading");
      Eigen::VectorXd draw = llt.solve(s.sigma2_inv(j) * ety.col(j));
      Eigen::VectorXd z(k);
      for (Eigen::Index h = 0; h < k; ++h) z(h) = draw_normal(rng);
      draw += llt.matrixU().solve(z);
      s.Lambda.row(j) = draw.transpose();
    }
  }

  // (iii) sigma_j^-2 ~ Ga(a_sigma + n/2, b_sigma + RSS_j / 2)
  {
    const Eigen::MatrixXd resid = Y - s.Eta * s.Lambda.transpose();
    const Eigen::VectorXd rss = resid.colwise().squaredNorm().transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      s.sigma2_inv(j) = draw_gamma(rng, cfg.a_sigma + 0.5 * n, cfg.b_sigma + 0.5 * rss(j));
    }
  }

  // (iv) phi_jh ~ Ga((ups + 1)/2, (ups + tau_h lambda_jh^2)/2)
  const double ups = cfg.hp.upsilon;
  for (Eigen::Index h = 0; h < k; ++h) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const double l = s.Lambda(j, h);
      s.Phi(j, h) = draw_gamma(rng, 0.5 * (ups + 1.0), 0.5 * (ups + s.tau(h) * l * l));
    }
  }

  // (v) column precisions
  const Eigen::VectorXd weighted =
      (s.Phi.array() * s.Lambda.array().square()).colwise().sum().transpose();
  if (prior == ColumnPrior::multiplicative_gamma) {
    for (Eigen::Index h = 0; h < k; ++h) {
      double rate = 0.0;
      for (Eigen::Index l = h; l < k; ++l) rate += s.tau(l) / s.delta(h) * weighted(l);
      const double shape = (h == 0 ? cfg.hp.a1 : cfg.hp.a2) + 0.5 * static_cast<double>(p * (k - h));
      s.delta(h) = draw_gamma(rng, shape, 1.0 + 0.5 * rate);
      refresh_tau(s);
    }
  } else {
    for (Eigen::Index h = 0; h < k; ++h) {
      s.tau(h) = draw_gamma(rng, kBaselineShape + 0.5 * static_cast<double>(p),
                            kBaselineRate + 0.5 * weighted(h));
    }
    for (Eigen::Index h = 0; h < k; ++h) s.delta(h) = h == 0 ? s.tau(0) : s.tau(h) / s.tau(h - 1);
  }
}

double lower_triangle_median(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    for (Eigen::Index s = 0; s <= j && s < m.cols(); ++s) v.push_back(m(j, s));
  }
  if (v.empty()) throw DomainError("lower_triangle_median: empty matrix");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double effective_sample_size(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 4) return static_cast<double>(n);
  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (trace[i] - mean) * (trace[i + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  // Sum of consecutive autocorrelation pairs, truncated at the first
  // non-positive pair and kept monotone.
  double tau_sum = -c0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = autocov(lag) + autocov(lag + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau_sum += 2.0 * pair;
  }
  return static_cast<double>(n) * c0 / std::max(tau_sum, c0 / static_cast<double>(n));
}

std::string setting_label(const MgpHyperparams& hp, ColumnPrior prior) {
  if (prior == ColumnPrior::independent_gamma) return "baseline";
  std::ostringstream os;
  os << "a1=" << hp.a1 << " a2=" << hp.a2;
  return os.str();
}

ConcentrationReport run_chain(const FactorModelConfig& cfg, const SyntheticDataset& data,
                              ColumnPrior prior, const SweepObserver& observer) {
  cfg.validate();
  if (data.Y.cols() != cfg.p || data.Y.rows() != cfg.n) {
    throw DomainError("run_chain: dataset shape does not match config (p, n)");
  }
  Rng rng = make_stream(cfg.seed, 1);
  GibbsState state = initial_state(cfg, rng);

  const int p = cfg.p;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd omega_mean = Eigen::MatrixXd::Zero(p, p);
  std::vector<double> trace11;
  std::vector<double> trace21;
  trace11.reserve(cfg.retained());
  trace21.reserve(cfg.retained());

  int kept = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    gibbs_step(state, data.Y, cfg, prior, rng);
    if (it < cfg.burnin) continue;
    const Eigen::MatrixXd om = state.omega();
    ++kept;
    const double w = 1.0 / kept;
    const Eigen::MatrixXd sq = (om - data.Omega0).array().square().matrix();
    d += w * (sq - d);
    omega_mean += w * (om - omega_mean);
    trace11.push_back(om(0, 0));
    if (p > 1) trace21.push_back(om(1, 0));
    if (observer) observer(state, om);
  }

  ConcentrationReport report;
  report.label = setting_label(cfg.hp, prior);
  report.prior = prior;
  report.config = cfg;
  report.d = d.triangularView<Eigen::Lower>();
  report.omega_mean = omega_mean;
  report.omega_true = data.Omega0;
  report.median_d = lower_triangle_median(report.d);
  report.retained = kept;
  report.ess_omega11 = effective_sample_size(trace11);
  report.ess_omega21 = p > 1 ? effective_sample_size(trace21) : 0.0;
  for (int j = 0; j < p && report.jensen_holds; ++j) {
    for (int s = 0; s <= j; ++s) {
      const double bias = omega_mean(j, s) - data.Omega0(j, s);
      if (report.d(j, s) < bias * bias - 1e-9 * (1.0 + bias * bias)) {
        report.jensen_holds = false;
        break;
      }
    }
  }
  return report;
}

ConcentrationReport run_baseline_chain(const FactorModelConfig& cfg, const SyntheticDataset& data,
                                       const SweepObserver& observer) {
  return run_chain(cfg, data, ColumnPrior::independent_gamma, observer);
}

std::vector<int> best_counts(std::span<const ConcentrationReport* const> reports) {
  if (reports.empty()) return {};
  const Eigen::Index p = reports.front()->d.rows();
  std::vector<int> counts(reports.size(), 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index s = 0; s <= j; ++s) {
      std::size_t best = 0;
      for (std::size_t r = 1; r < reports.size(); ++r) {
        if (reports[r]->d(j, s) < reports[best]->d(j, s)) best = r;
      }
      ++counts[best];
    }
  }
  return counts;
}

const ConcentrationReport& SettingsComparison::report(int setting, int k0, int replicate) const {
  for (const auto& c : cells) {
    if (c.setting == setting && c.k0 == k0 && c.replicate == replicate) return c.report;
  }
  throw DomainError("SettingsComparison: no such cell");
}

double SettingsComparison::median_of_medians(int setting, int k0) const {
  std::vector<double> medians;
  for (const auto& c : cells) {
    if (c.setting == setting && c.k0 == k0) medians.push_back(c.report.median_d);
  }
  if (medians.empty()) throw DomainError("SettingsComparison: no such setting/k0");
  std::sort(medians.begin(), medians.end());
  const std::size_t mid = medians.size() / 2;
  return medians.size() % 2 ? medians[mid] : 0.5 * (medians[mid - 1] + medians[mid]);
}

SettingsComparison compare_settings(const std::vector<PriorSetting>& settings,
                                    const std::vector<int>& k0_values, int replicates,
                                    const FactorModelConfig& base, std::uint64_t seed,
                                    unsigned workers) {
  if (settings.empty()) throw DomainError("compare_settings: need at least one setting");
  if (k0_values.empty()) throw DomainError("compare_settings: need at least one k0");
  if (replicates < 1) throw DomainError("compare_settings: replicates must be >= 1");

  SettingsComparison out;
  out.settings = settings;
  out.k0_values = k0_values;
  out.replicates = replicates;

  struct Job {
    int setting, k0_index, replicate;
  };
  std::vector<Job> jobs;
  for (int ki = 0; ki < static_cast<int>(k0_values.size()); ++ki) {
    for (int r = 0; r < replicates; ++r) {
      for (int s = 0; s < static_cast<int>(settings.size()); ++s) jobs.push_back({s, ki, r});
    }
  }

  // Datasets are shared by all settings of a (k0, replicate) pair.
  std::vector<SyntheticDataset> datasets;
  for (int ki = 0; ki < static_cast<int>(k0_values.size()); ++ki) {
    for (int r = 0; r < replicates; ++r) {
      const std::uint64_t data_seed = make_stream(seed, 1000u * ki + r)();
      datasets.push_back(simulate_dataset(base.p, base.n, k0_values[ki], data_seed));
    }
  }

  out.cells.resize(jobs.size());
  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    FactorModelConfig cfg = base;
    cfg.k0 = k0_values[job.k0_index];
    cfg.hp = settings[job.setting].hp;
    cfg.seed = make_stream(seed, 1000000u + 1000u * job.k0_index + job.replicate)() + job.setting;
    const auto& data = datasets[job.k0_index * replicates + job.replicate];
    ConcentrationReport rep = run_chain(cfg, data, settings[job.setting].prior);
    rep.label = settings[job.setting].label;
    out.cells[i] = {job.setting, cfg.k0, job.replicate, std::move(rep)};
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            run_job(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  const auto n_settings = settings.size();
  for (int k0 : k0_values) {
    BestCounts avg{k0, -1, std::vector<double>(n_settings, 0.0)};
    for (int r = 0; r < replicates; ++r) {
      std::vector<const ConcentrationReport*> reps;
      for (std::size_t s = 0; s < n_settings; ++s) reps.push_back(&out.report(static_cast<int>(s), k0, r));
      const auto counts = best_counts(reps);
      BestCounts one{k0, r, {counts.begin(), counts.end()}};
      for (std::size_t s = 0; s < n_settings; ++s) avg.counts[s] += counts[s] / double(replicates);
      out.best_counts.push_back(std::move(one));
    }
    out.best_counts.push_back(std::move(avg));
  }
  return out;
}

}  // namespace mgp
