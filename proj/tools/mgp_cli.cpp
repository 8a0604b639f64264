// Command-line front end: prior tables, shrinkage regions, diagnostics and
// the factor-model simulation study.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgp/factor_model.hpp"
#include "mgp/prior.hpp"
#include "mgp/report_io.hpp"
#include "mgp/shrinkage.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  double a1 = 0.0;
  double a2 = 0.0;
  int k = 0;
  double samples = 0.0;
  std::uint64_t seed = 20150101;
  std::string out = "out";
  std::string format;  // empty: both

  bool want_csv() const { return format.empty() || format == "csv"; }
  bool want_json() const { return format.empty() || format == "json"; }
};

Common defaults(double a1, double a2, int k, double samples) {
  Common c;
  c.a1 = a1;
  c.a2 = a2;
  c.k = k;
  c.samples = samples;
  return c;
}

void add_common(CLI::App* cmd, Common& c, bool with_hp = true) {
  if (with_hp) {
    cmd->add_option("--a1", c.a1, "first-column shape a1")->capture_default_str();
    cmd->add_option("--a2", c.a2, "later-column shape a2")->capture_default_str();
    cmd->add_option("--k", c.k, "number of columns")->capture_default_str();
  }
  cmd->add_option("--samples", c.samples, "Monte Carlo sample size")->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--format", c.format, "csv or json (default: both)")
      ->check(CLI::IsMember({"csv", "json"}));
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

mgp::MgpHyperparams hyperparams(const Common& c) {
  mgp::MgpHyperparams hp{c.a1, c.a2, c.k, 3.0};
  hp.validate();
  return hp;
}

std::size_t sample_count(double v) {
  if (!(v >= 1.0)) throw mgp::DomainError("--samples must be >= 1");
  return static_cast<std::size_t>(std::llround(v));
}

/// Writes the CSV and/or JSON artifacts, recording paths in the manifest.
void emit(const Common& c, const std::string& stem, mgp::RunManifest manifest, const Timer& timer,
          const std::function<std::string(const mgp::RunManifest&)>& csv, const json& payload) {
  const fs::path dir(c.out);
  if (c.want_csv()) manifest.outputs.push_back((dir / (stem + ".csv")).string());
  if (c.want_json()) manifest.outputs.push_back((dir / (stem + ".json")).string());
  manifest.wall_clock_seconds = timer.seconds();
  if (c.want_csv()) mgp::write_text_file(dir / (stem + ".csv"), csv(manifest));
  if (c.want_json()) {
    const json doc{{"manifest", manifest.to_json()}, {"data", payload}};
    mgp::write_text_file(dir / (stem + ".json"), doc.dump(2) + "\n");
  }
  for (const auto& p : manifest.outputs) std::cout << "wrote " << p << "\n";
}

std::vector<std::pair<double, double>> parse_settings(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw mgp::DomainError("setting '" + item + "' is not a1:a2");
    out.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  if (out.empty()) throw mgp::DomainError("settings list is empty");
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(std::stod(item));
  return out;
}

// ---- table1 ------------------------------------------------------------------

int run_table1(const Common& c) {
  Timer timer;
  const auto hp = hyperparams(c);
  const double probs[] = {0.25, 0.5, 0.75};
  const auto table = mgp::estimate_quantile_table(hp, probs, sample_count(c.samples), c.seed);

  mgp::RunManifest m;
  m.command = "table1";
  m.parameters = {{"a1", hp.a1}, {"a2", hp.a2}, {"k", hp.k}};
  m.seed = c.seed;
  m.sample_sizes = {{"prior_draws", table.n}};
  emit(c, "table1", m, timer, [&](const auto& man) { return mgp::quantile_table_csv(table, man); },
       mgp::to_json(table));

  std::cout << "h   tau Q1  Q2    Q3    | theta Q1  Q2    Q3     | lambda IQR\n";
  for (const auto& r : table.rows) {
    std::cout << r.h << "   " << mgp::format_fixed2(r.tau[0]) << " " << mgp::format_fixed2(r.tau[1])
              << " " << mgp::format_fixed2(r.tau[2]) << "  | " << mgp::format_fixed2(r.theta[0])
              << " " << mgp::format_fixed2(r.theta[1]) << " " << mgp::format_fixed2(r.theta[2])
              << "  | " << mgp::format_fixed2(r.lambda_iqr) << "\n";
  }
  return 0;
}

// ---- table2 ------------------------------------------------------------------

std::string bound_text(const std::optional<double>& b, double cap, bool flagged) {
  std::string s = b ? mgp::format_fixed2(*b) : ">" + mgp::format_number(cap);
  return flagged ? s + " (noisy)" : s;
}

int run_table2(const Common& c, const std::string& settings_text, double cap, double tol) {
  Timer timer;
  const auto settings = parse_settings(settings_text);
  mgp::SolverOptions opts;
  opts.cap = cap;
  opts.tol = tol;
  std::vector<mgp::ShrinkageRegion> regions;
  for (const auto& [a1, a2] : settings) {
    mgp::MgpHyperparams hp{a1, a2, c.k, 3.0};
    hp.validate();
    regions.push_back(mgp::shrinkage_region(hp, sample_count(c.samples), c.seed, opts));
  }

  mgp::RunManifest m;
  m.command = "table2";
  m.parameters = {{"settings", settings_text}, {"k", c.k}, {"cap", cap}, {"tol", tol}};
  m.seed = c.seed;
  m.sample_sizes = {{"paths", sample_count(c.samples)}};
  json payload = json::array();
  for (const auto& r : regions) payload.push_back(mgp::to_json(r));
  emit(c, "table2", m, timer, [&](const auto& man) { return mgp::shrinkage_table_csv(regions, man); },
       payload);

  for (const auto& r : regions) {
    std::cout << "(a1=" << r.hp.a1 << ", a2=" << r.hp.a2 << ")";
    for (const auto& b : r.bounds) std::cout << "  (0, " << bound_text(b.bound, r.cap, b.indeterminate) << "]";
    std::cout << "  intersection (0, " << bound_text(r.intersection, r.cap, r.any_indeterminate()) << "]\n";
  }
  return 0;
}

// ---- diagnose ------------------------------------------------------------------

int run_diagnose(const Common& c, double cap) {
  Timer timer;
  const auto hp = hyperparams(c);
  const std::size_t n = sample_count(c.samples);
  json out;

  // Moments: E(tau_h) always exists; E(theta_h) needs min(a1, a2) > 1.
  json moments = json::array();
  bool mean_theta_increasing = hp.k > 1;
  double prev_theta_mean = 0.0;
  for (int h = 1; h <= hp.k; ++h) {
    json row{{"h", h}, {"tau_mean", mgp::tau_mean(h, hp)}};
    try {
      const double tm = mgp::theta_moment(h, 1.0, hp);
      row["theta_mean"] = tm;
      if (h > 1 && !(tm > prev_theta_mean)) mean_theta_increasing = false;
      prev_theta_mean = tm;
    } catch (const mgp::MomentNotFinite&) {
      row["theta_mean"] = nullptr;
      mean_theta_increasing = false;
    }
    moments.push_back(row);
  }
  out["moments"] = moments;

  const double probs[] = {0.25, 0.5, 0.75};
  const auto table = mgp::estimate_quantile_table(hp, probs, std::max<std::size_t>(n, 10000), c.seed);
  out["quantiles"] = mgp::to_json(table);
  bool tau_quartiles_decreasing = hp.k > 1;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    for (int q = 0; q < 3; ++q) {
      if (!(table.rows[i].tau[q] < table.rows[i - 1].tau[q])) tau_quartiles_decreasing = false;
    }
  }

  if (hp.a1 >= hp.a2 && hp.a2 > 1.0) {
    const double m = mgp::moment_order_witness(hp);
    out["order_witness"] = {{"m", m}, {"moment_step_difference", mgp::moment_step_difference(1, m, hp)}};
  } else {
    out["order_witness"] = nullptr;
  }

  json ratio = json::array();
  bool ratios_pass = true;
  const auto grid = mgp::default_ratio_grid();
  for (int h = 1; h <= std::min(2, hp.k - 1); ++h) {
    const auto check = mgp::small_theta_ratio_check(hp, h, grid);
    ratios_pass = ratios_pass && check.verdict == mgp::RatioVerdict::pass;
    ratio.push_back(mgp::to_json(check));
  }
  out["small_theta_ratio"] = ratio;

  std::string verdict;
  if (hp.k >= 2) {
    mgp::SolverOptions opts;
    opts.cap = cap;
    const auto region = mgp::shrinkage_region(hp, n, c.seed, opts);
    out["shrinkage_region"] = mgp::to_json(region);
    if (region.exceeds_cap()) {
      verdict = "shrinkage region exceeds cap: cumulative shrinkage holds on (0, " +
                mgp::format_number(cap) + "]";
    } else {
      verdict = "cumulative shrinkage only on (0, " + mgp::format_fixed2(*region.intersection) + "]";
      if (*region.intersection < 1.0) verdict += " (narrow)";
    }
    if (region.any_indeterminate()) verdict += "; some bounds are within Monte Carlo noise";
  } else {
    verdict = "single column: no cumulative shrinkage to assess";
  }
  if (tau_quartiles_decreasing) {
    verdict += "; tau_h quartiles decrease with h, so later columns are less shrunk (apparently opposite behavior)";
  }
  if (mean_theta_increasing) verdict += "; E(theta_h) increases with h";
  if (!ratios_pass) verdict += "; small-theta density ratio check did not pass";
  out["verdict"] = verdict;

  mgp::RunManifest m;
  m.command = "diagnose";
  m.parameters = {{"a1", hp.a1}, {"a2", hp.a2}, {"k", hp.k}, {"cap", cap}};
  m.seed = c.seed;
  m.sample_sizes = {{"paths", n}};
  Common json_only = c;
  json_only.format = "json";
  emit(json_only, "diagnose", m, timer, {}, out);
  std::cout << "verdict: " << verdict << "\n";
  return 0;
}

// ---- support-probe ---------------------------------------------------------------

int run_support_probe(const Common& c, const std::string& target_text, double eps) {
  Timer timer;
  const auto hp = hyperparams(c);
  std::vector<double> target = target_text.empty() ? std::vector<double>{} : parse_list(target_text);
  if (target.empty()) {
    for (int h = 1; h <= hp.k; ++h) {
      try {
        target.push_back(mgp::theta_moment(h, 1.0, hp));
      } catch (const mgp::MomentNotFinite&) {
        target.push_back(1.0);
      }
    }
  }
  const std::size_t n = sample_count(c.samples);
  const double freq = mgp::full_support_probe(target, eps, n, hp, c.seed);

  mgp::RunManifest m;
  m.command = "support-probe";
  m.parameters = {{"a1", hp.a1}, {"a2", hp.a2}, {"k", hp.k}, {"eps", eps}, {"target", target}};
  m.seed = c.seed;
  m.sample_sizes = {{"paths", n}};
  const json payload{{"target", target}, {"eps", eps}, {"frequency", freq}, {"hits", std::llround(freq * n)}};
  emit(c, "support_probe", m, timer,
       [&](const mgp::RunManifest& man) {
         return man.csv_preamble() + "eps,frequency,hits\n" + mgp::format_number(eps) + "," +
                mgp::format_number(freq) + "," + std::to_string(std::llround(freq * n)) + "\n";
       },
       payload);
  std::cout << "box frequency: " << freq << "\n";
  return 0;
}

// ---- density-check ------------------------------------------------------------------

int run_density_check(const Common& c) {
  Timer timer;
  const auto hp = hyperparams(c);
  if (hp.k < 2) throw mgp::DomainError("density-check needs k >= 2");
  const auto grid = mgp::default_ratio_grid();
  std::vector<mgp::RatioCheck> checks;
  for (int h = 1; h < hp.k; ++h) checks.push_back(mgp::small_theta_ratio_check(hp, h, grid));

  mgp::RunManifest m;
  m.command = "density-check";
  m.parameters = {{"a1", hp.a1}, {"a2", hp.a2}, {"k", hp.k}, {"grid", grid}};
  m.seed = c.seed;
  json payload = json::array();
  for (const auto& ch : checks) payload.push_back(mgp::to_json(ch));
  emit(c, "density_check", m, timer, [&](const auto& man) { return mgp::ratio_check_csv(checks, man); },
       payload);
  for (const auto& ch : checks) std::cout << "h=" << ch.h << ": " << mgp::to_string(ch.verdict) << "\n";
  return 0;
}

// ---- simstudy --------------------------------------------------------------------------

int run_simstudy(const Common& c, const std::string& config_path, const std::string& preset,
                 int replicates) {
  Timer timer;
  mgp::SimStudyConfig cfg;
  json raw = json::object();
  if (!config_path.empty()) raw = json::parse(mgp::read_text_file(config_path));
  if (!preset.empty()) {
    raw["preset"] = preset;
    raw.erase("iterations");
    raw.erase("burnin");
  }
  if (replicates > 0) raw["replicates"] = replicates;
  if (!raw.contains("seed")) raw["seed"] = c.seed;
  cfg = mgp::parse_simstudy_config(raw);

  const auto settings = cfg.prior_settings();
  const auto cmp = mgp::compare_settings(settings, cfg.k0_values, cfg.replicates, cfg.base, cfg.base.seed);

  mgp::RunManifest m;
  m.command = "simstudy";
  m.parameters = mgp::to_json(cfg.base);
  m.parameters["preset"] = cfg.preset;
  m.parameters["k0"] = cfg.k0_values;
  m.parameters["replicates"] = cfg.replicates;
  json settings_json = json::array();
  for (const auto& s : settings) settings_json.push_back(s.label);
  m.parameters["settings"] = settings_json;
  m.seed = cfg.base.seed;
  m.sample_sizes = {{"retained", cfg.base.retained()}, {"burnin", cfg.base.burnin}};

  std::vector<mgp::ConcentrationRow> rows;
  json reports = json::array();
  for (const auto& cell : cmp.cells) {
    auto r = mgp::concentration_rows(cell.report, cell.replicate);
    rows.insert(rows.end(), r.begin(), r.end());
    json rep = mgp::to_json(cell.report);
    rep["replicate"] = cell.replicate;
    reports.push_back(rep);
  }
  const auto single = mgp::best_count_rows(cmp, 0);
  const auto averaged = mgp::best_count_rows(cmp, -1);

  Common csv_only = c;
  csv_only.format = "csv";
  if (c.want_csv()) {
    emit(csv_only, "concentration", m, timer, [&](const auto& man) { return mgp::concentration_csv(rows, man); }, {});
    emit(csv_only, "best_counts", m, timer, [&](const auto& man) { return mgp::best_count_csv(single, man); }, {});
    emit(csv_only, "best_counts_replicate_mean", m, timer,
         [&](const auto& man) { return mgp::best_count_csv(averaged, man); }, {});
  }
  if (c.want_json()) {
    json medians = json::array();
    for (std::size_t s = 0; s < settings.size(); ++s) {
      for (int k0 : cfg.k0_values) {
        medians.push_back({{"setting", settings[s].label},
                           {"k0", k0},
                           {"median_of_medians", cmp.median_of_medians(static_cast<int>(s), k0)}});
      }
    }
    Common json_only = c;
    json_only.format = "json";
    emit(json_only, "simstudy", m, timer, {}, {{"reports", reports}, {"medians", medians}});
  }

  std::cout << "setting            k0  median_d  best_count\n";
  for (const auto& r : single) {
    std::cout << r.setting << std::string(r.setting.size() < 18 ? 18 - r.setting.size() : 1, ' ')
              << " " << r.k0 << "   " << mgp::format_number(std::round(r.median_d * 1000) / 1000) << "     "
              << r.best_count << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative gamma process shrinkage diagnostics"};
  app.require_subcommand(1);

  Common t1 = defaults(1.0, 1.1, 4, 1e6);
  auto* table1 = app.add_subcommand("table1", "quartiles of tau_h, theta_h and loading IQR");
  add_common(table1, t1);

  Common t2 = defaults(0.0, 0.0, 5, 1e6);
  std::string settings = "1:1,1:2,1:3,2:1,2:2,2:3";
  double cap = 100.0;
  double tol = 0.01;
  auto* table2 = app.add_subcommand("table2", "shrinkage regions per (a1, a2) setting");
  add_common(table2, t2, false);
  table2->add_option("--k", t2.k, "number of columns")->capture_default_str();
  table2->add_option("--settings", settings, "comma-separated a1:a2 pairs")->capture_default_str();
  table2->add_option("--cap", cap, "search ceiling")->capture_default_str();
  table2->add_option("--tol", tol, "relative bisection resolution")->capture_default_str();

  Common dg = defaults(2.0, 3.0, 5, 2e5);
  double dg_cap = 100.0;
  auto* diagnose = app.add_subcommand("diagnose", "shrinkage diagnostics for one (a1, a2, k)");
  add_common(diagnose, dg);
  diagnose->add_option("--cap", dg_cap, "search ceiling")->capture_default_str();

  Common sp = defaults(3.0, 3.0, 3, 1e6);
  std::string target;
  double eps = 2.0;
  auto* probe = app.add_subcommand("support-probe", "frequency of a box event around a target path");
  add_common(probe, sp);
  probe->add_option("--target", target, "comma-separated theta values (default: prior means)");
  probe->add_option("--eps", eps, "total L1 radius")->capture_default_str();

  Common dc = defaults(1.0, 1.0, 3, 0);
  auto* density = app.add_subcommand("density-check", "density ratios as theta decreases to 0");
  add_common(density, dc);

  Common ss = defaults(2.0, 3.0, 10, 0);
  std::string config_path;
  std::string preset;
  int replicates = 0;
  auto* simstudy = app.add_subcommand("simstudy", "factor-model posterior concentration study");
  add_common(simstudy, ss, false);
  simstudy->add_option("--config", config_path, "JSON config file");
  simstudy->add_option("--preset", preset, "full or desk")->check(CLI::IsMember({"full", "desk"}));
  simstudy->add_option("--replicates", replicates, "datasets per k0");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*table1) return run_table1(t1);
    if (*table2) return run_table2(t2, settings, cap, tol);
    if (*diagnose) return run_diagnose(dg, dg_cap);
    if (*probe) return run_support_probe(sp, target, eps);
    if (*density) return run_density_check(dc);
    if (*simstudy) return run_simstudy(ss, config_path, preset, replicates);
  } catch (const mgp::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
