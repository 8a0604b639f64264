#include "mgp/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mgp {

using nlohmann::json;

namespace {

struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw IoError("csv: missing column '" + name + "'");
  }
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

CsvTable read_csv(const std::string& text) {
  CsvTable t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      t.comments.push_back(line.substr(2));
      continue;
    }
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw IoError("csv: ragged row '" + line + "'");
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw IoError("csv: no header row");
  return t;
}

json comment_json(const CsvTable& t, const std::string& key) {
  const std::string prefix = key + ": ";
  for (const auto& c : t.comments) {
    if (c.rfind(prefix, 0) == 0) return json::parse(c.substr(prefix.size()));
  }
  throw IoError("csv: missing '# " + key + "' preamble line");
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw IoError("csv: bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw IoError("csv: bad integer '" + s + "'");
  return v;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + '\n';
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

const char* prior_name(ColumnPrior p) {
  return p == ColumnPrior::multiplicative_gamma ? "multiplicative_gamma" : "independent_gamma";
}

}  // namespace

json RunManifest::to_json() const {
  return {{"command", command},
          {"parameters", parameters},
          {"seed", seed},
          {"sample_sizes", sample_sizes},
          {"tool_version", tool_version},
          {"wall_clock_seconds", wall_clock_seconds},
          {"outputs", outputs}};
}

std::string RunManifest::csv_preamble() const {
  std::string out;
  out += "# command: " + json(command).dump() + "\n";
  out += "# parameters: " + parameters.dump() + "\n";
  out += "# seed: " + std::to_string(seed) + "\n";
  out += "# sample_sizes: " + sample_sizes.dump() + "\n";
  out += "# tool_version: " + json(tool_version).dump() + "\n";
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// ---- Table 1 -------------------------------------------------------------------

json to_json(const QuantileTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"h", r.h}, {"tau", r.tau}, {"theta", r.theta}, {"lambda_iqr", r.lambda_iqr}});
  }
  return {{"a1", t.hp.a1}, {"a2", t.hp.a2}, {"k", t.hp.k},     {"samples", t.n},
          {"seed", t.seed}, {"probs", t.probs}, {"rows", rows}};
}

std::string quantile_table_csv(const QuantileTable& t, const RunManifest& m) {
  RunManifest meta = m;
  meta.parameters["a1"] = t.hp.a1;
  meta.parameters["a2"] = t.hp.a2;
  meta.parameters["k"] = t.hp.k;
  meta.parameters["samples"] = t.n;
  meta.parameters["probs"] = t.probs;
  meta.seed = t.seed;
  std::string out = meta.csv_preamble();

  std::vector<std::string> header{"h"};
  for (std::size_t i = 0; i < t.probs.size(); ++i) header.push_back("tau_q" + std::to_string(i + 1));
  for (std::size_t i = 0; i < t.probs.size(); ++i) header.push_back("theta_q" + std::to_string(i + 1));
  header.push_back("lambda_iqr");
  out += join(header);
  for (const auto& r : t.rows) {
    std::vector<std::string> cells{std::to_string(r.h)};
    for (double v : r.tau) cells.push_back(format_number(v));
    for (double v : r.theta) cells.push_back(format_number(v));
    cells.push_back(format_number(r.lambda_iqr));
    out += join(cells);
  }
  return out;
}

QuantileTable parse_quantile_table_csv(const std::string& text) {
  const CsvTable csv = read_csv(text);
  const json params = comment_json(csv, "parameters");
  QuantileTable t;
  t.hp.a1 = params.at("a1").get<double>();
  t.hp.a2 = params.at("a2").get<double>();
  t.hp.k = params.at("k").get<int>();
  t.n = params.at("samples").get<std::size_t>();
  t.probs = params.at("probs").get<std::vector<double>>();
  t.seed = comment_json(csv, "seed").get<std::uint64_t>();
  const std::size_t m = t.probs.size();
  for (const auto& row : csv.rows) {
    QuantileRow r;
    r.h = parse_int(row.at(csv.column("h")));
    for (std::size_t i = 0; i < m; ++i) {
      r.tau.push_back(parse_double(row.at(csv.column("tau_q" + std::to_string(i + 1)))));
      r.theta.push_back(parse_double(row.at(csv.column("theta_q" + std::to_string(i + 1)))));
    }
    r.lambda_iqr = parse_double(row.at(csv.column("lambda_iqr")));
    t.rows.push_back(std::move(r));
  }
  return t;
}

// ---- Table 2 -------------------------------------------------------------------

std::string format_bound_cell(const std::optional<double>& bound, double cap, bool indeterminate) {
  std::string cell = bound ? format_number(*bound) : ">" + format_number(cap);
  if (indeterminate) cell += '?';
  return cell;
}

json to_json(const ShrinkageRegion& r) {
  json bounds = json::array();
  for (const auto& b : r.bounds) {
    bounds.push_back({{"h", b.h},
                      {"bound", nullable(b.bound)},
                      {"exceeds_cap", b.exceeds_cap()},
                      {"indeterminate", b.indeterminate},
                      {"gap_at_crossing", b.gap_at_crossing},
                      {"se_at_crossing", b.se_at_crossing},
                      {"min_z_past_crossing", b.min_z},
                      {"sign_changes", b.sign_changes}});
  }
  return {{"a1", r.hp.a1},     {"a2", r.hp.a2},
          {"k", r.hp.k},       {"samples", r.n},
          {"seed", r.seed},    {"cap", r.cap},
          {"tol", r.tol},      {"bounds", bounds},
          {"intersection", nullable(r.intersection)},
          {"exceeds_cap", r.exceeds_cap()},
          {"indeterminate", r.any_indeterminate()}};
}

std::string shrinkage_table_csv(const std::vector<ShrinkageRegion>& regions, const RunManifest& m) {
  if (regions.empty()) throw IoError("shrinkage_table_csv: no regions");
  const int k = regions.front().hp.k;
  RunManifest meta = m;
  meta.parameters["k"] = k;
  meta.parameters["samples"] = regions.front().n;
  meta.parameters["cap"] = regions.front().cap;
  meta.parameters["tol"] = regions.front().tol;
  meta.seed = regions.front().seed;
  std::string out = meta.csv_preamble();

  std::vector<std::string> header{"a1", "a2"};
  for (int h = 1; h < k; ++h) header.push_back("h" + std::to_string(h) + "_to_h" + std::to_string(h + 1));
  header.push_back("intersection");
  out += join(header);
  for (const auto& r : regions) {
    if (r.hp.k != k) throw IoError("shrinkage_table_csv: regions disagree on k");
    std::vector<std::string> cells{format_number(r.hp.a1), format_number(r.hp.a2)};
    for (const auto& b : r.bounds) cells.push_back(format_bound_cell(b.bound, r.cap, b.indeterminate));
    cells.push_back(format_bound_cell(r.intersection, r.cap, r.any_indeterminate()));
    out += join(cells);
  }
  return out;
}

std::vector<ShrinkageRegion> parse_shrinkage_table_csv(const std::string& text) {
  const CsvTable csv = read_csv(text);
  const json params = comment_json(csv, "parameters");
  const int k = params.at("k").get<int>();
  std::vector<ShrinkageRegion> out;
  for (const auto& row : csv.rows) {
    ShrinkageRegion r;
    r.hp.a1 = parse_double(row.at(csv.column("a1")));
    r.hp.a2 = parse_double(row.at(csv.column("a2")));
    r.hp.k = k;
    r.n = params.at("samples").get<std::size_t>();
    r.cap = params.at("cap").get<double>();
    r.tol = params.at("tol").get<double>();
    r.seed = comment_json(csv, "seed").get<std::uint64_t>();
    for (int h = 1; h < k; ++h) {
      std::string cell = row.at(csv.column("h" + std::to_string(h) + "_to_h" + std::to_string(h + 1)));
      ShrinkageBound b;
      b.h = h;
      b.cap = r.cap;
      if (!cell.empty() && cell.back() == '?') {
        b.indeterminate = true;
        cell.pop_back();
      }
      if (!cell.empty() && cell.front() == '>') {
        if (parse_double(cell.substr(1)) != r.cap) throw IoError("csv: sentinel disagrees with cap");
      } else {
        b.bound = parse_double(cell);
        if (!r.intersection || *b.bound < *r.intersection) r.intersection = b.bound;
      }
      r.bounds.push_back(b);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---- density ratios ---------------------------------------------------------------

json to_json(const RatioCheck& c) {
  json traces = json::array();
  for (const auto& t : c.traces) {
    traces.push_back({{"theta_prev2", nullable(t.theta_prev2)},
                      {"log_ratio", t.log_ratio},
                      {"verdict", to_string(t.verdict)}});
  }
  return {{"h", c.h}, {"grid", c.grid}, {"traces", traces}, {"verdict", to_string(c.verdict)}};
}

std::string ratio_check_csv(const std::vector<RatioCheck>& checks, const RunManifest& m) {
  std::string out = m.csv_preamble();
  out += join({"h", "theta_prev2", "theta", "log_ratio", "verdict"});
  for (const auto& c : checks) {
    for (const auto& t : c.traces) {
      for (std::size_t i = 0; i < c.grid.size(); ++i) {
        out += join({std::to_string(c.h), t.theta_prev2 ? format_number(*t.theta_prev2) : "",
                     format_number(c.grid[i]), format_number(t.log_ratio[i]), to_string(t.verdict)});
      }
    }
  }
  return out;
}

// ---- factor model -------------------------------------------------------------------

json to_json(const FactorModelConfig& c) {
  return {{"p", c.p},
          {"n", c.n},
          {"k0", c.k0},
          {"k_trunc", c.k_trunc},
          {"a1", c.hp.a1},
          {"a2", c.hp.a2},
          {"upsilon", c.hp.upsilon},
          {"a_sigma", c.a_sigma},
          {"b_sigma", c.b_sigma},
          {"iterations", c.iterations},
          {"burnin", c.burnin},
          {"seed", c.seed}};
}

namespace {

json lower_rows(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    json row = json::array();
    for (Eigen::Index s = 0; s <= j && s < m.cols(); ++s) row.push_back(m(j, s));
    out.push_back(row);
  }
  return out;
}

}  // namespace

json to_json(const ConcentrationReport& r) {
  return {{"setting", r.label},
          {"prior", prior_name(r.prior)},
          {"config", to_json(r.config)},
          {"median_d", r.median_d},
          {"retained", r.retained},
          {"d_lower", lower_rows(r.d)},
          {"omega_mean_lower", lower_rows(r.omega_mean)},
          {"omega_true_lower", lower_rows(r.omega_true)},
          {"diagnostics",
           {{"all_steps_conjugate", true},
            {"ess_omega11", r.ess_omega11},
            {"ess_omega21", r.ess_omega21},
            {"jensen_holds", r.jensen_holds}}}};
}

std::vector<ConcentrationRow> concentration_rows(const ConcentrationReport& r, int replicate) {
  std::vector<ConcentrationRow> rows;
  for (Eigen::Index j = 0; j < r.d.rows(); ++j) {
    for (Eigen::Index s = 0; s <= j; ++s) {
      rows.push_back({r.label, r.config.k0, replicate, static_cast<int>(j) + 1,
                      static_cast<int>(s) + 1, r.d(j, s)});
    }
  }
  return rows;
}

std::string concentration_csv(const std::vector<ConcentrationRow>& rows, const RunManifest& m) {
  std::string out = m.csv_preamble();
  out += join({"setting", "k0", "replicate", "j", "s", "d_js"});
  for (const auto& r : rows) {
    out += join({r.setting, std::to_string(r.k0), std::to_string(r.replicate), std::to_string(r.j),
                 std::to_string(r.s), format_number(r.d)});
  }
  return out;
}

std::vector<ConcentrationRow> parse_concentration_csv(const std::string& text) {
  const CsvTable csv = read_csv(text);
  std::vector<ConcentrationRow> rows;
  for (const auto& row : csv.rows) {
    rows.push_back({row.at(csv.column("setting")), parse_int(row.at(csv.column("k0"))),
                    parse_int(row.at(csv.column("replicate"))), parse_int(row.at(csv.column("j"))),
                    parse_int(row.at(csv.column("s"))), parse_double(row.at(csv.column("d_js")))});
  }
  return rows;
}

std::vector<BestCountRow> best_count_rows(const SettingsComparison& c, int replicate) {
  std::vector<BestCountRow> rows;
  for (const auto& bc : c.best_counts) {
    if (bc.replicate != replicate) continue;
    for (std::size_t s = 0; s < c.settings.size(); ++s) {
      const int si = static_cast<int>(s);
      const double median = replicate < 0 ? c.median_of_medians(si, bc.k0)
                                          : c.report(si, bc.k0, replicate).median_d;
      rows.push_back({c.settings[s].label, bc.k0, bc.counts[s], median});
    }
  }
  return rows;
}

std::string best_count_csv(const std::vector<BestCountRow>& rows, const RunManifest& m) {
  std::string out = m.csv_preamble();
  out += join({"setting", "k0", "best_count", "median_d"});
  for (const auto& r : rows) {
    out += join({r.setting, std::to_string(r.k0), format_number(r.best_count), format_number(r.median_d)});
  }
  return out;
}

std::vector<BestCountRow> parse_best_count_csv(const std::string& text) {
  const CsvTable csv = read_csv(text);
  std::vector<BestCountRow> rows;
  for (const auto& row : csv.rows) {
    rows.push_back({row.at(csv.column("setting")), parse_int(row.at(csv.column("k0"))),
                    parse_double(row.at(csv.column("best_count"))),
                    parse_double(row.at(csv.column("median_d")))});
  }
  return rows;
}

// ---- simulation study config ------------------------------------------------------------

std::vector<PriorSetting> SimStudyConfig::prior_settings() const {
  std::vector<PriorSetting> out;
  for (const auto& [a1, a2] : settings) {
    MgpHyperparams hp = base.hp;
    hp.a1 = a1;
    hp.a2 = a2;
    hp.k = base.k_trunc;
    out.push_back({setting_label(hp, ColumnPrior::multiplicative_gamma), hp,
                   ColumnPrior::multiplicative_gamma});
  }
  if (baseline) {
    MgpHyperparams hp = base.hp;
    hp.k = base.k_trunc;
    out.push_back({setting_label(hp, ColumnPrior::independent_gamma), hp,
                   ColumnPrior::independent_gamma});
  }
  return out;
}

std::pair<int, int> preset_sweeps(const std::string& preset) {
  if (preset == "full") return {30000 + 5000, 5000};
  if (preset == "desk") return {2000 + 500, 500};
  throw DomainError("unknown preset '" + preset + "' (expected full or desk)");
}

SimStudyConfig parse_simstudy_config(const json& j) {
  SimStudyConfig cfg;
  std::vector<std::string> errors;
  if (!j.is_object()) throw DomainError("simstudy config must be a JSON object");

  static const std::set<std::string> known{"p",        "n",          "k0",      "k_trunc",
                                           "a_sigma",  "b_sigma",    "upsilon", "iterations",
                                           "burnin",   "seed",       "settings", "baseline",
                                           "replicates", "preset"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) errors.push_back("unknown key '" + key + "'");
  }

  auto read = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const json::exception&) {
      errors.push_back(std::string("key '") + key + "' has the wrong type");
    }
  };

  read("preset", cfg.preset);
  try {
    std::tie(cfg.base.iterations, cfg.base.burnin) = preset_sweeps(cfg.preset);
  } catch (const DomainError& e) {
    errors.emplace_back(e.what());
  }
  read("p", cfg.base.p);
  read("n", cfg.base.n);
  read("k_trunc", cfg.base.k_trunc);
  read("a_sigma", cfg.base.a_sigma);
  read("b_sigma", cfg.base.b_sigma);
  read("upsilon", cfg.base.hp.upsilon);
  read("iterations", cfg.base.iterations);
  read("burnin", cfg.base.burnin);
  read("seed", cfg.base.seed);
  read("baseline", cfg.baseline);
  read("replicates", cfg.replicates);
  if (j.contains("k0")) {
    if (j.at("k0").is_number_integer()) {
      cfg.k0_values = {j.at("k0").get<int>()};
    } else {
      read("k0", cfg.k0_values);
    }
  }
  if (j.contains("settings")) {
    cfg.settings.clear();
    const json& s = j.at("settings");
    if (!s.is_array()) {
      errors.push_back("key 'settings' must be an array of [a1, a2] pairs");
    } else {
      for (const auto& pair : s) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
          errors.push_back("each setting must be an [a1, a2] pair of numbers");
          continue;
        }
        cfg.settings.emplace_back(pair[0].get<double>(), pair[1].get<double>());
      }
    }
  }

  cfg.base.hp.k = cfg.base.k_trunc;
  cfg.base.k0 = cfg.k0_values.empty() ? 0 : cfg.k0_values.front();
  if (cfg.settings.empty() && !cfg.baseline) errors.push_back("settings list is empty");
  if (cfg.settings.empty() && j.contains("settings")) errors.push_back("settings list is empty");
  for (const auto& [a1, a2] : cfg.settings) {
    if (!(a1 > 0.0) || !(a2 > 0.0)) errors.push_back("setting hyperparameters must be > 0");
  }
  if (cfg.k0_values.empty()) errors.push_back("k0 list is empty");
  for (int k0 : cfg.k0_values) {
    if (k0 < 0) errors.push_back("k0 values must be >= 0");
  }
  if (cfg.replicates < 1) errors.push_back("replicates must be >= 1");
  try {
    cfg.base.validate();
  } catch (const DomainError& e) {
    std::istringstream lines(e.what());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) errors.push_back(line.substr(line.find("- ") + 2));
  }

  if (!errors.empty()) {
    std::string msg = "invalid simstudy config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw DomainError(msg);
  }
  return cfg;
}

SimStudyConfig load_simstudy_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw DomainError("simstudy config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_simstudy_config(j);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace mgp
