#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mgp/factor_model.hpp"
#include "mgp/shrinkage.hpp"

namespace mgp {

inline constexpr const char* kToolVersion = "0.3.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Provenance block embedded in every artifact. Timing fields appear only in
/// JSON so CSV payloads stay byte-identical across reruns.
struct RunManifest {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json sample_sizes = nlohmann::json::object();
  std::string tool_version = kToolVersion;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  /// "# key: value" lines, no timing.
  std::string csv_preamble() const;
};

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);
/// Fixed two-decimal rendering for console tables.
std::string format_fixed2(double v);

// ---- Table 1 ----------------------------------------------------------------
nlohmann::json to_json(const QuantileTable& t);
std::string quantile_table_csv(const QuantileTable& t, const RunManifest& m);
QuantileTable parse_quantile_table_csv(const std::string& text);

// ---- Table 2 ----------------------------------------------------------------
/// A bound cell: ">cap" for exceeds-cap, a trailing '?' marks an
/// indeterminate root.
std::string format_bound_cell(const std::optional<double>& bound, double cap, bool indeterminate);
nlohmann::json to_json(const ShrinkageRegion& r);
std::string shrinkage_table_csv(const std::vector<ShrinkageRegion>& regions, const RunManifest& m);
std::vector<ShrinkageRegion> parse_shrinkage_table_csv(const std::string& text);

// ---- density ratios ---------------------------------------------------------
nlohmann::json to_json(const RatioCheck& c);
std::string ratio_check_csv(const std::vector<RatioCheck>& checks, const RunManifest& m);

// ---- factor model -------------------------------------------------------------
nlohmann::json to_json(const FactorModelConfig& c);
nlohmann::json to_json(const ConcentrationReport& r);

/// Rows (setting, k0, replicate, j, s, d_js) for the lower triangle.
struct ConcentrationRow {
  std::string setting;
  int k0 = 0;
  int replicate = 0;
  int j = 0;
  int s = 0;
  double d = 0.0;
  bool operator==(const ConcentrationRow&) const = default;
};
std::vector<ConcentrationRow> concentration_rows(const ConcentrationReport& r, int replicate);
std::string concentration_csv(const std::vector<ConcentrationRow>& rows, const RunManifest& m);
std::vector<ConcentrationRow> parse_concentration_csv(const std::string& text);

/// Rows (setting, k0, best_count, median_d).
struct BestCountRow {
  std::string setting;
  int k0 = 0;
  double best_count = 0.0;
  double median_d = 0.0;
  bool operator==(const BestCountRow&) const = default;
};
std::vector<BestCountRow> best_count_rows(const SettingsComparison& c, int replicate);
std::string best_count_csv(const std::vector<BestCountRow>& rows, const RunManifest& m);
std::vector<BestCountRow> parse_best_count_csv(const std::string& text);

// ---- simulation study config -------------------------------------------------

struct SimStudyConfig {
  FactorModelConfig base;
  std::vector<std::pair<double, double>> settings{{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}};
  bool baseline = true;
  std::vector<int> k0_values{2, 6};
  int replicates = 1;
  std::string preset = "full";

  std::vector<PriorSetting> prior_settings() const;
};

/// Sweep counts of the named presets: full = 30,000 retained after 5,000
/// burn-in, desk = 2,000 after 500.
std::pair<int, int> preset_sweeps(const std::string& preset);

/// Parses and validates a JSON config. Keys mirror FactorModelConfig fields
/// plus settings, baseline, k0, replicates and preset. Every problem is
/// collected and reported together.
SimStudyConfig parse_simstudy_config(const nlohmann::json& j);
SimStudyConfig load_simstudy_config(const std::filesystem::path& path);

// ---- files --------------------------------------------------------------------
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace mgp
