#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bilintf/grid.hpp"
#include "bilintf/intervals.hpp"
#include "bilintf/rng.hpp"
#include "bilintf/timefreq.hpp"

namespace bilintf {

struct GridConfig {
  double period = 64.0;
  std::size_t samples = 4096;

  GridSpec make() const { return GridSpec(period, samples); }
};

struct CollectionConfig {
  int count = 16;
  double length_min = 1.0;
  double length_max = 1.0;
  double separation = 2.5;
  double band = 80.0;  // centers drawn from [-band, band]
};

struct ExponentsConfig {
  double p = 4.0;
  double q = 4.0;
  double r = 2.0;
  double p3 = 4.0;  // third weak-type exponent (model-sum experiments)
};

struct SetsConfig {
  double e1 = 0.25;
  double e2 = 0.25;
  double e3 = 0.25;  // measure fractions of E_1, E_2, E_3
};

struct TilesConfig {
  int strips = 4;
  int max_tritiles = 300;
  double extent = 64.0;
  double scale = 1.0;
  double band = 8.0;
  double strip_band = 6.0;  // strip centers drawn from [-strip_band, strip_band]
};

struct SymbolConfig {
  std::string preset = "gaussian_ridge";  // gaussian_ridge | compact_bump_ridge |
                                          // random_translate_series
  double s = 1.5;
  double theta_x = 1.0;
  double theta_y = -1.0;
  int seed = 1;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  int trials = 8;
  std::string out = ".";
  bool plot = false;
  std::vector<int> sizes = {4, 16, 64};  // |Omega| values for bilinear_sweep

  GridConfig grid;
  CollectionConfig collection;
  ExponentsConfig exponents;
  SetsConfig sets;
  TilesConfig tiles;
  SymbolConfig symbol;
};

const std::vector<std::string>& experiment_names();

// key = value format with [section] tables; unknown keys are rejected with
// the offending field path (config-error).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// Boolean grid mask with measure (L/N) * popcount.
struct MeasurableSet {
  GridSpec grid;
  std::vector<std::uint8_t> mask;

  double measure() const;
  // F(E) membership: |f(x_j)| <= mask(x_j) pointwise.
  bool admits(const SampledFunction& f) const;
  static MeasurableSet random(const GridSpec& grid, double fraction, Rng& rng);
};

struct RunResult {
  int exit_code = 0;            // 0 ok, 2 config error, 3 numeric flag present
  bool numeric_flag = false;
  std::string csv_path;
  std::string svg_path;
  std::string summary;
};

// Runs one experiment: CSV rows per trial plus summary rows, deterministic
// bytes for identical configs.  Worker count is capped by BILIN_TF_THREADS.
RunResult run_experiment(const ExperimentConfig& cfg);

// Max over trials of |Lambda(f,g,h)| / prod |E_i|^{1/p_i} for indicator-
// dominated inputs on a seeded tri-tile instance.
double estimate_weak_type(const ExperimentConfig& cfg);

// Shared instance generators (also used by the acceptance suite).
IntervalCollection random_unit_collection(int count, double band, double separation, Rng& rng);
IntervalCollection random_disjoint_collection(int count, double band, double length_min,
                                              double length_max, Rng& rng);
TileCollection random_sparse_instance(const TilesConfig& tiles, std::uint64_t seed);

// Minimal SVG polyline of one CSV column (derived from the file only).
void render_csv_svg(const std::string& csv_path, const std::string& svg_path);

}  // namespace bilintf
