#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bilintf/grid.hpp"
#include "bilintf/intervals.hpp"

namespace bilintf {

// Time-frequency rectangle I x omega.
struct Tile {
  Interval space;
  Interval freq;

  double area() const { return space.length * freq.length; }
};

inline bool tiles_equal(const Tile& a, const Tile& b) {
  return same_interval(a.space, b.space) && same_interval(a.freq, b.freq);
}
inline bool tiles_intersect(const Tile& a, const Tile& b) {
  return overlap(a.space, b.space) && overlap(a.freq, b.freq);
}

// Three frequency boxes over one space interval.  Component tiles are
// s_j = I_s x omega_j for j = 1,2,3; strip_index names the interval of the
// ambient collection whose strip {xi_2 - xi_1 in omega_n} the tri-tile tiles.
struct TriTile {
  Interval space;
  std::array<Interval, 3> freq;
  int strip_index = 0;

  Tile component(int j) const { return Tile{space, freq[static_cast<std::size_t>(j - 1)]}; }
};

struct TriTileAudit {
  bool zero_sum = false;        // 0 in omega_1 + omega_2 + omega_3
  bool strip_condition = false; // xi_2 - xi_1 in omega_n for all pairs
  bool strip_area = false;      // |I_s| |omega_n| in [1/2, 2]
  bool tile_bands = false;      // |I_s| in [1/10,10], component areas in [1/2, 2]

  bool all() const { return zero_sum && strip_condition && strip_area && tile_bands; }
};
TriTileAudit audit_tritile(const TriTile& s, const Interval& strip);

// Pairwise sparseness rule at equivalent scales: component tiles either
// coincide or have disjoint 2-dilates (in space or in frequency); coincident
// whole tri-tiles always conflict.
bool sparse_compatible(const TriTile& a, const TriTile& b);

// Finite tri-tile collection over an ambient strip collection.  Construction
// verifies that the space intervals form a grid with per-scale overlap <= 4
// and that the frequency boxes satisfy the pairwise nesting condition.
class TileCollection {
 public:
  TileCollection(std::vector<TriTile> tritiles, IntervalCollection strips);

  const std::vector<TriTile>& tritiles() const { return tiles_; }
  std::size_t size() const { return tiles_.size(); }
  const IntervalCollection& strips() const { return strips_; }
  int space_grid_constant() const { return space_grid_constant_; }
  const std::vector<std::vector<int>>& by_strip() const { return by_strip_; }

  TileCollection subcollection(const std::vector<int>& indices) const;

 private:
  std::vector<TriTile> tiles_;
  IntervalCollection strips_;
  int space_grid_constant_ = 0;
  std::vector<std::vector<int>> by_strip_;
};

// Tiles every strip {xi_2 - xi_1 in omega_n} with frequency boxes of side
// |omega_n|/2 inside freq_band (all three boxes) and space intervals of the
// given length covering [0, space_extent).  Emits at most one tri-tile per
// (space slot, strip, box position), with omega_3 = -(omega_1 + omega_2).
TileCollection build_tritile_cover(const IntervalCollection& strips, double space_extent,
                                   double space_scale, const Interval& freq_band);

bool is_sparse(const TileCollection& tc);

// Greedy split into K <= 64 sparse sub-collections (disjoint, union = input).
std::vector<TileCollection> sparse_split(const TileCollection& tc);

// Unit-L^2 function with spectrum inside 0.9*omega and fast spatial decay
// around I.  decay_exponent_measured is the fitted exponent M of
// |Phi(x)| <~ (1 + |x - c(I)|/|I|)^{-M} over dyadic shells.
struct WavePacket {
  Tile tile;
  SampledFunction values;
  double decay_exponent_measured = 0.0;
  double leakage = 0.0;  // max |coefficient| outside 0.9*omega / peak
};

WavePacket make_wave_packet(const Tile& tile, const GridSpec& grid);

enum class EnergyMode { greedy, exhaustive };

// A vectorized set: members sharing the base's component tile (one-step) or
// the two-step closure used by the decrement algorithms.  Indices refer to
// the analyzer's collection order.
struct VectorizedSet {
  int base = -1;
  int j = 0;
  int l = 0;
  bool two_step = false;
  std::vector<int> members;
};

struct EnergyResult {
  double value = 0.0;
  int k = 0;
  std::vector<int> bases;                  // one representative per selected family
  std::vector<std::vector<int>> families;  // member indices per family
};

struct DisjointnessReport {
  bool clause1 = true;  // j-component tiles pairwise disjoint across families
  bool clause2 = true;  // 2-dilated j-frequencies overlap => base spaces disjoint
  bool ok() const { return clause1 && clause2; }
};

struct DecrementAudit {
  double energy = 0.0;          // reference energy E
  double size_before = 0.0;
  double size_after = 0.0;
  double size_target = 0.0;     // 2^{-d-1} E
  double base_length_sum = 0.0; // sum |I_{s_i}| over selections
  double calg_ratio = 0.0;      // base_length_sum / 2^{2d}
  bool size_halving_ok = false;
  bool cover_ok = false;
  DisjointnessReport disjointness; // on the l-vectorized selection families
};

struct DecrementResult {
  std::vector<int> p1;
  std::vector<VectorizedSet> p2;
  std::vector<std::vector<int>> selection_families;  // vec^l(s_i) at selection time
  DecrementAudit audit;
};

struct LambdaLevel {
  int d = 0;
  double base_length_sum = 0.0;
  double m1 = 0.0, m2 = 0.0, m3_12 = 0.0, m3_21 = 0.0;  // sizes at level start
  double bound_d = 0.0;
  double lambda_d = 0.0;
  bool tree_ok = false;  // lambda_d <= C_tree * bound_d
};

struct LambdaBoundResult {
  double bound = 0.0;
  double model_sum_value = 0.0;
  std::vector<LambdaLevel> levels;
  std::map<int, std::vector<int>> partition;  // d -> tri-tile indices
  std::vector<int> zero_tail;                 // leftover tri-tiles with no mass
  double energies[3] = {0, 0, 0};
  double sizes[4] = {0, 0, 0, 0};  // size1, size2, size3_{1,2}, size3_{2,1}
  double theta[3] = {0, 0, 0};
  double interpolation_form = 0.0;  // prod E^{1-theta} S^{theta}
};

// Wave-packet model of a tri-tile collection on a grid: packets are built
// once per distinct component tile; all size/energy/model-sum quantities are
// evaluated from the cached inner-product tables.
class ModelSumAnalyzer {
 public:
  ModelSumAnalyzer(TileCollection tc, GridSpec grid);

  const TileCollection& collection() const { return tc_; }
  const GridSpec& grid() const { return grid_; }
  const WavePacket& packet(int tile_index, int j) const;

  // <f, Phi_{s_j}> for every tri-tile and component.
  std::vector<std::array<cplx, 3>> coefficients(const SampledFunction& f) const;
  // <h_{n(s)}, Phi_{s_3}> per tri-tile; shape-error unless h matches strips.
  std::vector<cplx> seq_coefficients(const std::vector<SampledFunction>& h) const;

  double size_vec(const SampledFunction& f, int j, int l, int* argmax = nullptr) const;
  double size_seq(const std::vector<SampledFunction>& h, int j, int l,
                  int* argmax = nullptr) const;
  EnergyResult energy_vec(const SampledFunction& f, int j, int l, EnergyMode mode) const;
  EnergyResult energy_seq(const std::vector<SampledFunction>& h) const;

  // Greedy decrement of Prop.-style selection: splits the collection into P1
  // (size halved against the reference energy) and the removed vectorized
  // closures P2.  energy_ref overrides the reference E (defaults to the
  // energy of the input collection).
  DecrementResult energy_decrement(const SampledFunction& f, int j, int l, int d,
                                   std::optional<double> energy_ref = std::nullopt) const;
  DecrementResult energy_decrement_seq(const std::vector<SampledFunction>& h, int j, int l, int d,
                                       std::optional<double> energy_ref = std::nullopt) const;

  double model_sum(const SampledFunction& f1, const SampledFunction& f2,
                   const std::vector<SampledFunction>& h) const;
  double model_sum_subset(const std::vector<int>& subset,
                          const std::vector<std::array<cplx, 3>>& a1,
                          const std::vector<std::array<cplx, 3>>& a2,
                          const std::vector<cplx>& b) const;

  // Exact Lambda over vec^{j,l}(base) together with the size-product bound
  // |I| * size^2_1 * size^1_2 * size^{j,l}_3.
  std::pair<double, double> tritile_estimate(const SampledFunction& f1, const SampledFunction& f2,
                                             const std::vector<SampledFunction>& h, int base,
                                             int j, int l) const;

  LambdaBoundResult lambda_bound(const SampledFunction& f1, const SampledFunction& f2,
                                 const std::vector<SampledFunction>& h, double p1, double p2,
                                 double p3) const;

  DisjointnessReport audit_strong_j_disjointness(const std::vector<std::vector<int>>& families,
                                                 const std::vector<int>& bases, int j) const;

  // Members of vec^l(s) / vec^{j,l}(s) within an optional subset mask.
  std::vector<int> vec_members(int tile_index, int component) const;
  std::vector<int> vec_closure(int tile_index, int j, int l) const;

  struct Impl;  // opaque packet and grouping tables

 private:
  std::shared_ptr<const Impl> impl_;
  TileCollection tc_;
  GridSpec grid_;
};

// CSV round trip (columns: I_center, I_length, w1_center, w1_length,
// w2_center, w2_length, w3_center, w3_length, strip_index).
void save_csv(const TileCollection& tc, const std::string& path);
TileCollection load_tritiles_csv(const std::string& path, IntervalCollection strips);

}  // namespace bilintf
