#include "bilintf/timefreq.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace bilintf {

namespace {

constexpr double kBandSlack = 1e-12;
// k-scan range for the energy sandwich (covers the double dynamic range).
constexpr int kEnergyKMin = -60;
constexpr int kEnergyKMax = 60;
// Tri-tile estimate constant: the size-product chain is pure Cauchy-Schwarz,
// so the mathematical constant is 1.
constexpr double kTreeConstant = 1.0;

bool in_band(double value, double lo, double hi) {
  return value >= lo * (1.0 - kBandSlack) - kBandSlack &&
         value <= hi * (1.0 + kBandSlack) + kBandSlack;
}

double pow2(int e) { return std::ldexp(1.0, e); }

}  // namespace

TriTileAudit audit_tritile(const TriTile& s, const Interval& strip) {
  TriTileAudit a;
  const double lo_sum = s.freq[0].lo() + s.freq[1].lo() + s.freq[2].lo();
  const double hi_sum = s.freq[0].hi() + s.freq[1].hi() + s.freq[2].hi();
  a.zero_sum = lo_sum <= kBandSlack && hi_sum >= -kBandSlack;
  const double diff_lo = s.freq[1].lo() - s.freq[0].hi();
  const double diff_hi = s.freq[1].hi() - s.freq[0].lo();
  a.strip_condition = diff_lo >= strip.lo() - kBandSlack && diff_hi <= strip.hi() + kBandSlack;
  a.strip_area = in_band(s.space.length * strip.length, 0.5, 2.0);
  a.tile_bands = in_band(s.space.length, 0.1, 10.0);
  for (int j = 1; j <= 3 && a.tile_bands; ++j)
    a.tile_bands = in_band(s.component(j).area(), 0.5, 2.0);
  return a;
}

bool sparse_compatible(const TriTile& a, const TriTile& b) {
  bool identical = same_interval(a.space, b.space) && a.strip_index == b.strip_index;
  for (int c = 0; c < 3 && identical; ++c) identical = same_interval(a.freq[c], b.freq[c]);
  if (identical) return false;  // coincident distinct members break rank one
  for (int j = 1; j <= 3; ++j) {
    const Tile ta = a.component(j);
    const Tile tb = b.component(j);
    const double ratio = ta.space.length / tb.space.length;
    if (ratio < 0.5 || ratio > 2.0) continue;  // only equivalent scales constrained
    if (tiles_equal(ta, tb)) continue;
    const bool space_sep = !overlap(ta.space.dilated(2.0), tb.space.dilated(2.0));
    const bool freq_sep = !overlap(ta.freq.dilated(2.0), tb.freq.dilated(2.0));
    if (!space_sep && !freq_sep) return false;
  }
  return true;
}

namespace {

// Max closed-interval overlap depth via endpoint sweep.
int sweep_overlap(std::vector<std::pair<double, double>> intervals) {
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * intervals.size());
  for (const auto& [lo, hi] : intervals) {
    events.emplace_back(lo, +1);
    events.emplace_back(hi, -1);
  }
  std::sort(events.begin(), events.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first < y.first;
    return x.second > y.second;
  });
  int depth = 0, best = 0;
  for (const auto& [pos, delta] : events) {
    (void)pos;
    depth += delta;
    best = std::max(best, depth);
  }
  return best;
}

}  // namespace

TileCollection::TileCollection(std::vector<TriTile> tritiles, IntervalCollection strips)
    : tiles_(std::move(tritiles)), strips_(std::move(strips)) {
  by_strip_.assign(strips_.size(), {});
  for (std::size_t i = 0; i < tiles_.size(); ++i) {
    const int n = tiles_[i].strip_index;
    if (n < 0 || static_cast<std::size_t>(n) >= strips_.size())
      fail("parameter-error", "tri-tile strip index out of range");
    by_strip_[static_cast<std::size_t>(n)].push_back(static_cast<int>(i));
  }

  // def:grid certificate for the space intervals (as a set, per scale)
  std::vector<Interval> distinct;
  for (const auto& s : tiles_) {
    bool seen = false;
    for (const auto& d : distinct)
      if (same_interval(d, s.space)) {
        seen = true;
        break;
      }
    if (!seen) distinct.push_back(s.space);
  }
  space_grid_constant_ = 0;
  if (!distinct.empty()) {
    double lmin = distinct[0].length, lmax = distinct[0].length;
    for (const auto& d : distinct) {
      lmin = std::min(lmin, d.length);
      lmax = std::max(lmax, d.length);
    }
    const int kmin = static_cast<int>(std::floor(std::log2(lmin))) - 1;
    const int kmax = static_cast<int>(std::ceil(std::log2(lmax))) + 1;
    for (int k = kmin; k <= kmax; ++k) {
      std::vector<std::pair<double, double>> bucket;
      for (const auto& d : distinct)
        if (d.length >= pow2(k - 1) && d.length <= pow2(k + 1))
          bucket.emplace_back(d.lo(), d.hi());
      if (!bucket.empty()) space_grid_constant_ = std::max(space_grid_constant_, sweep_overlap(bucket));
    }
  }
  if (space_grid_constant_ > 4)
    fail("assumption-error", "space intervals exceed the per-scale overlap bound C0 = 4");

  // nesting condition over the component frequency boxes (pairwise)
  std::vector<Interval> boxes;
  for (const auto& s : tiles_)
    for (const auto& w : s.freq) {
      bool seen = false;
      for (const auto& b : boxes)
        if (same_interval(b, w)) {
          seen = true;
          break;
        }
      if (!seen) boxes.push_back(w);
    }
  for (const auto& parent : boxes) {
    for (const auto& s : tiles_) {
      bool strict = false;
      for (const auto& w : s.freq)
        if (parent.contains(w) && !same_interval(parent, w)) strict = true;
      if (!strict) continue;
      for (const auto& w : s.freq)
        if (!parent.contains(w))
          fail("assumption-error", "frequency boxes violate the nesting condition");
    }
  }
}

TileCollection TileCollection::subcollection(const std::vector<int>& indices) const {
  std::vector<TriTile> subset;
  subset.reserve(indices.size());
  for (int i : indices) subset.push_back(tiles_[static_cast<std::size_t>(i)]);
  return TileCollection(std::move(subset), strips_);
}

TileCollection build_tritile_cover(const IntervalCollection& strips, double space_extent,
                                   double space_scale, const Interval& freq_band) {
  if (!strips.assumption_lengths())
    fail("assumption-error", "strip lengths must lie in [1/10, 10]");
  if (space_scale < 0.1 || space_scale > 10.0)
    fail("assumption-error", "space scale must lie in [1/10, 10]");
  if (!(space_extent > 0.0)) fail("parameter-error", "space extent must be positive");
  for (const auto& w : strips.intervals()) {
    const double area = space_scale * w.length;
    // component tiles have sides |omega|/2, |omega|/2 and |omega|, so the
    // factor-2 area band forces scale * |omega| in [1, 2]
    if (area < 1.0 - kBandSlack || area > 2.0 + kBandSlack)
      fail("assumption-error", "space scale times strip length must lie in [1, 2]");
  }

  const int slots = static_cast<int>(std::ceil(space_extent / space_scale - kBandSlack));
  std::vector<TriTile> tiles;
  for (std::size_t n = 0; n < strips.size(); ++n) {
    const Interval& strip = strips.intervals()[n];
    // uniqueness of the hosting strip (equal-length strips: exact duplicates)
    int hosts = 0;
    for (const auto& other : strips.intervals())
      if (other.contains(strip)) ++hosts;
    if (hosts != 1) continue;

    const double b = 0.5 * strip.length;
    const int a_lo = static_cast<int>(std::floor((freq_band.lo() - freq_band.lo()) / b));
    (void)a_lo;
    for (int a = 0;; ++a) {
      const Interval box1{freq_band.lo() + (static_cast<double>(a) + 0.5) * b, b};
      if (box1.hi() > freq_band.hi() + kBandSlack) break;
      const Interval box2{box1.center + strip.center, b};
      const Interval box3{-(box1.center + box2.center), 2.0 * b};
      if (!freq_band.contains(box2) || !freq_band.contains(box3)) continue;
      for (int m = 0; m < slots; ++m) {
        const Interval space{(static_cast<double>(m) + 0.5) * space_scale, space_scale};
        tiles.push_back(TriTile{space, {box1, box2, box3}, static_cast<int>(n)});
      }
    }
  }
  return TileCollection(std::move(tiles), strips);
}

bool is_sparse(const TileCollection& tc) {
  const auto& tiles = tc.tritiles();
  for (std::size_t i = 0; i < tiles.size(); ++i)
    for (std::size_t j = i + 1; j < tiles.size(); ++j)
      if (!sparse_compatible(tiles[i], tiles[j])) return false;
  return true;
}

std::vector<TileCollection> sparse_split(const TileCollection& tc) {
  const auto& tiles = tc.tritiles();
  std::vector<std::vector<int>> classes;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    bool placed = false;
    for (auto& cls : classes) {
      bool ok = true;
      for (int m : cls)
        if (!sparse_compatible(tiles[i], tiles[static_cast<std::size_t>(m)])) {
          ok = false;
          break;
        }
      if (ok) {
        cls.push_back(static_cast<int>(i));
        placed = true;
        break;
      }
    }
    if (!placed) {
      if (classes.size() >= 64) fail("size-error", "sparse split requires more than 64 classes");
      classes.push_back({static_cast<int>(i)});
    }
  }
  std::vector<TileCollection> out;
  out.reserve(classes.size());
  for (const auto& cls : classes) out.push_back(tc.subcollection(cls));
  return out;
}

WavePacket make_wave_packet(const Tile& tile, const GridSpec& grid) {
  const Interval core = tile.freq.dilated(0.9);
  if (tile.freq.lo() <= -grid.nyquist() || tile.freq.hi() >= grid.nyquist())
    fail("band-error", "tile frequency interval exceeds the Nyquist band");
  if (tile.space.length < 4.0 * grid.spatial_step())
    fail("parameter-error", "space interval shorter than four grid steps");

  const BumpSymbol bump{core, 0.5, {}};
  std::vector<cplx> coeffs(grid.samples(), 0.0);
  bool any = false;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const double xi = grid.xi(k);
    const double env = bump(xi);
    if (env == 0.0) continue;
    any = true;
    const double phase = -xi * tile.space.center;
    coeffs[static_cast<std::size_t>(k - grid.k_min())] = env * cplx{std::cos(phase), std::sin(phase)};
  }
  if (!any) fail("parameter-error", "frequency interval unresolved by the grid");

  SampledFunction raw = function_from_spectrum(grid, std::move(coeffs));
  const double norm = lp_norm(raw, 2.0);
  SampledFunction values = cplx{1.0 / norm, 0.0} * raw;

  WavePacket packet{tile, values, 0.0, 0.0};

  // spectrum leakage outside 0.9*omega relative to the peak coefficient
  const auto& spec = packet.values.spectrum();
  double peak = 0.0, outside = 0.0;
  for (int k = grid.k_min(); k <= grid.k_max(); ++k) {
    const double mag = std::abs(spec[static_cast<std::size_t>(k - grid.k_min())]);
    peak = std::max(peak, mag);
    if (!core.contains(grid.xi(k))) outside = std::max(outside, mag);
  }
  packet.leakage = peak > 0.0 ? outside / peak : 0.0;

  // decay exponent: least-squares slope of log shell-max against
  // log(1 + d/|I|) over dyadic-ish shells away from the wrap-around
  const double L = grid.period();
  double center = std::fmod(tile.space.center, L);
  if (center < 0.0) center += L;
  double peak_abs = 0.0;
  for (const auto& z : values.samples()) peak_abs = std::max(peak_abs, std::abs(z));
  std::vector<std::pair<double, double>> points;  // (log(1+d/|I|), log shellmax)
  double shell_lo = 1.25 * tile.space.length;
  const double reach = 0.4 * L;
  while (shell_lo * 1.6 <= reach) {
    const double shell_hi = shell_lo * 1.6;
    double shell_max = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
      double dist = std::abs(grid.x(j) - center);
      dist = std::min(dist, L - dist);
      if (dist >= shell_lo && dist < shell_hi)
        shell_max = std::max(shell_max, std::abs(values.samples()[j]));
    }
    if (shell_max > peak_abs * 1e-12) {
      const double mid = 0.5 * (shell_lo + shell_hi);
      points.emplace_back(std::log(1.0 + mid / tile.space.length), std::log(shell_max));
    }
    shell_lo = shell_hi;
  }
  if (points.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    packet.decay_exponent_measured = -slope;
  }
  return packet;
}

// ---------------------------------------------------------------------------
// ModelSumAnalyzer

struct ModelSumAnalyzer::Impl {
  std::vector<WavePacket> packets;
  std::vector<std::array<int, 3>> packet_of;             // per tri-tile, per component
  std::array<std::vector<int>, 3> group_of;               // component -> group id per tile
  std::array<std::vector<std::vector<int>>, 3> groups;    // component -> member lists
};

namespace {

using CoefTable = std::vector<std::array<cplx, 3>>;
using Mask = std::vector<char>;

struct TileKeyLess {
  bool operator()(const std::array<double, 4>& a, const std::array<double, 4>& b) const {
    return a < b;
  }
};

std::array<double, 4> tile_key(const TriTile& s, int c) {
  return {s.space.center, s.space.length, s.freq[static_cast<std::size_t>(c)].center,
          s.freq[static_cast<std::size_t>(c)].length};
}

double group_space_length(const std::vector<TriTile>& tiles, const std::vector<int>& group) {
  return tiles[static_cast<std::size_t>(group.front())].space.length;
}

// sup_s |I_s|^{-1/2} ( sum_{s' in vec^l(s) ∩ mask} |a_{s'}|_j^2 )^{1/2}
double size_vec_table(const std::vector<TriTile>& tiles, const ModelSumAnalyzer::Impl& im,
                      const CoefTable& a, int j, int l, const Mask& mask, int* argmax) {
  double best = 0.0;
  int arg = -1;
  for (const auto& group : im.groups[static_cast<std::size_t>(l - 1)]) {
    double mass = 0.0;
    int first = -1;
    for (int m : group) {
      if (!mask[static_cast<std::size_t>(m)]) continue;
      if (first < 0) first = m;
      mass += std::norm(a[static_cast<std::size_t>(m)][static_cast<std::size_t>(j - 1)]);
    }
    if (first < 0) continue;
    const double value = std::sqrt(mass / group_space_length(tiles, group));
    if (value > best) {
      best = value;
      arg = first;
    }
  }
  if (argmax) *argmax = arg;
  return best;
}

// Closure vec^{first,second}(seed group) within the mask; stamps deduplicate.
void collect_closure(const ModelSumAnalyzer::Impl& im, int tile, int first, int second,
                     const Mask& mask, std::vector<int>& out, std::vector<int>& stamp,
                     int stamp_id) {
  out.clear();
  const auto& g1 = im.groups[static_cast<std::size_t>(first - 1)]
                            [static_cast<std::size_t>(im.group_of[static_cast<std::size_t>(
                                first - 1)][static_cast<std::size_t>(tile)])];
  for (int t : g1) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    const auto& g2 = im.groups[static_cast<std::size_t>(second - 1)]
                              [static_cast<std::size_t>(im.group_of[static_cast<std::size_t>(
                                  second - 1)][static_cast<std::size_t>(t)])];
    for (int u : g2) {
      if (!mask[static_cast<std::size_t>(u)]) continue;
      if (stamp[static_cast<std::size_t>(u)] == stamp_id) continue;
      stamp[static_cast<std::size_t>(u)] = stamp_id;
      out.push_back(u);
    }
  }
  std::sort(out.begin(), out.end());
}

double size_seq_table(const std::vector<TriTile>& tiles, const ModelSumAnalyzer::Impl& im,
                      const std::vector<cplx>& b, int j, int l, const Mask& mask, int* argmax) {
  double best = 0.0;
  int arg = -1;
  std::vector<int> stamp(tiles.size(), -1);
  std::vector<int> closure;
  int stamp_id = 0;
  for (const auto& group : im.groups[static_cast<std::size_t>(j - 1)]) {
    int first = -1;
    for (int m : group)
      if (mask[static_cast<std::size_t>(m)]) {
        first = m;
        break;
      }
    if (first < 0) continue;
    collect_closure(im, first, j, l, mask, closure, stamp, stamp_id++);
    double mass = 0.0;
    for (int u : closure) mass += std::norm(b[static_cast<std::size_t>(u)]);
    const double value = std::sqrt(mass / group_space_length(tiles, group));
    if (value > best) {
      best = value;
      arg = first;
    }
  }
  if (argmax) *argmax = arg;
  return best;
}

struct EnergyCandidate {
  int group_id;
  std::vector<int> members;  // within mask
  double mass;               // sum |a|^2 over members
  double space_length;
  Interval base_space;
};

std::vector<EnergyCandidate> energy_candidates(const std::vector<TriTile>& tiles,
                                               const ModelSumAnalyzer::Impl& im,
                                               const CoefTable& a, int j, int l,
                                               const Mask& mask) {
  std::vector<EnergyCandidate> cands;
  const auto& groups = im.groups[static_cast<std::size_t>(l - 1)];
  for (std::size_t g = 0; g < groups.size(); ++g) {
    EnergyCandidate c;
    c.group_id = static_cast<int>(g);
    for (int m : groups[g])
      if (mask[static_cast<std::size_t>(m)]) c.members.push_back(m);
    if (c.members.empty()) continue;
    c.mass = 0.0;
    for (int m : c.members)
      c.mass += std::norm(a[static_cast<std::size_t>(m)][static_cast<std::size_t>(j - 1)]);
    if (!(c.mass > 0.0)) continue;
    c.space_length = group_space_length(tiles, groups[g]);
    c.base_space = tiles[static_cast<std::size_t>(c.members.front())].space;
    cands.push_back(std::move(c));
  }
  return cands;
}

// Strong j-disjointness conflict between two candidate families.
bool families_conflict(const std::vector<TriTile>& tiles, const std::vector<int>& fa,
                       const Interval& base_a, const std::vector<int>& fb,
                       const Interval& base_b, int j) {
  for (int u : fa) {
    const Tile tu = tiles[static_cast<std::size_t>(u)].component(j);
    for (int v : fb) {
      const Tile tv = tiles[static_cast<std::size_t>(v)].component(j);
      if (tiles_intersect(tu, tv)) return true;
      if (overlap(tu.freq.dilated(2.0), tv.freq.dilated(2.0)) && overlap(base_a, base_b))
        return true;
    }
  }
  return false;
}

bool sandwich_admissible(const EnergyCandidate& c, int k) {
  return pow2(2 * k) * c.space_length <= c.mass && c.mass <= pow2(2 * k + 2) * c.space_length;
}

EnergyResult energy_vec_table(const std::vector<TriTile>& tiles, const ModelSumAnalyzer::Impl& im,
                              const CoefTable& a, int j, int l, EnergyMode mode,
                              const Mask& mask) {
  const auto cands = energy_candidates(tiles, im, a, j, l, mask);
  EnergyResult best;
  if (cands.empty()) return best;
  if (mode == EnergyMode::exhaustive && cands.size() > 12)
    fail("size-error", "exhaustive energy limited to 12 candidate vectorized sets");

  // conflict matrix
  const std::size_t nc = cands.size();
  std::vector<char> conflict(nc * nc, 0);
  for (std::size_t x = 0; x < nc; ++x)
    for (std::size_t y = x + 1; y < nc; ++y) {
      const bool c = families_conflict(tiles, cands[x].members, cands[x].base_space,
                                       cands[y].members, cands[y].base_space, j);
      conflict[x * nc + y] = conflict[y * nc + x] = c;
    }

  // candidate-relevant k values only
  std::vector<int> ks;
  for (const auto& c : cands) {
    const int kf = static_cast<int>(std::floor(0.5 * std::log2(c.mass / c.space_length)));
    for (int k = kf - 1; k <= kf + 1; ++k)
      if (k >= kEnergyKMin && k <= kEnergyKMax && sandwich_admissible(c, k)) ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  for (int k : ks) {
    std::vector<std::size_t> admissible;
    for (std::size_t x = 0; x < nc; ++x)
      if (sandwich_admissible(cands[x], k)) admissible.push_back(x);
    if (admissible.empty()) continue;

    std::vector<std::size_t> chosen;
    if (mode == EnergyMode::greedy) {
      std::vector<std::size_t> order = admissible;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (cands[x].space_length != cands[y].space_length)
          return cands[x].space_length > cands[y].space_length;
        if (cands[x].mass != cands[y].mass) return cands[x].mass > cands[y].mass;
        return x < y;
      });
      for (std::size_t x : order) {
        bool ok = true;
        for (std::size_t y : chosen)
          if (conflict[x * nc + y]) {
            ok = false;
            break;
          }
        if (ok) chosen.push_back(x);
      }
    } else {
      // exhaustive over subsets of the admissible list
      const std::size_t na = admissible.size();
      double best_weight = -1.0;
      std::uint32_t best_set = 0;
      for (std::uint32_t set = 1; set < (1u << na); ++set) {
        bool ok = true;
        double weight = 0.0;
        for (std::size_t x = 0; x < na && ok; ++x) {
          if (!(set & (1u << x))) continue;
          for (std::size_t y = x + 1; y < na && ok; ++y)
            if ((set & (1u << y)) && conflict[admissible[x] * nc + admissible[y]]) ok = false;
          weight += cands[admissible[x]].space_length;
        }
        if (ok && weight > best_weight) {
          best_weight = weight;
          best_set = set;
        }
      }
      for (std::size_t x = 0; x < na; ++x)
        if (best_set & (1u << x)) chosen.push_back(admissible[x]);
    }

    double weight = 0.0;
    for (std::size_t x : chosen) weight += cands[x].space_length;
    const double value = pow2(k) * std::sqrt(weight);
    if (value > best.value) {
      best.value = value;
      best.k = k;
      best.bases.clear();
      best.families.clear();
      for (std::size_t x : chosen) {
        best.bases.push_back(cands[x].members.front());
        best.families.push_back(cands[x].members);
      }
    }
  }
  return best;
}

EnergyResult energy_seq_table(const std::vector<cplx>& b, const Mask& mask) {
  // the summand is nonnegative, so the supremum over collections of distinct
  // tri-tiles is attained by the full collection
  EnergyResult r;
  double mass = 0.0;
  std::vector<int> all;
  for (std::size_t m = 0; m < b.size(); ++m)
    if (mask[m]) {
      mass += std::norm(b[m]);
      all.push_back(static_cast<int>(m));
    }
  r.value = std::sqrt(mass);
  if (!all.empty()) {
    r.bases.push_back(all.front());
    r.families.push_back(std::move(all));
  }
  return r;
}

}  // namespace

ModelSumAnalyzer::ModelSumAnalyzer(TileCollection tc, GridSpec grid)
    : tc_(std::move(tc)), grid_(grid) {
  auto impl = std::make_shared<Impl>();
  const auto& tiles = tc_.tritiles();
  impl->packet_of.resize(tiles.size());
  std::map<std::array<double, 4>, int, TileKeyLess> packet_index;
  std::array<std::map<std::array<double, 4>, int, TileKeyLess>, 3> group_index;
  for (int c = 0; c < 3; ++c) impl->group_of[static_cast<std::size_t>(c)].resize(tiles.size());

  for (std::size_t i = 0; i < tiles.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const auto key = tile_key(tiles[i], c);
      auto [it, fresh] = packet_index.emplace(key, static_cast<int>(impl->packets.size()));
      if (fresh)
        impl->packets.push_back(make_wave_packet(tiles[i].component(c + 1), grid_));
      impl->packet_of[i][static_cast<std::size_t>(c)] = it->second;

      auto& gidx = group_index[static_cast<std::size_t>(c)];
      auto [git, gfresh] =
          gidx.emplace(key, static_cast<int>(impl->groups[static_cast<std::size_t>(c)].size()));
      if (gfresh) impl->groups[static_cast<std::size_t>(c)].push_back({});
      impl->groups[static_cast<std::size_t>(c)][static_cast<std::size_t>(git->second)].push_back(
          static_cast<int>(i));
      impl->group_of[static_cast<std::size_t>(c)][i] = git->second;
    }
  }
  impl_ = std::move(impl);
}

const WavePacket& ModelSumAnalyzer::packet(int tile_index, int j) const {
  if (tile_index < 0 || static_cast<std::size_t>(tile_index) >= tc_.size() || j < 1 || j > 3)
    fail("state-error", "packet index out of range");
  return impl_->packets[static_cast<std::size_t>(
      impl_->packet_of[static_cast<std::size_t>(tile_index)][static_cast<std::size_t>(j - 1)])];
}

std::vector<std::array<cplx, 3>> ModelSumAnalyzer::coefficients(const SampledFunction& f) const {
  if (f.grid() != grid_) fail("grid-error", "function grid does not match the analyzer");
  std::vector<cplx> per_packet(impl_->packets.size());
  for (std::size_t p = 0; p < impl_->packets.size(); ++p)
    per_packet[p] = inner_product(f, impl_->packets[p].values);
  std::vector<std::array<cplx, 3>> a(tc_.size());
  for (std::size_t i = 0; i < tc_.size(); ++i)
    for (int c = 0; c < 3; ++c)
      a[i][static_cast<std::size_t>(c)] =
          per_packet[static_cast<std::size_t>(impl_->packet_of[i][static_cast<std::size_t>(c)])];
  return a;
}

std::vector<cplx> ModelSumAnalyzer::seq_coefficients(const std::vector<SampledFunction>& h) const {
  if (h.size() != tc_.strips().size())
    fail("shape-error", "sequence length must match the strip count");
  for (const auto& hn : h)
    if (hn.grid() != grid_) fail("grid-error", "sequence grid does not match the analyzer");
  // inner products against the distinct third-component packets only
  std::vector<cplx> b(tc_.size());
  std::map<std::pair<int, int>, cplx> cache;  // (packet, strip) -> value
  for (std::size_t i = 0; i < tc_.size(); ++i) {
    const int p = impl_->packet_of[i][2];
    const int n = tc_.tritiles()[i].strip_index;
    const auto key = std::make_pair(p, n);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, inner_product(h[static_cast<std::size_t>(n)],
                                            impl_->packets[static_cast<std::size_t>(p)].values))
               .first;
    b[i] = it->second;
  }
  return b;
}

double ModelSumAnalyzer::size_vec(const SampledFunction& f, int j, int l, int* argmax) const {
  if (j == l || j < 1 || j > 2 || l < 1 || l > 2) fail("parameter-error", "need {j,l} = {1,2}");
  const Mask mask(tc_.size(), 1);
  return size_vec_table(tc_.tritiles(), *impl_, coefficients(f), j, l, mask, argmax);
}

double ModelSumAnalyzer::size_seq(const std::vector<SampledFunction>& h, int j, int l,
                                  int* argmax) const {
  if (j == l || j < 1 || j > 2 || l < 1 || l > 2) fail("parameter-error", "need {j,l} = {1,2}");
  const Mask mask(tc_.size(), 1);
  return size_seq_table(tc_.tritiles(), *impl_, seq_coefficients(h), j, l, mask, argmax);
}

EnergyResult ModelSumAnalyzer::energy_vec(const SampledFunction& f, int j, int l,
                                          EnergyMode mode) const {
  if (j == l || j < 1 || j > 2 || l < 1 || l > 2) fail("parameter-error", "need {j,l} = {1,2}");
  const Mask mask(tc_.size(), 1);
  return energy_vec_table(tc_.tritiles(), *impl_, coefficients(f), j, l, mode, mask);
}

EnergyResult ModelSumAnalyzer::energy_seq(const std::vector<SampledFunction>& h) const {
  const Mask mask(tc_.size(), 1);
  return energy_seq_table(seq_coefficients(h), mask);
}

DisjointnessReport ModelSumAnalyzer::audit_strong_j_disjointness(
    const std::vector<std::vector<int>>& families, const std::vector<int>& bases, int j) const {
  DisjointnessReport report;
  const auto& tiles = tc_.tritiles();
  for (std::size_t x = 0; x < families.size(); ++x) {
    for (std::size_t y = x + 1; y < families.size(); ++y) {
      const Interval& bx = tiles[static_cast<std::size_t>(bases[x])].space;
      const Interval& by = tiles[static_cast<std::size_t>(bases[y])].space;
      for (int u : families[x]) {
        const Tile tu = tiles[static_cast<std::size_t>(u)].component(j);
        for (int v : families[y]) {
          const Tile tv = tiles[static_cast<std::size_t>(v)].component(j);
          if (tiles_intersect(tu, tv)) report.clause1 = false;
          if (overlap(tu.freq.dilated(2.0), tv.freq.dilated(2.0)) && overlap(bx, by))
            report.clause2 = false;
        }
      }
    }
  }
  return report;
}

namespace {

struct SelectionState {
  std::vector<VectorizedSet> p2;
  std::vector<std::vector<int>> families;
  double base_length_sum = 0.0;
};

// Shared greedy loop for both decrements.  seq == false: criterion over
// vec^l(s), removal of the two-step closure vec^{l,j}(s1).  seq == true:
// criterion and removal over vec^{j,l}(s).
void run_selection(const std::vector<TriTile>& tiles, const ModelSumAnalyzer::Impl& im,
                   const CoefTable* a, const std::vector<cplx>* b, int j, int l, bool seq,
                   double threshold_coef, Mask& mask, SelectionState& state) {
  std::vector<int> stamp(tiles.size(), -1);
  int stamp_id = 0;
  std::vector<int> scratch;
  for (;;) {
    // best selection this round: maximize the selection sum, break ties by
    // (strip_index, space center, frequency center, index) of the base
    double best_mass = 0.0;
    int best_seed = -1;
    std::vector<int> best_family;
    const auto& seed_groups = im.groups[static_cast<std::size_t>((seq ? j : l) - 1)];
    for (const auto& group : seed_groups) {
      int seed = -1;
      for (int m : group)
        if (mask[static_cast<std::size_t>(m)]) {
          seed = m;
          break;
        }
      if (seed < 0) continue;
      double mass = 0.0;
      if (seq) {
        collect_closure(im, seed, j, l, mask, scratch, stamp, stamp_id++);
        for (int u : scratch) mass += std::norm((*b)[static_cast<std::size_t>(u)]);
      } else {
        scratch.clear();
        for (int m : group)
          if (mask[static_cast<std::size_t>(m)]) {
            scratch.push_back(m);
            mass += std::norm((*a)[static_cast<std::size_t>(m)][static_cast<std::size_t>(j - 1)]);
          }
      }
      const double space_len = group_space_length(tiles, group);
      if (!(mass > 0.0) || mass < threshold_coef * space_len) continue;
      bool better = mass > best_mass;
      if (mass == best_mass && best_seed >= 0) {
        const TriTile& cand = tiles[static_cast<std::size_t>(seed)];
        const TriTile& cur = tiles[static_cast<std::size_t>(best_seed)];
        better = std::make_tuple(cand.strip_index, cand.space.center,
                                 cand.freq[0].center, seed) <
                 std::make_tuple(cur.strip_index, cur.space.center, cur.freq[0].center,
                                 best_seed);
      }
      if (better) {
        best_mass = mass;
        best_seed = seed;
        best_family = scratch;
      }
    }
    if (best_seed < 0) break;

    // removal set: two-step closure for the vectorized algorithm, the
    // criterion set itself for the sequence algorithm
    std::vector<int> removal;
    if (seq) {
      removal = best_family;
    } else {
      collect_closure(im, best_seed, l, j, mask, removal, stamp, stamp_id++);
    }
    VectorizedSet vs;
    vs.base = best_seed;
    vs.j = j;
    vs.l = l;
    vs.two_step = true;
    vs.members = removal;
    state.p2.push_back(std::move(vs));
    state.families.push_back(best_family);
    state.base_length_sum += tiles[static_cast<std::size_t>(best_seed)].space.length;
    for (int m : removal) mask[static_cast<std::size_t>(m)] = 0;
  }
}

}  // namespace

DecrementResult ModelSumAnalyzer::energy_decrement(const SampledFunction& f, int j, int l, int d,
                                                   std::optional<double> energy_ref) const {
  if (j == l || j < 1 || j > 2 || l < 1 || l > 2) fail("parameter-error", "need {j,l} = {1,2}");
  const auto a = coefficients(f);
  Mask mask(tc_.size(), 1);
  const double E =
      energy_ref ? *energy_ref
                 : energy_vec_table(tc_.tritiles(), *impl_, a, j, l, EnergyMode::greedy, mask).value;
  const double size0 = size_vec_table(tc_.tritiles(), *impl_, a, j, l, mask, nullptr);
  if (size0 > std::ldexp(E, -d) * (1.0 + 1e-12)) {
    char msg[160];
    std::snprintf(msg, sizeof(msg), "size %.6e exceeds 2^-d energy %.6e (d = %d)", size0,
                  std::ldexp(E, -d), d);
    fail("precondition-error", msg);
  }

  const double half_target = std::ldexp(E, -d - 1);
  const double threshold_coef = 0.25 * std::ldexp(E, -d) * std::ldexp(E, -d);
  SelectionState state;
  run_selection(tc_.tritiles(), *impl_, &a, nullptr, j, l, false, threshold_coef, mask, state);

  DecrementResult result;
  for (std::size_t m = 0; m < mask.size(); ++m)
    if (mask[m]) result.p1.push_back(static_cast<int>(m));
  result.p2 = std::move(state.p2);
  result.selection_families = std::move(state.families);

  auto& audit = result.audit;
  audit.energy = E;
  audit.size_before = size0;
  audit.size_after = size_vec_table(tc_.tritiles(), *impl_, a, j, l, mask, nullptr);
  audit.size_target = half_target;
  audit.base_length_sum = state.base_length_sum;
  audit.calg_ratio = state.base_length_sum / std::ldexp(1.0, 2 * d);
  audit.size_halving_ok = audit.size_after <= half_target * (1.0 + 1e-12);
  std::vector<int> bases;
  for (const auto& vs : result.p2) bases.push_back(vs.base);
  audit.disjointness = audit_strong_j_disjointness(result.selection_families, bases, j);
  std::size_t removed = 0;
  for (const auto& vs : result.p2) removed += vs.members.size();
  audit.cover_ok = removed + result.p1.size() == tc_.size();
  return result;
}

DecrementResult ModelSumAnalyzer::energy_decrement_seq(const std::vector<SampledFunction>& h,
                                                       int j, int l, int d,
                                                       std::optional<double> energy_ref) const {
  if (j == l || j < 1 || j > 2 || l < 1 || l > 2) fail("parameter-error", "need {j,l} = {1,2}");
  const auto b = seq_coefficients(h);
  Mask mask(tc_.size(), 1);
  const double E = energy_ref ? *energy_ref : energy_seq_table(b, mask).value;
  const double size0 = size_seq_table(tc_.tritiles(), *impl_, b, j, l, mask, nullptr);
  if (size0 > std::ldexp(E, -d) * (1.0 + 1e-12)) {
    char msg[160];
    std::snprintf(msg, sizeof(msg), "size %.6e exceeds 2^-d energy %.6e (d = %d)", size0,
                  std::ldexp(E, -d), d);
    fail("precondition-error", msg);
  }

  const double half_target = std::ldexp(E, -d - 1);
  const double threshold_coef = 0.25 * std::ldexp(E, -d) * std::ldexp(E, -d);
  SelectionState state;
  run_selection(tc_.tritiles(), *impl_, nullptr, &b, j, l, true, threshold_coef, mask, state);

  DecrementResult result;
  for (std::size_t m = 0; m < mask.size(); ++m)
    if (mask[m]) result.p1.push_back(static_cast<int>(m));
  result.p2 = std::move(state.p2);
  result.selection_families = std::move(state.families);

  auto& audit = result.audit;
  audit.energy = E;
  audit.size_before = size0;
  audit.size_after = size_seq_table(tc_.tritiles(), *impl_, b, j, l, mask, nullptr);
  audit.size_target = half_target;
  audit.base_length_sum = state.base_length_sum;
  audit.calg_ratio = state.base_length_sum / std::ldexp(1.0, 2 * d);
  audit.size_halving_ok = audit.size_after <= half_target * (1.0 + 1e-12);
  std::vector<int> bases;
  for (const auto& vs : result.p2) bases.push_back(vs.base);
  audit.disjointness = audit_strong_j_disjointness(result.selection_families, bases, j);
  std::size_t removed = 0;
  for (const auto& vs : result.p2) removed += vs.members.size();
  audit.cover_ok = removed + result.p1.size() == tc_.size();
  return result;
}

double ModelSumAnalyzer::model_sum_subset(const std::vector<int>& subset,
                                          const std::vector<std::array<cplx, 3>>& a1,
                                          const std::vector<std::array<cplx, 3>>& a2,
                                          const std::vector<cplx>& b) const {
  double total = 0.0;
  for (int i : subset) {
    const std::size_t s = static_cast<std::size_t>(i);
    const double term = std::abs(a1[s][0]) * std::abs(a2[s][1]) * std::abs(b[s]);
    total += term / std::sqrt(tc_.tritiles()[s].space.length);
  }
  return total;
}

double ModelSumAnalyzer::model_sum(const SampledFunction& f1, const SampledFunction& f2,
                                   const std::vector<SampledFunction>& h) const {
  const auto a1 = coefficients(f1);
  const auto a2 = coefficients(f2);
  const auto b = seq_coefficients(h);
  std::vector<int> all(tc_.size());
  for (std::size_t i = 0; i < tc_.size(); ++i) all[i] = static_cast<int>(i);
  return model_sum_subset(all, a1, a2, b);
}

std::vector<int> ModelSumAnalyzer::vec_members(int tile_index, int component) const {
  if (component < 1 || component > 3) fail("parameter-error", "component must be 1, 2 or 3");
  const auto& g = impl_->groups[static_cast<std::size_t>(component - 1)];
  return g[static_cast<std::size_t>(
      impl_->group_of[static_cast<std::size_t>(component - 1)][static_cast<std::size_t>(
          tile_index)])];
}

std::vector<int> ModelSumAnalyzer::vec_closure(int tile_index, int j, int l) const {
  Mask mask(tc_.size(), 1);
  std::vector<int> stamp(tc_.size(), -1);
  std::vector<int> out;
  collect_closure(*impl_, tile_index, j, l, mask, out, stamp, 0);
  return out;
}

std::pair<double, double> ModelSumAnalyzer::tritile_estimate(const SampledFunction& f1,
                                                             const SampledFunction& f2,
                                                             const std::vector<SampledFunction>& h,
                                                             int base, int j, int l) const {
  const auto a1 = coefficients(f1);
  const auto a2 = coefficients(f2);
  const auto b = seq_coefficients(h);
  const std::vector<int> members = vec_closure(base, j, l);
  const double lambda = model_sum_subset(members, a1, a2, b);
  const Mask mask(tc_.size(), 1);
  const double s1 = size_vec_table(tc_.tritiles(), *impl_, a1, 1, 2, mask, nullptr);
  const double s2 = size_vec_table(tc_.tritiles(), *impl_, a2, 2, 1, mask, nullptr);
  const double s3 = size_seq_table(tc_.tritiles(), *impl_, b, j, l, mask, nullptr);
  const double bound =
      tc_.tritiles()[static_cast<std::size_t>(base)].space.length * s1 * s2 * s3 * kTreeConstant;
  return {lambda, bound};
}

LambdaBoundResult ModelSumAnalyzer::lambda_bound(const SampledFunction& f1,
                                                 const SampledFunction& f2,
                                                 const std::vector<SampledFunction>& h, double p1,
                                                 double p2, double p3) const {
  for (double p : {p1, p2, p3})
    if (!(p > 2.0) || std::isinf(p)) fail("exponent-error", "lambda_bound needs p_i in (2, inf)");

  const auto& tiles = tc_.tritiles();
  const auto a1 = coefficients(f1);
  const auto a2 = coefficients(f2);
  const auto b = seq_coefficients(h);

  LambdaBoundResult out;
  Mask full(tc_.size(), 1);
  out.energies[0] = energy_vec_table(tiles, *impl_, a1, 1, 2, EnergyMode::greedy, full).value;
  out.energies[1] = energy_vec_table(tiles, *impl_, a2, 2, 1, EnergyMode::greedy, full).value;
  out.energies[2] = energy_seq_table(b, full).value;
  out.sizes[0] = size_vec_table(tiles, *impl_, a1, 1, 2, full, nullptr);
  out.sizes[1] = size_vec_table(tiles, *impl_, a2, 2, 1, full, nullptr);
  out.sizes[2] = size_seq_table(tiles, *impl_, b, 1, 2, full, nullptr);
  out.sizes[3] = size_seq_table(tiles, *impl_, b, 2, 1, full, nullptr);
  out.theta[0] = 1.0 - 2.0 / p1;
  out.theta[1] = 1.0 - 2.0 / p2;
  out.theta[2] = 1.0 - 2.0 / p3;

  std::vector<int> all(tc_.size());
  for (std::size_t i = 0; i < tc_.size(); ++i) all[i] = static_cast<int>(i);
  out.model_sum_value = model_sum_subset(all, a1, a2, b);

  // interpolation closed form (theta weights normalized when the exponents
  // do not satisfy sum 1/p_i = 1)
  {
    const double tsum = out.theta[0] + out.theta[1] + out.theta[2];
    const double t0 = out.theta[0] / tsum, t1 = out.theta[1] / tsum, t2 = out.theta[2] / tsum;
    const double s3 = out.sizes[2] + out.sizes[3];
    const auto powp = [](double base, double e) { return base > 0.0 ? std::pow(base, e) : 0.0; };
    out.interpolation_form = powp(out.energies[0], 1 - t0) * powp(out.sizes[0], t0) *
                             powp(out.energies[1], 1 - t1) * powp(out.sizes[1], t1) *
                             powp(out.energies[2], 1 - t2) * powp(s3, t2);
  }

  struct Slot {
    int j, l;
    bool seq;
    double energy;
  };
  const Slot slots[4] = {{1, 2, false, out.energies[0]},
                         {2, 1, false, out.energies[1]},
                         {1, 2, true, out.energies[2]},
                         {2, 1, true, out.energies[2]}};

  const auto slot_size = [&](const Slot& sl, const Mask& mask) {
    return sl.seq ? size_seq_table(tiles, *impl_, b, sl.j, sl.l, mask, nullptr)
                  : size_vec_table(tiles, *impl_, sl.seq ? a1 : (sl.j == 1 ? a1 : a2), sl.j, sl.l,
                                   mask, nullptr);
  };

  int d = 0;
  {
    bool have = false;
    double start = 0.0;
    for (const auto& sl : slots) {
      const double s = slot_size(sl, full);
      if (!(s > 0.0)) continue;
      if (!(sl.energy > 0.0)) fail("state-error", "positive size with vanishing energy");
      const double cand = std::floor(std::log2(sl.energy / s));
      start = have ? std::min(start, cand) : cand;
      have = true;
    }
    if (!have) {
      out.zero_tail = all;
      return out;
    }
    d = static_cast<int>(start);
  }

  Mask mask = full;
  for (int guard = 0; guard < 500; ++guard) {
    bool empty = true;
    for (char m : mask)
      if (m) {
        empty = false;
        break;
      }
    if (empty) break;

    LambdaLevel level;
    level.d = d;
    level.m1 = size_vec_table(tiles, *impl_, a1, 1, 2, mask, nullptr);
    level.m2 = size_vec_table(tiles, *impl_, a2, 2, 1, mask, nullptr);
    level.m3_12 = size_seq_table(tiles, *impl_, b, 1, 2, mask, nullptr);
    level.m3_21 = size_seq_table(tiles, *impl_, b, 2, 1, mask, nullptr);
    if (level.m1 == 0.0 || level.m2 == 0.0 || (level.m3_12 == 0.0 && level.m3_21 == 0.0)) {
      for (std::size_t m = 0; m < mask.size(); ++m)
        if (mask[m]) out.zero_tail.push_back(static_cast<int>(m));
      break;
    }

    std::vector<int> removed;
    for (const auto& sl : slots) {
      const double sigma = slot_size(sl, mask);
      if (sigma <= std::ldexp(sl.energy, -(d + 1))) continue;
      const double threshold_coef = 0.25 * std::ldexp(sl.energy, -d) * std::ldexp(sl.energy, -d);
      SelectionState state;
      if (sl.seq)
        run_selection(tiles, *impl_, nullptr, &b, sl.j, sl.l, true, threshold_coef, mask, state);
      else
        run_selection(tiles, *impl_, sl.j == 1 ? &a1 : &a2, nullptr, sl.j, sl.l, false,
                      threshold_coef, mask, state);
      const double m3 = sl.seq ? (sl.j == 1 ? level.m3_12 : level.m3_21)
                               : (sl.j == 1 ? level.m3_21 : level.m3_12);
      for (const auto& vs : state.p2) {
        const double base_len = tiles[static_cast<std::size_t>(vs.base)].space.length;
        level.base_length_sum += base_len;
        level.bound_d += base_len * level.m1 * level.m2 * m3 * kTreeConstant;
        for (int m : vs.members) removed.push_back(m);
      }
    }

    if (!removed.empty()) {
      std::sort(removed.begin(), removed.end());
      level.lambda_d = model_sum_subset(removed, a1, a2, b);
      level.tree_ok = level.lambda_d <= level.bound_d * (1.0 + 1e-9) + 1e-300;
      out.partition[d] = removed;
      out.bound += level.bound_d;
      out.levels.push_back(level);
    }
    ++d;
  }
  return out;
}

void save_csv(const TileCollection& tc, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("parameter-error", "cannot open '" + path + "' for writing");
  out << "I_center,I_length,w1_center,w1_length,w2_center,w2_length,w3_center,w3_length,"
         "strip_index\n";
  char line[256];
  for (const auto& s : tc.tritiles()) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  s.space.center, s.space.length, s.freq[0].center, s.freq[0].length,
                  s.freq[1].center, s.freq[1].length, s.freq[2].center, s.freq[2].length,
                  s.strip_index);
    out << line;
  }
}

TileCollection load_tritiles_csv(const std::string& path, IntervalCollection strips) {
  std::ifstream in(path);
  if (!in) fail("parameter-error", "cannot open '" + path + "' for reading");
  std::string line;
  std::getline(in, line);  // header
  std::vector<TriTile> tiles;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    double v[8];
    for (double& i : v) {
      std::getline(row, field, ',');
      i = std::stod(field);
    }
    std::getline(row, field, ',');
    tiles.push_back(TriTile{Interval{v[0], v[1]},
                            {Interval{v[2], v[3]}, Interval{v[4], v[5]}, Interval{v[6], v[7]}},
                            std::stoi(field)});
  }
  return TileCollection(std::move(tiles), std::move(strips));
}

}  // namespace bilintf
