#include "bilintf/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bilintf {

Interval Interval::from_endpoints(double lo, double hi) {
  if (!(hi > lo)) fail("parameter-error", "interval endpoints out of order");
  return {0.5 * (lo + hi), hi - lo};
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  // g(t)/(g(t)+g(1-t)) with g(t) = exp(-1/t)
  return 1.0 / (1.0 + std::exp(1.0 / t - 1.0 / (1.0 - t)));
}

IntervalCollection::IntervalCollection(std::vector<Interval> intervals, double length_min,
                                       double length_max, double kappa)
    : intervals_(std::move(intervals)),
      length_min_(length_min),
      length_max_(length_max),
      kappa_(kappa),
      certificate_(0) {
  if (intervals_.empty()) fail("empty-error", "interval collection is empty");
  if (!(length_min_ > 0.0) || length_max_ < length_min_)
    fail("parameter-error", "declared length range is invalid");
  if (kappa_ < 2.0) fail("parameter-error", "separation parameter kappa must be >= 2");
  for (const auto& w : intervals_) {
    if (!(w.length > 0.0)) fail("parameter-error", "interval length must be positive");
    if (w.length < length_min_ - 1e-12 || w.length > length_max_ + 1e-12)
      fail("parameter-error", "interval length outside the declared range");
  }
  certificate_ = overlap_constant(*this, 2.0);
}

IntervalCollection IntervalCollection::of(std::vector<Interval> intervals, double kappa) {
  if (intervals.empty()) fail("empty-error", "interval collection is empty");
  double lmin = intervals.front().length, lmax = intervals.front().length;
  for (const auto& w : intervals) {
    lmin = std::min(lmin, w.length);
    lmax = std::max(lmax, w.length);
  }
  return IntervalCollection(std::move(intervals), lmin, lmax, kappa);
}

int overlap_constant(const IntervalCollection& c, double factor) {
  if (c.intervals().empty()) fail("empty-error", "overlap_constant on empty collection");
  if (!(factor >= 1.0)) fail("parameter-error", "dilation factor must be >= 1");
  // endpoint sweep; +1 events sort before -1 events at equal coordinate so a
  // shared endpoint of closed intervals is counted by both
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * c.size());
  for (const auto& w : c.intervals()) {
    const Interval d = w.dilated(factor);
    events.emplace_back(d.lo(), +1);
    events.emplace_back(d.hi(), -1);
  }
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second > b.second;
  });
  int depth = 0, best = 0;
  for (const auto& [pos, delta] : events) {
    (void)pos;
    depth += delta;
    best = std::max(best, depth);
  }
  return best;
}

double BumpSymbol::operator()(double xi) const {
  const double ramp = 0.5 * (1.0 - flatness) * interval.length;
  const double up = smooth_step((xi - interval.lo()) / ramp);
  const double down = smooth_step((interval.hi() - xi) / ramp);
  return up * down;
}

BumpSymbol make_bump(const Interval& omega, double flatness) {
  if (!(flatness > 0.0) || !(flatness < 1.0))
    fail("parameter-error", "bump flatness must lie in (0, 1)");
  BumpSymbol bump{omega, flatness, {}};
  bump.derivative_constants = audit_derivative_constants(bump, 4);
  return bump;
}

std::vector<double> audit_derivative_constants(const BumpSymbol& bump, int max_order) {
  // Central differences with per-order steps balancing rounding against
  // truncation; the scan mesh stays fixed at 10^4 points on the interval.
  const int mesh = 10000;
  const Interval& w = bump.interval;
  std::vector<double> constants(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (int order = 0; order <= max_order; ++order) {
    const double h = w.length * std::pow(2.22e-16, 1.0 / (order + 2));
    double sup = 0.0;
    for (int m = 0; m <= mesh; ++m) {
      const double xi = w.lo() + w.length * static_cast<double>(m) / mesh;
      double value;
      switch (order) {
        case 0:
          value = bump(xi);
          break;
        case 1:
          value = (bump(xi + h) - bump(xi - h)) / (2.0 * h);
          break;
        case 2:
          value = (bump(xi + h) - 2.0 * bump(xi) + bump(xi - h)) / (h * h);
          break;
        case 3:
          value = (bump(xi + 2 * h) - 2.0 * bump(xi + h) + 2.0 * bump(xi - h) -
                   bump(xi - 2 * h)) /
                  (2.0 * h * h * h);
          break;
        default:
          value = (bump(xi + 2 * h) - 4.0 * bump(xi + h) + 6.0 * bump(xi) -
                   4.0 * bump(xi - h) + bump(xi - 2 * h)) /
                  (h * h * h * h);
          break;
      }
      sup = std::max(sup, std::abs(value));
    }
    constants[static_cast<std::size_t>(order)] = sup * std::pow(w.length, order);
  }
  return constants;
}

std::vector<WhitneyPiece> whitney_refine(const IntervalCollection& c, double kappa) {
  if (kappa < 2.0) fail("parameter-error", "whitney_refine requires kappa >= 2");
  const int n_windows = static_cast<int>(std::ceil(4.0 * kappa));
  std::vector<WhitneyPiece> pieces;
  pieces.reserve(static_cast<std::size_t>(n_windows) + 1);
  for (int i = -1; i <= n_windows - 1; ++i) {
    std::vector<Interval> subs;
    std::vector<PartitionBump> bumps;
    subs.reserve(c.size());
    bumps.reserve(c.size());
    for (const auto& w : c.intervals()) {
      const auto node = [&](int j) {
        return w.lo() + w.length * static_cast<double>(j) / n_windows;
      };
      // window omega_i = [node(i), node(i+2)]; the partition member rises on
      // [node(i), node(i+1)] and falls on [node(i+1), node(i+2)], so the
      // family telescopes to 1 on omega
      subs.push_back(Interval::from_endpoints(node(i), node(i + 2)));
      bumps.push_back(PartitionBump{node(i), node(i + 1), node(i + 1), node(i + 2)});
    }
    pieces.push_back(WhitneyPiece{
        IntervalCollection(std::move(subs), c.length_min() * 2.0 / n_windows,
                           c.length_max() * 2.0 / n_windows, kappa),
        std::move(bumps)});
  }
  return pieces;
}

void save_csv(const IntervalCollection& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("parameter-error", "cannot open '" + path + "' for writing");
  out << "center,length\n";
  char line[80];
  for (const auto& w : c.intervals()) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", w.center, w.length);
    out << line;
  }
}

IntervalCollection load_intervals_csv(const std::string& path, double kappa) {
  std::ifstream in(path);
  if (!in) fail("parameter-error", "cannot open '" + path + "' for reading");
  std::string line;
  std::getline(in, line);  // header
  std::vector<Interval> intervals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    intervals.push_back(Interval{std::stod(a), std::stod(b)});
  }
  return IntervalCollection::of(std::move(intervals), kappa);
}

}  // namespace bilintf
