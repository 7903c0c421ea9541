#pragma once

#include <string>
#include <vector>

#include "bilintf/errors.hpp"

namespace bilintf {

// Closed interval given by center and positive length.
struct Interval {
  double center = 0.0;
  double length = 1.0;

  double lo() const { return center - 0.5 * length; }
  double hi() const { return center + 0.5 * length; }
  Interval dilated(double factor) const { return {center, factor * length}; }
  bool contains(double t) const { return t >= lo() && t <= hi(); }
  bool contains_halfopen(double t) const { return t >= lo() && t < hi(); }
  bool contains(const Interval& other) const { return other.lo() >= lo() && other.hi() <= hi(); }

  static Interval from_endpoints(double lo, double hi);
};

inline bool overlap(const Interval& a, const Interval& b) {
  return a.lo() <= b.hi() && b.lo() <= a.hi();
}
inline bool same_interval(const Interval& a, const Interval& b) {
  return a.center == b.center && a.length == b.length;
}

// Smooth monotone step built from the standard mollifier exp(-1/t):
// exactly 0 for t <= 0, exactly 1 for t >= 1, C^infinity in between,
// and step(t) + step(1-t) = 1.
double smooth_step(double t);

// Finite collection of frequency intervals with a declared length range and a
// separation parameter kappa.  The well-distributed certificate (the overlap
// constant of the 2-dilates) is computed at construction.
class IntervalCollection {
 public:
  IntervalCollection(std::vector<Interval> intervals, double length_min, double length_max,
                     double kappa = 2.0);
  // Declared range inferred from the contents.
  static IntervalCollection of(std::vector<Interval> intervals, double kappa = 2.0);

  const std::vector<Interval>& intervals() const { return intervals_; }
  std::size_t size() const { return intervals_.size(); }
  double length_min() const { return length_min_; }
  double length_max() const { return length_max_; }
  double kappa() const { return kappa_; }
  int overlap_certificate() const { return certificate_; }
  // True when the declared range sits inside [1/10, 10].
  bool assumption_lengths() const { return length_min_ >= 0.1 && length_max_ <= 10.0; }

 private:
  std::vector<Interval> intervals_;
  double length_min_;
  double length_max_;
  double kappa_;
  int certificate_;
};

// Maximum number of factor-dilated intervals covering a single point.
// Exact plane sweep over the 2|Omega| dilated endpoints; closed intervals,
// so a shared endpoint counts for both.
int overlap_constant(const IntervalCollection& c, double factor);

// Smooth scaled cutoff adapted to an interval: 1 on the central
// flatness*|omega| plateau, supported exactly in omega, values in [0,1].
// derivative_constants[i] records the measured sup |D^i chi| * |omega|^i.
struct BumpSymbol {
  Interval interval;
  double flatness = 0.6;
  std::vector<double> derivative_constants;

  double operator()(double xi) const;
};

BumpSymbol make_bump(const Interval& omega, double flatness);

// Finite-difference audit of sup |D^i f| * |omega|^i for i = 0..max_order
// over a mesh on the interval.
std::vector<double> audit_derivative_constants(const BumpSymbol& bump, int max_order);

// One member of a Whitney partition of unity: rise on [u0,u1] times fall on
// [d0,d1]; support is exactly [u0, d1].
struct PartitionBump {
  double u0, u1, d0, d1;

  double operator()(double xi) const {
    const double up = smooth_step((xi - u0) / (u1 - u0));
    const double down = smooth_step((xi - d0) / (d1 - d0));
    return up * (1.0 - down);
  }
  Interval support() const { return Interval::from_endpoints(u0, d1); }
};

// Whitney piece i: the sub-collection Omega_i = (omega_i)_omega together with
// the partition members chi_{omega,i}, aligned index-for-index with the
// source collection.
struct WhitneyPiece {
  IntervalCollection sub;
  std::vector<PartitionBump> bumps;
};

// Splits every interval into N+1 overlapping windows (N = ceil(4 kappa)) so
// that each sub-collection satisfies the kappa-dilate overlap bound of the
// original 2-dilate certificate, with partitions of unity summing to 1 on
// each interval.
std::vector<WhitneyPiece> whitney_refine(const IntervalCollection& c, double kappa);

// CSV round trip (columns: center, length).
void save_csv(const IntervalCollection& c, const std::string& path);
IntervalCollection load_intervals_csv(const std::string& path, double kappa = 2.0);

}  // namespace bilintf
