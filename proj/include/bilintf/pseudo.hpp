#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "bilintf/grid.hpp"
#include "bilintf/intervals.hpp"
#include "bilintf/multiplier.hpp"
#include "bilintf/squarefn.hpp"

namespace bilintf {

// Unit vector in the frequency plane.
struct Direction {
  double x;
  double y;

  Direction(double x_, double y_);
  Direction perp() const { return Direction(-y, x); }
  double angle() const { return std::atan2(y, x); }
};

// Direction of the first/second adjoint class: cot(theta) + cot(theta*1) = -1
// and tan(theta) + tan(theta*2) = -1, computed on the circle so the
// horizontal/vertical limits need no special casing.
Direction adjoint_direction(const Direction& theta, int which);

// Adjoint symbols m1*(xi,eta) = conj m(-xi-eta, eta) and
// m2*(xi,eta) = conj m(xi, -eta-xi); support strips are transformed along.
SymbolDescriptor adjoint_symbol(const SymbolDescriptor& m, int which);

// Bilinear symbol with first-order L^s regularity along the direction theta.
// ridge_profile, when set, gives m(lambda) with lambda = <(xi,eta), theta>
// (the x-independent ridge case of the decomposition pipeline);
// ridge_derivative optionally supplies dm/dlambda analytically.
struct DirectionalSymbol {
  SymbolDescriptor base;
  Direction theta;
  double sobolev_s;
  std::function<double(double)> ridge_profile;
  std::function<double(double)> ridge_derivative;

  DirectionalSymbol(SymbolDescriptor base_, Direction theta_, double s_);
  static DirectionalSymbol ridge(std::function<double(double)> profile,
                                 std::function<double(double)> derivative, Direction theta,
                                 double s, std::optional<Interval> support = std::nullopt);
};

struct DirectionalNormResult {
  double value = 0.0;
  double window_radius = 0.0;
  bool boundary_nonvanishing = false;  // integrand alive at the truncation edge
};

// max over x-derivative orders a <= max_x_order of
// || sup_t ( |d_x^a m| + |d_x^a <grad m, theta>| ) ||_{L^s(d lambda)}
// on the Nyquist-truncated window; derivatives by central differences with
// step = frequency step / 4 unless the ridge derivative is supplied.
DirectionalNormResult directional_norm(const DirectionalSymbol& ds, const GridSpec& grid,
                                       int max_x_order = 0);

// Unit-translate decomposition m = sum_p chi(lambda - p) m(lambda) with the
// dyadic buckets D_k of translate weights w_p = int_{p-1}^{p+1} (|m| + |m'|).
struct TranslateDecomposition {
  Direction theta;
  std::vector<int> active;                // translates with nonzero pieces
  std::map<int, double> weights;          // p -> w_p
  std::map<int, std::vector<int>> buckets;  // k -> members of D_k
  double window_radius = 0.0;

  // sum_k 2^{k s} #D_k
  double bucket_series(double s) const;
};

TranslateDecomposition unit_decompose(const DirectionalSymbol& ds, const GridSpec& grid);

// Partition bump chi on [-1, 1] whose integer translates sum to 1 exactly.
double unit_partition_bump(double t);

// Piece m_p as an evaluable symbol (strip support along theta).
SymbolDescriptor translate_piece(const DirectionalSymbol& ds, int p);

struct BucketTerm {
  int k = 0;
  int cardinality = 0;
  double square_norm_r = 0.0;  // || (sum_{p in D_k} |T_{m_p}|^2)^{1/2} ||_r
  double term = 0.0;           // sqrt(#D_k) * square_norm_r
};

struct BucketEvalReport {
  std::vector<BucketTerm> terms;
  double assembled_bound = 0.0;  // sum of terms (Cauchy-Schwarz assembly)
  double series_value = 0.0;     // geometric tail sum_k 2^{k(2-s)} over buckets
  bool summability_warning = false;  // s >= 2 makes the k-series non-summable
};

// T_sigma(f,g) assembled bucket-by-bucket as sum_k sum_{p in D_k} T_{m_p};
// equals the direct evaluation of the full symbol.
std::pair<SampledFunction, BucketEvalReport> evaluate_via_buckets(
    const SampledFunction& f, const SampledFunction& g, const DirectionalSymbol& ds,
    const TranslateDecomposition& dec, const ExponentTriple& e);

struct TranslatedFamilyReport {
  double direct_norm = 0.0;           // || (sum_n |T_{phi_n}(f,g)|^2)^{1/2} ||_r
  double assembly = 0.0;              // sum_p || (sum_n |T_{phi_{p,n}}|^2)^{1/2} ||_r
  std::map<int, double> piece_sup;    // p -> ||phi_p||_inf
  double decay_exponent = 0.0;        // fitted N in ||phi_p||_inf <= C (1+|p|)^{-N}
  bool decay_warning = false;
};

// Translated diagonal family phi_n(lambda) = phi(lambda - n): compares the
// direct square-function norm against the Minkowski assembly over the unit
// decomposition of phi, and fits the translate sup-norm decay.
TranslatedFamilyReport translated_family_bound(const std::function<double(double)>& phi,
                                               const SampledFunction& f, const SampledFunction& g,
                                               const ExponentTriple& e, int n_lo, int n_hi,
                                               int p_lo, int p_hi);

}  // namespace bilintf
