#pragma once

#include <optional>
#include <vector>

#include "bilintf/grid.hpp"
#include "bilintf/intervals.hpp"
#include "bilintf/multiplier.hpp"

namespace bilintf {

enum class CutoffMode { sharp, smooth };

// Configuration of a square function over an interval collection.  In smooth
// mode every interval gets a mollifier bump of the given flatness unless a
// per-interval override is supplied in symbol_family (aligned with the
// collection; diagonal symbols for the bilinear case).
struct SquareFunctionSpec {
  IntervalCollection collection;
  CutoffMode mode = CutoffMode::smooth;
  double bump_flatness = 0.6;
  std::vector<std::optional<SymbolDescriptor>> symbol_family;
  bool relaxed_lengths = false;

  explicit SquareFunctionSpec(IntervalCollection c) : collection(std::move(c)) {}
};

// x -> ( sum_n |pi_{omega_n} f(x)|^2 )^{1/2} (sharp) or the smooth variant.
// Sharp mode requires pairwise-disjoint intervals (half-open convention);
// overlapping interiors raise disjointness-error.
SampledFunction linear_square_function(const SampledFunction& f, const SquareFunctionSpec& spec);

// S_Omega(f,g) = ( sum_omega |T_{chi_omega}(f,g)|^2 )^{1/2}, one
// bilinear_diagonal evaluation per interval, deterministic summation order.
// Unless relaxed_lengths is set, the collection must declare lengths in
// [1/10, 10] (assumption-error otherwise).
SampledFunction bilinear_square_function(const SampledFunction& f, const SampledFunction& g,
                                         const SquareFunctionSpec& spec);

// ||S_Omega(f,g)||_r / (||f||_p ||g||_q); degenerate-input-error when the
// denominator vanishes.  Exponents outside the local-L^2 range are allowed
// (callers surface the warning via e.local_l2()).
double norm_ratio(const SampledFunction& f, const SampledFunction& g,
                  const SquareFunctionSpec& spec, const ExponentTriple& e);

}  // namespace bilintf
